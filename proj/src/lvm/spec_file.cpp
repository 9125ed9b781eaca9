#include "logrank/spec_file.hpp"

#include <set>

#include "logrank/errors.hpp"

namespace logrank {

namespace {

const std::set<std::string> kTopKeys = {"family", "N", "R", "C", "M", "sup_norm", "distribution", "seed", "terms"};
const std::set<std::string> kPieceKeys = {"family", "C", "M", "sup_norm", "terms", "alpha_cell", "beta_cell"};

int positive_int(const KeyValueMap& kv, const std::string& key) {
  const auto v = kv.get_int(key);
  if (v < 1 || v > 1'000'000) kv.fail(key, "must be a positive integer");
  return static_cast<int>(v);
}

template <class Fn>
auto with_key(const KeyValueMap& kv, const std::string& key, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    kv.fail(key, e.what());
  }
}

// Builds one model from the keys under prefix ("" or "piece.<l>.").
LvmSpec build_model(const KeyValueMap& kv, const std::string& prefix, int dim, double radius,
                    LatentDistribution dist) {
  const std::string family_key = prefix + "family";
  const Family family = with_key(kv, family_key, [&] { return parse_family(kv.get_string(family_key)); });
  const std::string terms_key = prefix + "terms";
  if (family != Family::Polynomial && kv.contains(terms_key)) kv.fail(terms_key, "only valid for polynomial");

  LvmSpec spec = with_key(kv, family_key, [&] {
    switch (family) {
      case Family::InnerProduct: return LvmSpec::inner_product(dim, radius, dist);
      case Family::RbfKernel: return LvmSpec::rbf(dim, radius, dist);
      default: break;
    }
    return LvmSpec::polynomial(dim, radius, with_key(kv, terms_key, [&] {
                                 return parse_terms(kv.get_string(terms_key), dim);
                               }),
                               dist);
  });

  const auto c = kv.find_double(prefix + "C");
  const auto m = kv.find_double(prefix + "M");
  if (c || m) {
    spec = with_key(kv, prefix + (c ? "C" : "M"),
                    [&] { return spec.with_constants(c.value_or(spec.c()), m.value_or(spec.m())); });
  }
  if (const auto s = kv.find_double(prefix + "sup_norm")) {
    spec = with_key(kv, prefix + "sup_norm", [&] { return spec.with_sup_norm(*s); });
  }
  return spec;
}

struct Shared {
  int dim;
  double radius;
  LatentDistribution dist;
  std::optional<std::uint64_t> seed;
};

Shared shared_keys(const KeyValueMap& kv) {
  Shared s{positive_int(kv, "N"), kv.get_double("R"), LatentDistribution::UniformBall, kv.find_u64("seed")};
  if (!(s.radius > 0.0)) kv.fail("R", "must be positive");
  if (const auto d = kv.find_string("distribution")) {
    s.dist = with_key(kv, "distribution", [&] { return parse_distribution(*d); });
  }
  return s;
}

}  // namespace

LatentDistribution parse_distribution(std::string_view text) {
  if (text == "uniform_ball") return LatentDistribution::UniformBall;
  if (text == "uniform_sphere") return LatentDistribution::UniformSphere;
  if (text == "uniform_interval") return LatentDistribution::UniformInterval;
  throw ParseError("unknown distribution '" + std::string(text) +
                   "' (expected uniform_ball, uniform_sphere or uniform_interval)");
}

Family parse_family(std::string_view text) {
  if (text == "inner_product") return Family::InnerProduct;
  if (text == "rbf") return Family::RbfKernel;
  if (text == "polynomial") return Family::Polynomial;
  if (text == "custom") throw ParseError("the custom family is only available through the library API");
  throw ParseError("unknown family '" + std::string(text) + "' (expected inner_product, rbf or polynomial)");
}

std::vector<PolynomialTerm> parse_terms(std::string_view text, int dim) {
  std::vector<PolynomialTerm> out;
  for (const auto& item : split(text, ';')) {
    if (item.empty()) continue;
    const auto parts = split(item, ':');
    if (parts.size() != 3) throw ParseError("term '" + item + "' is not coef:alpha_exps:beta_exps");
    PolynomialTerm t;
    t.coefficient = parse_double(parts[0]);
    for (int side = 1; side <= 2; ++side) {
      auto& exps = side == 1 ? t.alpha_exponents : t.beta_exponents;
      for (const auto& e : split(parts[side], ',')) {
        const auto v = parse_int(e);
        if (v < 0 || v > 64) throw ParseError("exponent " + e + " out of range [0, 64]");
        exps.push_back(static_cast<int>(v));
      }
      if (exps.size() != static_cast<std::size_t>(dim)) {
        throw ParseError("term '" + item + "' needs " + std::to_string(dim) + " exponents per side");
      }
    }
    out.push_back(std::move(t));
  }
  if (out.empty()) throw ParseError("polynomial needs at least one term");
  return out;
}

Box parse_box(std::string_view text, int dim) {
  Box box;
  std::string rest(text);
  // Axis separator is " x " so that exponents such as 1e-3 stay intact.
  std::size_t start = 0;
  while (true) {
    const auto pos = rest.find(" x ", start);
    const std::string part = trim(std::string_view(rest).substr(start, pos == std::string::npos ? pos : pos - start));
    if (part.size() < 5 || part.front() != '[' || (part.back() != ')' && part.back() != ']')) {
      throw ParseError("interval '" + part + "' is not [lo,hi) or [lo,hi]");
    }
    const auto bounds = split(std::string_view(part).substr(1, part.size() - 2), ',');
    if (bounds.size() != 2) throw ParseError("interval '" + part + "' needs two bounds");
    box.axes.push_back(Interval{parse_double(bounds[0]), parse_double(bounds[1]), part.back() == ']'});
    if (pos == std::string::npos) break;
    start = pos + 3;
  }
  if (box.axes.size() != static_cast<std::size_t>(dim)) {
    throw ParseError("box '" + std::string(text) + "' has " + std::to_string(box.axes.size()) +
                     " intervals, expected " + std::to_string(dim));
  }
  return box;
}

bool is_piecewise_model(const KeyValueMap& kv) { return kv.contains("pieces"); }

LvmModelFile parse_lvm_model(const KeyValueMap& kv, const KeyFilter& extra_keys) {
  if (is_piecewise_model(kv)) kv.fail("pieces", "piecewise models are not accepted here");
  kv.require_known([&](const std::string& k) { return kTopKeys.count(k) || (extra_keys && extra_keys(k)); });
  const Shared s = shared_keys(kv);
  return LvmModelFile{build_model(kv, "", s.dim, s.radius, s.dist), s.seed};
}

PiecewiseModelFile parse_piecewise_model(const KeyValueMap& kv, const KeyFilter& extra_keys) {
  const int count = positive_int(kv, "pieces");
  kv.require_known([&](const std::string& k) {
    if (k == "pieces" || k == "N" || k == "R" || k == "distribution" || k == "seed") return true;
    if (extra_keys && extra_keys(k)) return true;
    if (k.rfind("piece.", 0) != 0) return false;
    const auto dot = k.find('.', 6);
    if (dot == std::string::npos) return false;
    try {
      const auto l = parse_int(std::string_view(k).substr(6, dot - 6));
      return l >= 0 && l < count && kPieceKeys.count(k.substr(dot + 1)) != 0;
    } catch (const ParseError&) {
      return false;
    }
  });
  const Shared s = shared_keys(kv);
  std::vector<Piece> pieces;
  for (int l = 0; l < count; ++l) {
    const std::string prefix = "piece." + std::to_string(l) + ".";
    Piece p{build_model(kv, prefix, s.dim, s.radius, s.dist), Box::cube(s.dim, s.radius),
            Box::cube(s.dim, s.radius)};
    for (const char* side : {"alpha_cell", "beta_cell"}) {
      const std::string key = prefix + side;
      if (const auto text = kv.find_string(key)) {
        (std::string(side) == "alpha_cell" ? p.alpha_cell : p.beta_cell) =
            with_key(kv, key, [&] { return parse_box(*text, s.dim); });
      }
    }
    pieces.push_back(std::move(p));
  }
  try {
    return PiecewiseModelFile{PiecewiseLvmSpec(std::move(pieces)), s.seed};
  } catch (const Error& e) {
    kv.fail("pieces", e.what());
  }
}

LvmModelFile load_lvm_model(const std::filesystem::path& path) { return parse_lvm_model(KeyValueMap::load(path)); }

}  // namespace logrank
