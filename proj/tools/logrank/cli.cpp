#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "logrank/errors.hpp"
#include "logrank/jl.hpp"
#include "logrank/matcore.hpp"
#include "logrank/matrix_io.hpp"
#include "logrank/rng.hpp"
#include "logrank/spec_file.hpp"
#include "logrank/taylor.hpp"

namespace logrank::cli {

namespace {

const std::set<std::string> kScanKeys = {"epsilons", "n_values", "draws_per_cell", "master_seed"};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

template <class T>
bool ascending(const std::vector<T>& v) {
  return std::adjacent_find(v.begin(), v.end(), [](const T& a, const T& b) { return !(a < b); }) == v.end();
}

struct Model {
  std::optional<LvmSpec> single;
  std::optional<PiecewiseLvmSpec> piecewise;
  std::optional<std::uint64_t> seed;
};

Model load_model(const std::string& path) {
  const auto kv = KeyValueMap::load(path);
  Model m;
  if (is_piecewise_model(kv)) {
    auto f = parse_piecewise_model(kv);
    m.piecewise.emplace(std::move(f.spec));
    m.seed = f.seed;
  } else {
    auto f = parse_lvm_model(kv);
    m.single.emplace(std::move(f.spec));
    m.seed = f.seed;
  }
  return m;
}

const LvmSpec& require_single(const Model& m, const std::string& method) {
  if (!m.single) throw ArgumentError("method '" + method + "' needs a single (non-piecewise) model");
  return *m.single;
}

void print_kv(std::ostream& out, const std::string& key, const std::string& value) {
  out << key << '=' << value << '\n';
}

void print_approx(std::ostream& out, const CompressedApprox& a) {
  print_kv(out, "achieved_max_error", shortest(a.achieved_max_error));
  print_kv(out, "error_target", shortest(a.epsilon * a.reference_norm));
  print_kv(out, "rank", std::to_string(a.rank));
  print_kv(out, "rank_budget", std::to_string(a.rank_budget));
  print_kv(out, "log_rank_budget", shortest(a.log_rank_budget));
  print_kv(out, "retries_used", std::to_string(a.retries_used));
  print_kv(out, "nontrivial", a.nontrivial ? "true" : "false");
  print_kv(out, "sketch", to_string(a.sketch));
}

// ---------------------------------------------------------------- commands

struct GenerateArgs {
  std::string spec;
  std::size_t m = 0;
  std::size_t n = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool symmetric = false;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const Model model = load_model(a.spec);
  const std::uint64_t seed = a.seed.value_or(model.seed.value_or(0));
  if (a.n == 0) throw ArgumentError("--n must be positive");
  DenseMatrix x;
  if (a.symmetric) {
    if (a.m != 0 && a.m != a.n) throw ArgumentError("--symmetric needs m = n");
    const LvmSpec& spec = require_single(model, "generate --symmetric");
    x = generate_symmetric_matrix(spec, sample_alphas(spec, a.n, seed));
  } else {
    if (a.m == 0) throw ArgumentError("--m must be positive");
    if (model.piecewise) {
      x = generate_piecewise_matrix(*model.piecewise, sample_latents(model.piecewise->sampling_spec(), a.m, a.n, seed));
    } else {
      x = generate_matrix(*model.single, sample_latents(*model.single, a.m, a.n, seed));
    }
  }
  write_matrix(x, a.out);
  print_kv(out, "rows", std::to_string(x.rows()));
  print_kv(out, "cols", std::to_string(x.cols()));
  print_kv(out, "seed", std::to_string(seed));
  print_kv(out, "max_norm", shortest(max_abs_norm(x)));
  print_kv(out, "spectral_norm", shortest(spectral_norm(x)));
  print_kv(out, "out", a.out);
  return kOk;
}

int cmd_rankbound(const std::string& matrix, double epsilon, std::ostream& out) {
  const DenseMatrix x = read_matrix(matrix);
  const RankBoundResult r = rank_eps_upper_bound(x, epsilon);
  print_kv(out, "rank_upper_bound", std::to_string(r.rank_upper_bound));
  out << "r,mu_r\n";
  for (std::size_t i = 0; i < r.mu_curve.size(); ++i) out << i << ',' << shortest(r.mu_curve[i]) << '\n';
  return kOk;
}

struct ApproxArgs {
  std::string spec;
  std::string matrix;
  std::string method;
  double epsilon = 0.1;
  std::optional<std::uint64_t> seed;
  std::string out;
  int max_retries = 20;
  std::size_t m = 0;
  std::size_t n = 0;
  std::optional<std::size_t> sketch_dim;
};

int cmd_approx(const ApproxArgs& a, std::ostream& out) {
  CompressOptions opts;
  opts.max_retries = a.max_retries;
  opts.sketch_dim = a.sketch_dim;
  print_kv(out, "method", a.method);
  print_kv(out, "epsilon", shortest(a.epsilon));

  if (a.method == "theorem0") {
    if (a.matrix.empty() == a.spec.empty()) throw ArgumentError("theorem0 needs exactly one of --matrix or --spec");
    std::uint64_t seed = a.seed.value_or(0);
    DenseMatrix x;
    if (!a.matrix.empty()) {
      x = read_matrix(a.matrix);
    } else {
      const Model model = load_model(a.spec);
      seed = a.seed.value_or(model.seed.value_or(0));
      if (a.m == 0 || a.n == 0) throw ArgumentError("--m and --n are required with --spec");
      x = model.piecewise ? generate_piecewise_matrix(*model.piecewise,
                                                      sample_latents(model.piecewise->sampling_spec(), a.m, a.n, seed))
                          : generate_matrix(*model.single, sample_latents(*model.single, a.m, a.n, seed));
    }
    const CompressedApprox c = theorem0_compress(x, a.epsilon, seed, opts);
    save_compressed(c, a.out);
    print_approx(out, c);
    return kOk;
  }

  if (a.spec.empty() || !a.matrix.empty()) throw ArgumentError("method '" + a.method + "' needs --spec and no --matrix");
  const Model model = load_model(a.spec);
  const std::uint64_t seed = a.seed.value_or(model.seed.value_or(0));
  if (a.n == 0) throw ArgumentError("--n must be positive");
  const std::size_t m = a.method == "theorem4" ? a.n : a.m;
  if (m == 0) throw ArgumentError("--m must be positive");

  if (a.method == "taylor") {
    const LvmSpec& spec = require_single(model, a.method);
    const LatentSample sample = sample_latents(spec, m, a.n, seed);
    const DenseMatrix reference = generate_matrix(spec, sample);
    TaylorOptions topts;
    topts.reference = &reference;
    const TaylorFactorization f = taylor_factorize(spec, sample, a.epsilon, topts);
    save_taylor(f, a.out);
    print_kv(out, "achieved_max_error", shortest(f.achieved_error));
    print_kv(out, "error_bound", shortest(f.error_bound));
    print_kv(out, "rank", std::to_string(f.n_tilde));
    print_kv(out, "K", std::to_string(f.k_selected));
    print_kv(out, "K_effective", std::to_string(f.k_effective));
    print_kv(out, "log_c_u", shortest(f.log_c_u));
    print_kv(out, "log_c_v", shortest(f.log_c_v));
    print_kv(out, "retries_used", "0");
    print_kv(out, "nontrivial", f.n_tilde < std::min(m, a.n) ? "true" : "false");
    return kOk;
  }
  if (a.method == "theorem2") {
    const PipelineResult p = theorem2_pipeline(require_single(model, a.method), m, a.n, a.epsilon, seed, opts);
    save_compressed(p.approx, a.out);
    print_approx(out, p.approx);
    return kOk;
  }
  if (a.method == "theorem3") {
    const PiecewiseLvmSpec spec =
        model.piecewise ? *model.piecewise
                        : PiecewiseLvmSpec({Piece{*model.single, Box::cube(model.single->dim(), model.single->radius()),
                                                  Box::cube(model.single->dim(), model.single->radius())}});
    const PiecewisePipelineResult p = theorem3_pipeline(spec, m, a.n, a.epsilon, seed, opts);
    save_compressed(p.approx, a.out);
    print_kv(out, "pieces", std::to_string(spec.size()));
    print_approx(out, p.approx);
    return kOk;
  }
  if (a.method == "theorem4") {
    const LvmSpec& spec = require_single(model, a.method);
    const SymmetricResult r = theorem4_compress(spec, sample_alphas(spec, a.n, seed), a.epsilon, seed, opts);
    save_compressed(r.approx, a.out);
    print_approx(out, r.approx);
    return kOk;
  }
  throw ArgumentError("unknown method '" + a.method + "'");
}

int cmd_scan(const std::string& config_path, bool full_scale, std::optional<std::uint64_t> seed,
             const std::string& csv_path, std::string svg_path, std::ostream& out, std::ostream& err) {
  const ScanConfig config = [&] {
    if (full_scale) {
      std::uint64_t master = seed.value_or(0);
      if (!config_path.empty()) master = seed.value_or(load_scan_config(config_path).master_seed);
      return full_scale_config(master);
    }
    if (config_path.empty()) throw ArgumentError("scan needs --config (or --full-scale)");
    ScanConfig c = load_scan_config(config_path);
    if (seed) c.master_seed = *seed;
    return c;
  }();
  const auto records = run_scan(config, [&](std::size_t n, std::size_t draw, double s) {
    err << "scan: n=" << n << " draw=" << draw << " " << shortest(s) << "s\n";
  });
  write_text(csv_path, scan_csv(records));
  if (svg_path.empty()) svg_path = std::filesystem::path(csv_path).replace_extension(".svg").string();
  write_text(svg_path, scan_svg(records));
  print_kv(out, "rows", std::to_string(records.size()));
  print_kv(out, "csv", csv_path);
  print_kv(out, "svg", svg_path);
  return kOk;
}

}  // namespace

// ---------------------------------------------------------------- helpers

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

int exit_code_for(const std::exception& e) {
  const auto* le = dynamic_cast<const Error*>(&e);
  if (!le) return kNumerical;
  switch (le->kind()) {
    case ErrorKind::Numerical:
    case ErrorKind::ProbabilisticFailure:
    case ErrorKind::InternalConsistency: return kNumerical;
    case ErrorKind::Capacity: return kCapacity;
    default: return kUsage;
  }
}

ScanConfig parse_scan_config(const KeyValueMap& kv) {
  const auto model = parse_lvm_model(kv, [](const std::string& k) { return kScanKeys.count(k) != 0; });
  ScanConfig c{model.spec, kv.get_double_list("epsilons"), {}, 1, 0};
  for (double e : c.epsilons) {
    if (!(e > 0.0)) kv.fail("epsilons", "values must be positive");
  }
  if (c.epsilons.empty() || !ascending(c.epsilons)) kv.fail("epsilons", "must be a strictly ascending list");
  for (auto v : kv.get_int_list("n_values")) {
    if (v < 1) kv.fail("n_values", "values must be positive");
    c.n_values.push_back(static_cast<std::size_t>(v));
  }
  if (c.n_values.empty() || !ascending(c.n_values)) kv.fail("n_values", "must be a strictly ascending list");
  const auto draws = kv.get_int("draws_per_cell");
  if (draws < 1) kv.fail("draws_per_cell", "must be at least 1");
  c.draws = static_cast<std::size_t>(draws);
  c.master_seed = kv.find_u64("master_seed").value_or(model.seed.value_or(0));
  return c;
}

ScanConfig load_scan_config(const std::filesystem::path& path) { return parse_scan_config(KeyValueMap::load(path)); }

ScanConfig full_scale_config(std::uint64_t master_seed) {
  return ScanConfig{LvmSpec::rbf(1000, 1.0, LatentDistribution::UniformSphere),
                    {1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2},
                    {300, 500, 1000, 1500, 2000, 3000},
                    5,
                    master_seed};
}

std::uint64_t scan_seed(std::uint64_t master_seed, std::size_t n, std::size_t draw) {
  return derive_seed(master_seed, n, draw);
}

std::vector<ScanRecord> run_scan(const ScanConfig& config, const ScanProgress& progress) {
  const std::size_t ne = config.epsilons.size();
  // ranks[e][ni][d], times[ni][d]
  std::vector<std::vector<std::vector<std::size_t>>> ranks(
      ne, std::vector<std::vector<std::size_t>>(config.n_values.size(), std::vector<std::size_t>(config.draws)));
  std::vector<std::vector<double>> times(config.n_values.size(), std::vector<double>(config.draws));
  const double eps_min = config.epsilons.front();
  for (std::size_t ni = 0; ni < config.n_values.size(); ++ni) {
    const std::size_t n = config.n_values[ni];
    for (std::size_t d = 0; d < config.draws; ++d) {
      const auto start = std::chrono::steady_clock::now();
      try {
        const std::uint64_t seed = scan_seed(config.master_seed, n, d);
        const DenseMatrix x = generate_matrix(config.spec, sample_latents(config.spec, n, n, seed));
        // One μ scan down to the smallest ε answers every larger ε too.
        const RankBoundResult r = rank_eps_upper_bound(x, eps_min);
        for (std::size_t e = 0; e < ne; ++e) {
          ranks[e][ni][d] = first_rank_at_or_below(r.mu_curve, config.epsilons[e]);
        }
      } catch (const Error& ex) {
        throw Error(ex.kind(), "scan cell n=" + std::to_string(n) + " draw=" + std::to_string(d) + ": " + ex.what());
      }
      times[ni][d] = seconds_since(start);
      if (progress) progress(n, d, times[ni][d]);
    }
  }
  std::vector<ScanRecord> out;
  for (std::size_t e = 0; e < ne; ++e) {
    for (std::size_t ni = 0; ni < config.n_values.size(); ++ni) {
      ScanRecord max_row{config.epsilons[e], config.n_values[ni], 0, true, 0, 0.0};
      for (std::size_t d = 0; d < config.draws; ++d) {
        out.push_back({config.epsilons[e], config.n_values[ni], d, false, ranks[e][ni][d], times[ni][d]});
        max_row.rank_upper_bound = std::max(max_row.rank_upper_bound, ranks[e][ni][d]);
        max_row.wall_time_seconds = std::max(max_row.wall_time_seconds, times[ni][d]);
      }
      out.push_back(max_row);
    }
  }
  return out;
}

std::string scan_csv(const std::vector<ScanRecord>& records) {
  std::ostringstream out;
  out << "epsilon,n,draw,rank_upper_bound,wall_time_seconds\n";
  for (const auto& r : records) {
    out << shortest(r.epsilon) << ',' << r.n << ',' << (r.is_max ? std::string("max") : std::to_string(r.draw)) << ','
        << r.rank_upper_bound << ',' << shortest(r.wall_time_seconds) << '\n';
  }
  return out.str();
}

std::string scan_svg(const std::vector<ScanRecord>& records) {
  constexpr double kW = 900, kH = 600, kLeft = 90, kRight = 180, kTop = 40, kBottom = 70;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  std::map<double, std::vector<std::pair<std::size_t, std::size_t>>> curves;
  std::set<std::size_t> ns;
  std::size_t ymax = 1;
  for (const auto& r : records) {
    if (!r.is_max) continue;
    curves[r.epsilon].emplace_back(r.n, r.rank_upper_bound);
    ns.insert(r.n);
    ymax = std::max(ymax, r.rank_upper_bound);
  }
  const double x_lo = ns.empty() ? 0.0 : std::log10(static_cast<double>(*ns.begin()));
  double x_hi = ns.empty() ? 1.0 : std::log10(static_cast<double>(*ns.rbegin()));
  if (x_hi - x_lo < 1e-9) x_hi = x_lo + 1.0;
  // Round the y range up to a multiple of a 1-2-5 step.
  const double raw_step = static_cast<double>(ymax) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
  const double step = raw_step <= mag ? mag : raw_step <= 2 * mag ? 2 * mag : raw_step <= 5 * mag ? 5 * mag : 10 * mag;
  const double y_top = step * std::ceil(static_cast<double>(ymax) / step);
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double n) { return kLeft + (std::log10(n) - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double r) { return kTop + ph - r / y_top * ph; };

  std::ostringstream s;
  s.precision(6);
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"600\" viewBox=\"0 0 900 600\">\n"
    << "<rect width=\"900\" height=\"600\" fill=\"white\"/>\n"
    << "<g font-family=\"sans-serif\" font-size=\"13\" fill=\"black\">\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph
    << "\" stroke=\"black\"/>\n";
  for (std::size_t n : ns) {
    const double x = px(static_cast<double>(n));
    s << "<line x1=\"" << x << "\" y1=\"" << kTop + ph << "\" x2=\"" << x << "\" y2=\"" << kTop + ph + 6
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << x << "\" y=\"" << kTop + ph + 22 << "\" text-anchor=\"middle\">" << n << "</text>\n";
  }
  for (double v = 0.0; v <= y_top + 1e-9; v += step) {
    const double y = py(v);
    s << "<line x1=\"" << kLeft - 6 << "\" y1=\"" << y << "\" x2=\"" << kLeft + pw << "\" y2=\"" << y
      << "\" stroke=\"" << (v == 0.0 ? "black" : "#dddddd") << "\"/>\n";
    s << "<text x=\"" << kLeft - 10 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << shortest(v) << "</text>\n";
  }
  s << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 20 << "\" text-anchor=\"middle\">n</text>\n";
  s << "<text x=\"25\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 25 "
    << kTop + ph / 2 << ")\">rank upper bound</text>\n";

  std::size_t c = 0;
  for (const auto& [eps, pts] : curves) {
    const char* color = kColors[c % (sizeof kColors / sizeof *kColors)];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [n, r] : pts) s << px(static_cast<double>(n)) << ',' << py(static_cast<double>(r)) << ' ';
    s << "\"/>\n";
    for (const auto& [n, r] : pts) {
      s << "<circle cx=\"" << px(static_cast<double>(n)) << "\" cy=\"" << py(static_cast<double>(r))
        << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 20 + 22.0 * static_cast<double>(c);
    s << "<line x1=\"" << kW - kRight + 20 << "\" y1=\"" << ly << "\" x2=\"" << kW - kRight + 50 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << kW - kRight + 58 << "\" y=\"" << ly + 4 << "\">ε = " << shortest(eps) << "</text>\n";
    ++c;
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

// ---------------------------------------------------------------- entry point

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank structure of latent variable model matrices"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Sample a model matrix and write it as EPSR");
  g->add_option("--spec", gen.spec, "Model file")->required();
  g->add_option("--m", gen.m, "Rows");
  g->add_option("--n", gen.n, "Columns")->required();
  g->add_option("--seed", gen.seed, "Latent seed (default: model file seed, else 0)");
  g->add_option("--out", gen.out, "Output EPSR path")->required();
  g->add_flag("--symmetric", gen.symmetric, "X_ij = f(alpha_i, alpha_j)");

  std::string rb_matrix;
  double rb_eps = 0.0;
  auto* rb = app.add_subcommand("rankbound", "Upper-bound the epsilon-rank of an EPSR matrix via mu_r");
  rb->add_option("--matrix", rb_matrix, "EPSR matrix")->required();
  rb->add_option("--epsilon", rb_eps, "Max-norm tolerance")->required();

  ApproxArgs ap;
  auto* apc = app.add_subcommand("approx", "Build a low-rank approximation");
  apc->add_option("--spec", ap.spec, "Model file");
  apc->add_option("--matrix", ap.matrix, "EPSR matrix (theorem0 only)");
  apc->add_option("--method", ap.method, "theorem0 | taylor | theorem2 | theorem3 | theorem4")
      ->required()
      ->check(CLI::IsMember({"theorem0", "taylor", "theorem2", "theorem3", "theorem4"}));
  apc->add_option("--epsilon", ap.epsilon, "Relative tolerance in (0, 1)")->required();
  apc->add_option("--seed", ap.seed, "Seed for latents and sketches");
  apc->add_option("--out", ap.out, "Output prefix")->required();
  apc->add_option("--max-retries", ap.max_retries, "Extra sketch draws allowed")->capture_default_str();
  apc->add_option("--m", ap.m, "Rows when generating from a model");
  apc->add_option("--n", ap.n, "Columns when generating from a model");
  apc->add_option("--sketch-dim", ap.sketch_dim, "Project to this dimension instead of the theoretical r");

  std::string sc_config, sc_out, sc_svg;
  bool sc_full = false;
  std::optional<std::uint64_t> sc_seed;
  auto* sc = app.add_subcommand("scan", "Rank upper bounds over a grid of epsilon and n");
  sc->add_option("--config", sc_config, "Scan config file");
  sc->add_option("--out", sc_out, "Output CSV")->required();
  sc->add_option("--svg", sc_svg, "Output SVG (default: CSV path with .svg)");
  sc->add_option("--seed", sc_seed, "Override master_seed");
  sc->add_flag("--full-scale", sc_full, "N = 1000, n up to 3000, epsilon down to 1e-4 (slow)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (g->parsed()) return cmd_generate(gen, out);
    if (rb->parsed()) return cmd_rankbound(rb_matrix, rb_eps, out);
    if (apc->parsed()) return cmd_approx(ap, out);
    if (sc->parsed()) return cmd_scan(sc_config, sc_full, sc_seed, sc_out, sc_svg, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kUsage;
}

}  // namespace logrank::cli
