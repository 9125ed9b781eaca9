#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "logrank/keyvalue.hpp"
#include "logrank/lvm.hpp"
#include "logrank/piecewise.hpp"

namespace logrank {

// Model files are flat "key = value" text. Single-model keys:
//
//   family        inner_product | rbf | polynomial
//   N, R          latent dimension and radius
//   C, M          optional niceness-constant overrides
//   sup_norm      optional declared ‖f‖ (rejected if below the observed sup)
//   distribution  uniform_ball (default) | uniform_sphere | uniform_interval
//   seed          optional default seed
//   terms         polynomial only: "coef:a1,..,aN:b1,..,bN; ..."
//
// A piecewise file sets "pieces = P" and gives each piece its family keys under
// "piece.<l>." plus "piece.<l>.alpha_cell" / "piece.<l>.beta_cell", boxes
// written "[lo,hi) x [lo,hi]" (an omitted cell is the whole cube). N, R,
// distribution and seed stay top-level.

struct LvmModelFile {
  LvmSpec spec;
  std::optional<std::uint64_t> seed;
};

struct PiecewiseModelFile {
  PiecewiseLvmSpec spec;
  std::optional<std::uint64_t> seed;
};

using KeyFilter = std::function<bool(const std::string&)>;

// extra_keys admits keys owned by a caller (e.g. scan settings).
LvmModelFile parse_lvm_model(const KeyValueMap& kv, const KeyFilter& extra_keys = {});
PiecewiseModelFile parse_piecewise_model(const KeyValueMap& kv, const KeyFilter& extra_keys = {});

bool is_piecewise_model(const KeyValueMap& kv);

LvmModelFile load_lvm_model(const std::filesystem::path& path);

LatentDistribution parse_distribution(std::string_view text);
Family parse_family(std::string_view text);
std::vector<PolynomialTerm> parse_terms(std::string_view text, int dim);
Box parse_box(std::string_view text, int dim);

}  // namespace logrank
