#include "logrank/hermite.hpp"

#include "logrank/errors.hpp"

namespace logrank {

std::vector<double> hermite_values(double x, int order) {
  if (order < 0) throw ArgumentError("hermite_values: negative order");
  std::vector<double> h(static_cast<std::size_t>(order) + 1);
  h[0] = 1.0;
  if (order >= 1) h[1] = 2.0 * x;
  for (int n = 1; n < order; ++n) h[n + 1] = 2.0 * x * h[n] - 2.0 * n * h[n - 1];
  return h;
}

std::vector<double> scaled_hermite_values(double x, int order) {
  if (order < 0) throw ArgumentError("scaled_hermite_values: negative order");
  std::vector<double> h(static_cast<std::size_t>(order) + 1);
  h[0] = 1.0;
  if (order >= 1) h[1] = 2.0 * x;
  for (int n = 1; n < order; ++n) h[n + 1] = (2.0 * x * h[n] - 2.0 * h[n - 1]) / (n + 1);
  return h;
}

}  // namespace logrank
