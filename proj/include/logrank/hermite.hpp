#pragma once

#include <vector>

namespace logrank {

// Physicists' Hermite polynomials H_0(x) … H_order(x),
// H_{n+1} = 2x H_n − 2n H_{n−1}.
std::vector<double> hermite_values(double x, int order);

// h_n = H_n(x) / n!, the Taylor coefficients of exp(2xt − t²) in t.
// Computed by the scaled recurrence h_{n+1} = (2x h_n − 2 h_{n−1}) / (n + 1),
// which stays finite for orders where H_n itself would overflow.
std::vector<double> scaled_hermite_values(double x, int order);

}  // namespace logrank
