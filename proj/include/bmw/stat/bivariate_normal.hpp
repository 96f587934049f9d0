#pragma once

namespace bmw::stat {

/// Pr(W1 >= h, W2 >= k) for a standard bivariate normal with correlation
/// rho in (-1, 1). Absolute error below 1e-7 (64-node Gauss-Legendre over
/// the angle asin(rho)).
double bvn_upper_orthant(double h, double k, double rho);

/// Pr(W1 <= x, W2 <= y), the lower-orthant form.
double bvn_cdf(double x, double y, double rho);

}  // namespace bmw::stat
