#pragma once

namespace bmw::stat {

/// log Gamma(x) for x > 0 (Lanczos, g = 7). Reentrant, unlike std::lgamma
/// which may write the global `signgam`.
double log_gamma(double x);

/// log B(a, b).
double log_beta(double a, double b);

/// Beta(a, b) density at x in [0, 1].
double beta_pdf(double x, double a, double b);

/// Regularized incomplete beta I_x(a, b). Continued fraction (modified
/// Lentz) with relative tolerance 1e-12; the symmetry
/// I_x(a,b) = 1 - I_{1-x}(b,a) keeps the fraction in its fast region.
double beta_cdf(double x, double a, double b);

/// beta_cdf with log B(a,b) supplied by the caller, for loops that evaluate
/// one (a,b) pair at many x. No argument checking.
double beta_cdf_unchecked(double x, double a, double b, double log_beta_ab);

}  // namespace bmw::stat
