#pragma once

namespace bmw::stat {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// Standard normal density.
double normal_pdf(double x);

/// Standard normal CDF. Throws DomainError for non-finite x.
double normal_cdf(double x);

/// Upper tail 1 - normal_cdf(x), computed without cancellation.
double normal_sf(double x);

/// Inverse of normal_cdf on (0,1). Throws DomainError outside (0,1).
double normal_quantile(double p);

}  // namespace bmw::stat
