#include "bmw/stat/normal.hpp"

#include <cmath>

#include "bmw/errors.hpp"

namespace bmw::stat {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440084436210484903;
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438187;

// Acklam's rational approximation, relative error ~1.15e-9. Used only as
// the starting point for Newton refinement.
double acklam_lower(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) {
    if (!std::isfinite(x)) throw DomainError("normal_cdf: non-finite argument");
    return 0.5 * std::erfc(-x * kInvSqrt2);
}

double normal_sf(double x) {
    if (!std::isfinite(x)) throw DomainError("normal_sf: non-finite argument");
    return 0.5 * std::erfc(x * kInvSqrt2);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0,1)");
    // Work in the lower half so the residual is computed against the small
    // tail probability, then reflect.
    const bool upper = p > 0.5;
    const double tail = upper ? 1.0 - p : p;
    double x = acklam_lower(tail);
    for (int it = 0; it < 2; ++it) {
        const double err = normal_cdf(x) - tail;
        const double pdf = normal_pdf(x);
        if (pdf <= 0.0) break;
        // Halley step: Newton with the second-order correction x*u/2.
        const double u = err / pdf;
        x -= u / (1.0 + 0.5 * x * u);
    }
    return upper ? -x : x;
}

}  // namespace bmw::stat
