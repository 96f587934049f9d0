#include "bmw/stat/bivariate_normal.hpp"

#include <algorithm>
#include <cmath>

#include "bmw/errors.hpp"
#include "bmw/stat/normal.hpp"
#include "bmw/stat/quadrature.hpp"

namespace bmw::stat {

namespace {

constexpr std::size_t kNodes = 64;

// Plackett's identity d/dr Phi2(x,y;r) = phi2(x,y;r), integrated from 0 to
// rho after substituting r = sin(t) to remove the 1/sqrt(1-r^2) endpoint
// behaviour:
//   Phi2(x,y;rho) = Phi(x)Phi(y)
//                   + 1/(2pi) int_0^{asin rho} exp(-(x^2 - 2xy sin t + y^2) / (2 cos^2 t)) dt
double lower_orthant(double x, double y, double rho) {
    const double base = normal_cdf(x) * normal_cdf(y);
    if (rho == 0.0) return base;
    const double upper = std::asin(rho);
    const auto& rule = gauss_legendre_cached(kNodes);
    const double half = 0.5 * upper;
    const double sq = x * x + y * y;
    const double xy2 = 2.0 * x * y;
    double acc = 0.0;
    for (std::size_t i = 0; i < kNodes; ++i) {
        const double t = half + half * rule.nodes[i];
        const double s = std::sin(t);
        const double c = std::cos(t);
        acc += rule.weights[i] * std::exp(-(sq - xy2 * s) / (2.0 * c * c));
    }
    const double value = base + acc * half / (2.0 * kPi);
    return std::clamp(value, 0.0, 1.0);
}

}  // namespace

double bvn_cdf(double x, double y, double rho) {
    if (!(rho > -1.0 && rho < 1.0)) throw DomainError("bvn_cdf: rho must lie in (-1,1)");
    if (std::isnan(x) || std::isnan(y)) throw DomainError("bvn_cdf: NaN argument");
    if (x == -INFINITY || y == -INFINITY) return 0.0;
    if (x == INFINITY) return y == INFINITY ? 1.0 : normal_cdf(y);
    if (y == INFINITY) return normal_cdf(x);
    return lower_orthant(x, y, rho);
}

double bvn_upper_orthant(double h, double k, double rho) {
    if (!(rho > -1.0 && rho < 1.0))
        throw DomainError("bvn_upper_orthant: rho must lie in (-1,1)");
    return bvn_cdf(-h, -k, rho);
}

}  // namespace bmw::stat
