#include "bmw/stat/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "bmw/errors.hpp"
#include "bmw/stat/normal.hpp"

namespace bmw::stat {

GaussLegendreRule gauss_legendre(std::size_t n) {
    if (n == 0) throw ContractError("gauss_legendre: order must be positive");
    GaussLegendreRule rule;
    if (n == 1) {
        rule.nodes = {0.0};
        rule.weights = {2.0};
        return rule;
    }
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        // Tricomi initial guess for the i-th root from the top.
        double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double step = p1 / dp;
            x -= step;
            if (std::fabs(step) < 1e-16) break;
        }
        // Recompute derivative at the converged root for the weight.
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
            p0 = p1;
            p1 = pk;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

const GaussLegendreRule& gauss_legendre_cached(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, GaussLegendreRule> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n)).first;
    // std::map never invalidates references on insertion.
    return it->second;
}

}  // namespace bmw::stat
