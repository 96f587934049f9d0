#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bmw::stat {

// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Builds an n-point rule by Newton iteration on the Legendre recurrence.
GaussLegendreRule gauss_legendre(std::size_t n);

/// Cached rule for small fixed orders used across the library (thread-safe).
const GaussLegendreRule& gauss_legendre_cached(std::size_t n);

/// Composite Gauss-Legendre: `panels` equal sub-intervals of [a,b], each
/// integrated with `order` nodes.
template <class F>
double integrate_composite(F&& f, double a, double b, std::size_t panels, std::size_t order) {
    const auto& rule = gauss_legendre_cached(order);
    const double width = (b - a) / static_cast<double>(panels);
    double total = 0.0;
    for (std::size_t k = 0; k < panels; ++k) {
        const double lo = a + width * static_cast<double>(k);
        const double mid = lo + 0.5 * width;
        double panel = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            panel += rule.weights[i] * f(mid + 0.5 * width * rule.nodes[i]);
        total += panel * 0.5 * width;
    }
    return total;
}

}  // namespace bmw::stat
