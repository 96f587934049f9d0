#pragma once

// Reference computations used only by the tests. They take a different
// route from the library (direct quadrature, enumeration, Monte Carlo) so
// agreement is evidence rather than repetition.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

// Composite Simpson on [a,b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

inline double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

// Phi(x) by integrating the density from 0.
inline double normal_cdf(double x) {
    const double half = simpson(phi, 0.0, std::fabs(x), 4000);
    return x >= 0 ? 0.5 + half : 0.5 - half;
}

// Pr(W1 >= h, W2 >= k) = int_h^inf phi(x) Pr(W2 >= k | W1 = x) dx.
inline double bvn_upper(double h, double k, double rho) {
    const double s = std::sqrt(1.0 - rho * rho);
    auto f = [&](double x) { return phi(x) * (1.0 - normal_cdf((k - rho * x) / s)); };
    return simpson(f, h, std::max(h, 0.0) + 9.0, 3000);
}

// I_x(a,b) for integer a,b as a binomial tail.
inline double beta_cdf_integer(double x, int a, int b) {
    const int n = a + b - 1;
    double total = 0.0;
    for (int j = a; j <= n; ++j)
        total += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) +
                          j * std::log(x) + (n - j) * std::log1p(-x));
    return total;
}


struct Posterior {
    double mean = 0, variance = 0, pp = 0;
};

// Normal-prior posterior of theta by quadrature. The likelihood uses the
// independent increments S_r - S_{r-1} ~ N(theta dI_r, dI_r) of
// S_r = z_r sqrt(I_r), so no matrix is inverted.
inline Posterior posterior_quadrature(const std::vector<double>& z, const std::vector<double>& info, double m0,
                                      double v0) {
    auto log_post = [&](double th) {
        double lp = -(th - m0) * (th - m0) / (2 * v0);
        double s_prev = 0, i_prev = 0;
        for (std::size_t r = 0; r < z.size(); ++r) {
            const double s = z[r] * std::sqrt(info[r]);
            const double ds = s - s_prev, di = info[r] - i_prev;
            lp -= (ds - th * di) * (ds - th * di) / (2 * di);
            s_prev = s;
            i_prev = info[r];
        }
        return lp;
    };
    auto moments = [&](double lo, double hi, int n) {
        double peak = -1e300;
        for (int i = 0; i <= n; ++i) peak = std::max(peak, log_post(lo + (hi - lo) * i / n));
        auto dens = [&](double t) { return std::exp(log_post(t) - peak); };
        const double m0_ = simpson(dens, lo, hi, n);
        const double m1 = simpson([&](double t) { return t * dens(t); }, lo, hi, n) / m0_;
        const double m2 = simpson([&](double t) { return (t - m1) * (t - m1) * dens(t); }, lo, hi, n) / m0_;
        const double above = lo >= 0 ? m0_ : hi <= 0 ? 0.0 : simpson(dens, 0.0, hi, n);
        return Posterior{m1, m2, above / m0_};
    };
    const Posterior coarse = moments(-60.0, 60.0, 240000);
    const double sd = std::sqrt(coarse.variance);
    return moments(coarse.mean - 14 * sd, coarse.mean + 14 * sd, 6000);
}

// Pr(p1 - p0 < delta) with p1 ~ Beta(y1+a, n1-y1+b), p0 ~ Beta(y0+a, n0-y0+b).
struct McEstimate {
    double p = 0, se = 0;
};
inline McEstimate pp_toxicity_mc(int y1, int n1, int y0, int n0, double delta, double a, double b, int draws,
                                 std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::gamma_distribution<double> g1a(y1 + a), g1b(n1 - y1 + b), g0a(y0 + a), g0b(n0 - y0 + b);
    int hits = 0;
    for (int i = 0; i < draws; ++i) {
        const double x1 = g1a(g), p1 = x1 / (x1 + g1b(g));
        const double x0 = g0a(g), p0 = x0 / (x0 + g0b(g));
        hits += p1 - p0 < delta;
    }
    const double p = static_cast<double>(hits) / draws;
    return {p, std::sqrt(std::max(p * (1 - p), 1.0 / draws) / draws)};
}

}  // namespace oracle
