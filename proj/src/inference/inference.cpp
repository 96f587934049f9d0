#include "bmw/inference/inference.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "bmw/errors.hpp"
#include "bmw/stat/beta.hpp"
#include "bmw/stat/normal.hpp"
#include "bmw/stat/quadrature.hpp"

namespace bmw::inference {

void AnalysisSchedule::validate() const {
    if (n_cum.empty()) throw DomainError("schedule must contain at least one analysis");
    if (n_cum.front() <= 0) throw DomainError("schedule sample sizes must be positive");
    for (std::size_t r = 1; r < n_cum.size(); ++r)
        if (n_cum[r] <= n_cum[r - 1]) throw DomainError("schedule must be strictly increasing");
    if (!(phi > 0.0 && phi < 1.0)) throw DomainError("phi must lie in (0,1)");
}

double AnalysisSchedule::fraction(std::size_t r) const {
    return static_cast<double>(n_cum.at(r)) / static_cast<double>(n_max());
}

std::vector<double> information_vector(const AnalysisSchedule& schedule, std::span<const double> p_t) {
    schedule.validate();
    if (p_t.size() != schedule.analyses())
        throw ContractError("information_vector: one tie probability per analysis is required");
    std::vector<double> info(p_t.size());
    const double phi = schedule.phi;
    for (std::size_t r = 0; r < p_t.size(); ++r) {
        if (!(p_t[r] >= 0.0 && p_t[r] < 1.0)) throw DomainError("tie probabilities must lie in [0,1)");
        info[r] = 3.0 * phi * (1.0 - phi) * (1.0 - p_t[r]) * static_cast<double>(schedule.n_cum[r]) /
                  (4.0 * (1.0 + p_t[r]));
    }
    return info;
}

std::vector<double> information_vector(const AnalysisSchedule& schedule, double p_t) {
    const std::vector<double> all(schedule.analyses(), p_t);
    return information_vector(schedule, all);
}

stat::SpdMatrix correlation_matrix(std::span<const double> info) {
    const std::size_t n = info.size();
    if (n == 0) throw ContractError("correlation_matrix: empty information vector");
    for (double v : info)
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("information values must be positive");
    std::vector<double> e(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        e[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double rho = std::sqrt(info[i] / info[j]);
            e[i * n + j] = rho;
            e[j * n + i] = rho;
        }
    }
    return stat::SpdMatrix(n, std::move(e));
}

MvnModel mvn_model(double theta, std::span<const double> info) {
    auto sigma = correlation_matrix(info);
    std::vector<double> mean(info.size());
    for (std::size_t r = 0; r < info.size(); ++r) mean[r] = theta * std::sqrt(info[r]);
    return {std::move(mean), std::move(sigma)};
}

namespace {

void check_prior(const NormalPrior& prior) {
    if (!(prior.variance > 0.0) || !std::isfinite(prior.variance) || !std::isfinite(prior.mean))
        throw DomainError("prior variance must be positive and finite");
}

PosteriorTheta finish(double precision, double weighted, const NormalPrior& prior) {
    PosteriorTheta p;
    p.variance = 1.0 / precision;
    p.mean = p.variance * (prior.mean / prior.variance + weighted);
    p.pp_e = stat::normal_sf(-p.mean / std::sqrt(p.variance));
    return p;
}

}  // namespace

PosteriorTheta posterior_theta(const ZPath& z, const NormalPrior& prior) {
    check_prior(prior);
    if (z.z.empty() || z.z.size() != z.info.size())
        throw ContractError("posterior_theta: z and info must be nonempty and of equal length");
    for (double v : z.z)
        if (!std::isfinite(v)) throw DomainError("posterior_theta: non-finite statistic");
    const auto sigma = correlation_matrix(z.info);
    std::vector<double> b(z.info.size());
    for (std::size_t r = 0; r < b.size(); ++r) b[r] = std::sqrt(z.info[r]);
    const auto w = stat::spd_solve(sigma, b);  // S^-1 B
    double btb = 0.0, btz = 0.0;
    for (std::size_t r = 0; r < b.size(); ++r) {
        btb += b[r] * w[r];
        btz += w[r] * z.z[r];
    }
    return finish(1.0 / prior.variance + btb, btz, prior);
}

PosteriorEvaluator::PosteriorEvaluator(std::span<const double> info, NormalPrior prior) : prior_(prior) {
    check_prior(prior_);
    for (std::size_t r = 1; r <= info.size(); ++r) {
        const auto prefix = info.first(r);
        const auto sigma = correlation_matrix(prefix);
        std::vector<double> b(r);
        for (std::size_t k = 0; k < r; ++k) b[k] = std::sqrt(prefix[k]);
        auto w = stat::spd_solve(sigma, b);
        double btb = 0.0;
        for (std::size_t k = 0; k < r; ++k) btb += b[k] * w[k];
        precision_.push_back(1.0 / prior_.variance + btb);
        weights_.push_back(std::move(w));
    }
}

PosteriorTheta PosteriorEvaluator::evaluate(std::span<const double> z, std::size_t r_current) const {
    if (r_current == 0 || r_current > weights_.size() || z.size() < r_current)
        throw ContractError("PosteriorEvaluator: analysis index out of range");
    const auto& w = weights_[r_current - 1];
    double btz = 0.0;
    for (std::size_t k = 0; k < r_current; ++k) btz += w[k] * z[k];
    return finish(precision_[r_current - 1], btz, prior_);
}

PosteriorTheta posterior_from_history(std::span<const double> z, std::span<const double> p_t,
                                      const AnalysisSchedule& schedule, const NormalPrior& prior) {
    const std::size_t r = z.size();
    if (r == 0 || p_t.size() != r || r > schedule.analyses())
        throw ContractError("posterior_from_history: z and p_t must have equal length within the schedule");
    AnalysisSchedule prefix{{schedule.n_cum.begin(), schedule.n_cum.begin() + static_cast<std::ptrdiff_t>(r)},
                            schedule.phi};
    ZPath path{{z.begin(), z.end()}, information_vector(prefix, p_t)};
    bool increasing = true;
    for (std::size_t k = 1; k < r; ++k) increasing = increasing && path.info[k] > path.info[k - 1];
    if (!increasing) path.info = information_vector(prefix, p_t[r - 1]);
    return posterior_theta(path, prior);
}

void ToxCounts::validate() const {
    if (y1 < 0 || n1 < 0 || y1 > n1 || y0 < 0 || n0 < 0 || y0 > n0)
        throw ContractError("toxicity counts must satisfy 0 <= y <= n in each arm");
}

namespace {

double toxicity_integral(double delta, double a1, double b1, double a0, double b0, std::size_t panels) {
    const double lb1 = stat::log_beta(a1, b1);
    const double lb0 = stat::log_beta(a0, b0);
    auto integrand = [&](double p) {
        const double dens = std::exp((a1 - 1.0) * std::log(p) + (b1 - 1.0) * std::log1p(-p) - lb1);
        if (dens == 0.0) return 0.0;
        return dens * stat::beta_cdf_unchecked(p - delta, a0, b0, lb0);
    };
    return stat::integrate_composite(integrand, delta, 1.0, panels, 16);
}

}  // namespace

double pp_toxicity(const ToxCounts& c, double delta, BetaPrior prior) {
    c.validate();
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("pp_toxicity: delta must lie in (0,1)");
    if (!(prior.a > 0.0 && prior.b > 0.0)) throw DomainError("pp_toxicity: prior parameters must be positive");
    const double a1 = static_cast<double>(c.y1) + prior.a;
    const double b1 = static_cast<double>(c.n1 - c.y1) + prior.b;
    const double a0 = static_cast<double>(c.y0) + prior.a;
    const double b0 = static_cast<double>(c.n0 - c.y0) + prior.b;

    // 16-point panels: 16 panels = 256 nodes, 32 = 512, 128 = 2048.
    const double coarse = toxicity_integral(delta, a1, b1, a0, b0, 16);
    double fine = toxicity_integral(delta, a1, b1, a0, b0, 32);
    if (std::fabs(fine - coarse) > 1e-7) fine = toxicity_integral(delta, a1, b1, a0, b0, 128);
    return std::clamp(1.0 - fine, 0.0, 1.0);
}

BoundarySet boundary_set(double lambda, double gamma, const AnalysisSchedule& schedule) {
    schedule.validate();
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0,1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in [0,1]");
    BoundarySet b;
    b.lambda = lambda;
    b.gamma = gamma;
    b.n_cum = schedule.n_cum;
    const std::size_t n = schedule.analyses();
    b.futility.resize(n);
    b.superiority.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        const double scale = std::pow(schedule.fraction(r), gamma);
        b.futility[r] = lambda * scale;
        b.superiority[r] = 1.0 - (1.0 - lambda) * scale;
    }
    // The final analysis uses the single threshold lambda.
    b.futility[n - 1] = lambda;
    b.superiority[n - 1] = lambda;
    return b;
}

BoundarySet BoundarySet::futility_only() const {
    BoundarySet b = *this;
    for (std::size_t r = 0; r + 1 < b.superiority.size(); ++r) b.superiority[r] = 1.0;
    return b;
}

std::string_view to_string(Decision d) {
    switch (d) {
        case Decision::Continue: return "Continue";
        case Decision::StopFutility: return "StopFutility";
        case Decision::StopSuperiority: return "StopSuperiority";
        case Decision::Effective: return "Effective";
        case Decision::Ineffective: return "Ineffective";
    }
    return "Continue";
}

std::optional<Decision> decision_from_string(std::string_view s) {
    for (auto d : {Decision::Continue, Decision::StopFutility, Decision::StopSuperiority, Decision::Effective,
                   Decision::Ineffective})
        if (to_string(d) == s) return d;
    return std::nullopt;
}

Decision evaluate_interim(double pp, std::size_t r, const BoundarySet& b) {
    if (r >= b.analyses()) throw ContractError("evaluate_interim: analysis index out of range");
    if (r + 1 == b.analyses()) return pp > b.lambda ? Decision::Effective : Decision::Ineffective;
    if (pp < b.futility[r]) return Decision::StopFutility;
    if (pp > b.superiority[r]) return Decision::StopSuperiority;
    return Decision::Continue;
}

void write_boundary_csv(std::ostream& os, const BoundarySet& b) {
    os << "analysis_index,n_cum,futility_pp,superiority_pp\r\n";
    std::ostringstream line;
    for (std::size_t r = 0; r < b.analyses(); ++r) {
        line.str({});
        line << std::setprecision(10) << (r + 1) << ',' << b.n_cum[r] << ',' << b.futility[r] << ','
             << b.superiority[r] << "\r\n";
        os << line.str();
    }
}

}  // namespace bmw::inference
