#include "bmw/calibration/calibration.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <tuple>

#include "bmw/errors.hpp"
#include "bmw/parallel.hpp"
#include "bmw/stat/rng.hpp"
#include "bmw/win_ratio/win_ratio.hpp"

namespace bmw::calib {

using inference::BoundarySet;

Grid Grid::defaults() {
    Grid g;
    for (int i = 50; i <= 99; ++i) g.lambdas.push_back(i / 100.0);
    for (int i = 0; i <= 20; ++i) g.gammas.push_back(i / 20.0);
    return g;
}

void DesignSpec::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0,1]");
    schedule.validate();
    if (!(prior.variance > 0.0)) throw DomainError("prior variance must be positive");
    if (!(theta_alt > 0.0)) throw DomainError("theta_alt must be positive");
    if (!(p_t_null >= 0.0 && p_t_null < 1.0)) throw DomainError("p_t_null must lie in [0,1)");
    if (!(p_t_alt >= 0.0 && p_t_alt < 1.0)) throw DomainError("p_t_alt must lie in [0,1)");
    if (n_paths < 1000) throw DomainError("n_paths must be at least 1000");
    if (grid.lambdas.empty() || grid.gammas.empty()) throw DomainError("grid must not be empty");
    for (double l : grid.lambdas)
        if (!(l >= 0.0 && l <= 1.0)) throw DomainError("grid lambda values must lie in [0,1]");
    for (double g : grid.gammas)
        if (!(g >= 0.0 && g <= 1.0)) throw DomainError("grid gamma values must lie in [0,1]");
    if (tox) {
        if (!(tox->delta > 0.0 && tox->delta < 1.0)) throw DomainError("tox.delta must lie in (0,1)");
        if (!(tox->q_t0_null > 0.0 && tox->q_t0_null + tox->delta < 1.0))
            throw DomainError("tox.q_t0_null must satisfy 0 < q_t0_null < 1 - delta");
        if (!(tox->q_t1_alt > 0.0 && tox->q_t1_alt < 1.0)) throw DomainError("tox.q_t1_alt must lie in (0,1)");
        if (!(tox->prior.a > 0.0 && tox->prior.b > 0.0)) throw DomainError("tox prior parameters must be positive");
    }
}

PathMatrix::PathMatrix(std::size_t rows, std::size_t cols, Hypothesis tag)
    : rows_(rows), cols_(cols), tag_(tag), values_(rows * cols, 0.0) {}

PathMatrix sample_z_paths(double theta, double p_t, const DesignSpec& spec, Hypothesis tag, std::uint64_t seed,
                          unsigned threads) {
    const auto info = inference::information_vector(spec.schedule, p_t);
    const auto model = inference::mvn_model(theta, info);
    const stat::CholeskyFactor chol(model.sigma);
    const std::size_t R = info.size();
    PathMatrix out(spec.n_paths, R, tag);
    parallel_for(spec.n_paths, threads, [&](std::size_t i) {
        stat::Rng rng(seed, i);
        std::vector<double> u(R);
        for (auto& v : u) v = rng.normal();
        auto row = out.row(i);
        chol.correlate(u, row);
        for (std::size_t r = 0; r < R; ++r) row[r] += model.mean[r];
    });
    return out;
}

PathMatrix pp_matrix(const PathMatrix& paths, std::span<const double> info, const inference::NormalPrior& prior,
                     unsigned threads) {
    if (info.size() != paths.cols()) throw ContractError("pp_matrix: information length does not match paths");
    const inference::PosteriorEvaluator post(info, prior);
    PathMatrix out(paths.rows(), paths.cols(), paths.tag());
    parallel_for(paths.rows(), threads, [&](std::size_t i) {
        const auto z = paths.row(i);
        auto pp = out.row(i);
        for (std::size_t r = 0; r < z.size(); ++r) pp[r] = post.evaluate(z, r + 1).pp_e;
    });
    return out;
}

PathDecision decide_path(std::span<const double> pp, const BoundarySet& b) {
    const std::size_t R = b.analyses();
    if (pp.size() != R) throw ContractError("decide_path: trajectory length does not match boundaries");
    for (std::size_t r = 0; r + 1 < R; ++r) {
        if (pp[r] < b.futility[r]) return {false, r};
        if (pp[r] > b.superiority[r]) return {true, r};
    }
    return {pp[R - 1] > b.lambda, R - 1};
}

PoeResult evaluate_pp(const PathMatrix& pp, const BoundarySet& b) {
    if (pp.rows() == 0) throw ContractError("evaluate_pp: no paths");
    std::size_t effective = 0;
    double n_sum = 0.0;
    for (std::size_t i = 0; i < pp.rows(); ++i) {
        const auto d = decide_path(pp.row(i), b);
        effective += d.effective ? 1 : 0;
        n_sum += static_cast<double>(b.n_cum[d.stop_index]);
    }
    const double L = static_cast<double>(pp.rows());
    return {static_cast<double>(effective) / L, n_sum / L};
}

PoeResult poe(const PathMatrix& paths, double lambda, double gamma, const DesignSpec& spec) {
    const double p_t = paths.tag() == Hypothesis::Null ? spec.p_t_null : spec.p_t_alt;
    const auto info = inference::information_vector(spec.schedule, p_t);
    const auto pp = pp_matrix(paths, info, spec.prior);
    auto b = inference::boundary_set(lambda, gamma, spec.schedule);
    if (spec.futility_only) b = b.futility_only();
    return evaluate_pp(pp, b);
}

namespace {

// Strict "a is preferred to b" under the documented selection order.
bool preferred(const GridPoint& a, const GridPoint& b) {
    if (a.poe_alt != b.poe_alt) return a.poe_alt > b.poe_alt;
    if (a.en_null != b.en_null) return a.en_null < b.en_null;
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    return a.gamma < b.gamma;
}

}  // namespace

CalibrationResult grid_search(const PathMatrix& pp_null, const PathMatrix& pp_alt,
                              const inference::AnalysisSchedule& schedule, const Grid& grid, double alpha,
                              bool futility_only, unsigned threads, const ProgressFn& progress) {
    if (pp_null.cols() != schedule.analyses() || pp_alt.cols() != schedule.analyses())
        throw ContractError("grid_search: path matrices do not match the schedule");
    const std::size_t n_gamma = grid.gammas.size();
    const std::size_t total = grid.size();
    CalibrationResult res;
    res.futility_only = futility_only;
    res.surface.resize(total);
    std::atomic<std::size_t> done{0};
    parallel_for(total, threads, [&](std::size_t k) {
        GridPoint& g = res.surface[k];
        g.lambda = grid.lambdas[k / n_gamma];
        g.gamma = grid.gammas[k % n_gamma];
        auto b = inference::boundary_set(g.lambda, g.gamma, schedule);
        if (futility_only) b = b.futility_only();
        const auto n = evaluate_pp(pp_null, b);
        const auto a = evaluate_pp(pp_alt, b);
        g.poe_null = n.poe;
        g.en_null = n.expected_n;
        g.poe_alt = a.poe;
        g.en_alt = a.expected_n;
        const std::size_t d = ++done;
        // Report once per completed lambda row.
        if (progress && d % n_gamma == 0) progress(d, total);
    });

    const GridPoint* best = nullptr;
    for (const auto& g : res.surface) {
        if (g.poe_null > alpha) continue;
        ++res.feasible_count;
        if (!best || preferred(g, *best)) best = &g;
    }
    if (!best)
        throw CalibrationError("no grid point controls the type I error at alpha; use a finer or wider grid");
    res.lambda_opt = best->lambda;
    res.gamma_opt = best->gamma;
    res.poe_null = best->poe_null;
    res.poe_alt = best->poe_alt;
    res.en_null = best->en_null;
    res.en_alt = best->en_alt;
    res.boundaries = inference::boundary_set(res.lambda_opt, res.gamma_opt, schedule);
    if (futility_only) res.boundaries = res.boundaries.futility_only();
    return res;
}

CalibrationResult calibrate_efficacy(const DesignSpec& spec, unsigned threads, const ProgressFn& progress) {
    spec.validate();
    const auto z_null = sample_z_paths(0.0, spec.p_t_null, spec, Hypothesis::Null,
                                       stat::derive_seed(spec.seed, "efficacy/null"), threads);
    const auto z_alt = sample_z_paths(spec.theta_alt, spec.p_t_alt, spec, Hypothesis::Alternative,
                                      stat::derive_seed(spec.seed, "efficacy/alt"), threads);
    const auto pp_null = pp_matrix(z_null, inference::information_vector(spec.schedule, spec.p_t_null), spec.prior,
                                   threads);
    const auto pp_alt =
        pp_matrix(z_alt, inference::information_vector(spec.schedule, spec.p_t_alt), spec.prior, threads);
    return grid_search(pp_null, pp_alt, spec.schedule, spec.grid, spec.alpha, spec.futility_only, threads, progress);
}

std::vector<inference::ToxCounts> sample_toxicity_path(const inference::AnalysisSchedule& schedule, double q_t0,
                                                       double q_t1, std::uint64_t seed, std::uint64_t stream) {
    stat::Rng rng(seed, stream);
    std::vector<inference::ToxCounts> out;
    out.reserve(schedule.analyses());
    inference::ToxCounts c;
    for (std::size_t r = 0; r < schedule.analyses(); ++r) {
        const std::int64_t n1 = wr::treated_at(schedule.phi, schedule.n_cum[r]);
        const std::int64_t n0 = schedule.n_cum[r] - n1;
        c.y1 += rng.binomial(static_cast<int>(n1 - c.n1), q_t1);
        c.y0 += rng.binomial(static_cast<int>(n0 - c.n0), q_t0);
        c.n1 = n1;
        c.n0 = n0;
        out.push_back(c);
    }
    return out;
}

namespace {

// PP_T for every (path, analysis) of a simulated count set. Distinct count
// configurations are far fewer than cells, so each is evaluated once.
PathMatrix toxicity_pp_matrix(const DesignSpec& spec, double q_t0, double q_t1, Hypothesis tag,
                              std::uint64_t seed, unsigned threads) {
    const auto& tox = *spec.tox;
    const std::size_t L = spec.n_paths;
    const std::size_t R = spec.schedule.analyses();
    std::vector<std::vector<inference::ToxCounts>> paths(L);
    parallel_for(L, threads, [&](std::size_t i) {
        paths[i] = sample_toxicity_path(spec.schedule, q_t0, q_t1, seed, i);
    });

    using Key = std::tuple<std::size_t, std::int64_t, std::int64_t>;  // analysis, y1, y0
    std::map<Key, std::size_t> index;
    std::vector<inference::ToxCounts> unique;
    for (const auto& p : paths)
        for (std::size_t r = 0; r < R; ++r) {
            const Key k{r, p[r].y1, p[r].y0};
            if (index.try_emplace(k, unique.size()).second) unique.push_back(p[r]);
        }
    std::vector<double> values(unique.size());
    parallel_for(unique.size(), threads,
                 [&](std::size_t u) { values[u] = inference::pp_toxicity(unique[u], tox.delta, tox.prior); });

    PathMatrix out(L, R, tag);
    for (std::size_t i = 0; i < L; ++i) {
        auto row = out.row(i);
        for (std::size_t r = 0; r < R; ++r) row[r] = values[index.at(Key{r, paths[i][r].y1, paths[i][r].y0})];
    }
    return out;
}

}  // namespace

CalibrationResult calibrate_toxicity(const DesignSpec& spec, unsigned threads, const ProgressFn& progress) {
    spec.validate();
    if (!spec.tox) throw ContractError("calibrate_toxicity: design has no toxicity settings");
    const auto& tox = *spec.tox;
    const auto pp_null = toxicity_pp_matrix(spec, tox.q_t0_null, tox.q_t0_null + tox.delta, Hypothesis::Null,
                                            stat::derive_seed(spec.seed, "toxicity/null"), threads);
    const auto pp_alt = toxicity_pp_matrix(spec, tox.q_t0_null, tox.q_t1_alt, Hypothesis::Alternative,
                                           stat::derive_seed(spec.seed, "toxicity/alt"), threads);
    return grid_search(pp_null, pp_alt, spec.schedule, spec.grid, spec.alpha, false, threads, progress);
}

PoeResult efficacy_null_certificate(const DesignSpec& spec, const CalibrationResult& result, std::size_t n_paths,
                                    std::uint64_t seed, unsigned threads) {
    DesignSpec fresh = spec;
    fresh.n_paths = n_paths;
    const auto z = sample_z_paths(0.0, spec.p_t_null, fresh, Hypothesis::Null, seed, threads);
    const auto pp = pp_matrix(z, inference::information_vector(spec.schedule, spec.p_t_null), spec.prior, threads);
    return evaluate_pp(pp, result.boundaries);
}

}  // namespace bmw::calib
