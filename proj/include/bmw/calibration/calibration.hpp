#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bmw/inference/inference.hpp"

namespace bmw::calib {

struct ToxicityTargets {
    double delta = 0.1;        // non-inferiority margin
    double q_t0_null = 0.3;    // control toxicity rate assumed for calibration
    double q_t1_alt = 0.3;     // treatment toxicity rate targeted for power
    inference::BetaPrior prior{};
};

struct Grid {
    std::vector<double> lambdas;
    std::vector<double> gammas;

    /// lambda in {0.50, 0.51, ..., 0.99}, gamma in {0.00, 0.05, ..., 1.00}.
    static Grid defaults();
    std::size_t size() const { return lambdas.size() * gammas.size(); }
};

/// Which tie probability enters the information values when a trial is
/// conducted on observed data.
enum class TieSource {
    Observed,  // per-analysis estimate from the accumulated pairs
    Design,    // the configured p_t_null
};

struct DesignSpec {
    double alpha = 0.1;
    inference::AnalysisSchedule schedule{{80, 120, 160}, 0.5};
    inference::NormalPrior prior{};
    double theta_alt = 0.5;
    double p_t_null = 0.3;
    double p_t_alt = 0.3;
    std::size_t n_paths = 5000;
    std::optional<ToxicityTargets> tox;
    Grid grid = Grid::defaults();
    std::uint64_t seed = 20240601;
    // Calibrate the variant without interim superiority stopping.
    bool futility_only = false;
    TieSource trial_tie_source = TieSource::Observed;

    /// Throws DomainError on any invariant violation.
    void validate() const;
};

enum class Hypothesis { Null, Alternative };

/// L sampled statistic paths (rows) over R analyses (columns).
class PathMatrix {
   public:
    PathMatrix(std::size_t rows, std::size_t cols, Hypothesis tag);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    Hypothesis tag() const { return tag_; }
    std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

   private:
    std::size_t rows_, cols_;
    Hypothesis tag_;
    std::vector<double> values_;
};

/// Draws spec.n_paths rows from N(M, S) of mvn_model(theta,
/// information_vector(schedule, p_t)). Row i uses Rng(seed, i).
PathMatrix sample_z_paths(double theta, double p_t, const DesignSpec& spec, Hypothesis tag, std::uint64_t seed,
                          unsigned threads = 1);

/// Posterior probabilities of efficacy for every prefix of every path.
/// Result has the same shape as `paths`.
PathMatrix pp_matrix(const PathMatrix& paths, std::span<const double> info, const inference::NormalPrior& prior,
                     unsigned threads = 1);

struct PathDecision {
    bool effective = false;
    std::size_t stop_index = 0;  // zero-based analysis at which the path stopped
};

/// Runs the interim/final decision sequence over one PP trajectory.
PathDecision decide_path(std::span<const double> pp, const inference::BoundarySet& b);

struct PoeResult {
    double poe = 0.0;
    double expected_n = 0.0;
};

/// POE and mean sample size of a PP matrix under one boundary set.
PoeResult evaluate_pp(const PathMatrix& pp, const inference::BoundarySet& b);

/// POE for z paths: PP uses p_t_null for Null-tagged paths and p_t_alt for
/// Alternative-tagged paths.
PoeResult poe(const PathMatrix& paths, double lambda, double gamma, const DesignSpec& spec);

struct GridPoint {
    double lambda = 0.0;
    double gamma = 0.0;
    double poe_null = 0.0;
    double poe_alt = 0.0;
    double en_null = 0.0;
    double en_alt = 0.0;
};

struct CalibrationResult {
    double lambda_opt = 0.0;
    double gamma_opt = 0.0;
    double poe_null = 0.0;
    double poe_alt = 0.0;
    double en_null = 0.0;
    double en_alt = 0.0;
    std::size_t feasible_count = 0;
    bool futility_only = false;
    std::vector<GridPoint> surface;  // lambda-major
    inference::BoundarySet boundaries;
};

/// Progress callback: (grid points done, grid points total).
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

/// Shared grid search over precomputed PP matrices (common random numbers).
/// Feasible: poe_null <= alpha. Selection: max poe_alt, then smallest null
/// expected n, then smallest lambda, then smallest gamma. Throws
/// CalibrationError when nothing is feasible.
CalibrationResult grid_search(const PathMatrix& pp_null, const PathMatrix& pp_alt,
                              const inference::AnalysisSchedule& schedule, const Grid& grid, double alpha,
                              bool futility_only, unsigned threads = 1, const ProgressFn& progress = {});

/// Efficacy design calibration from the asymptotic statistic distribution.
CalibrationResult calibrate_efficacy(const DesignSpec& spec, unsigned threads = 1,
                                     const ProgressFn& progress = {});

/// Toxicity boundaries calibrated on simulated binomial count paths.
CalibrationResult calibrate_toxicity(const DesignSpec& spec, unsigned threads = 1,
                                     const ProgressFn& progress = {});

/// Simulated cumulative toxicity counts for one path at each analysis.
std::vector<inference::ToxCounts> sample_toxicity_path(const inference::AnalysisSchedule& schedule, double q_t0,
                                                       double q_t1, std::uint64_t seed, std::uint64_t stream);

/// Null POE of the selected efficacy design recomputed on fresh paths.
PoeResult efficacy_null_certificate(const DesignSpec& spec, const CalibrationResult& result,
                                    std::size_t n_paths, std::uint64_t seed, unsigned threads = 1);

}  // namespace bmw::calib
