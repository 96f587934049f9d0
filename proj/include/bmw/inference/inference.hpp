#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bmw/stat/spd.hpp"

namespace bmw::inference {

/// Cumulative enrollment at each analysis plus the randomization fraction.
struct AnalysisSchedule {
    std::vector<std::int64_t> n_cum;  // N_1 < ... < N_R
    double phi = 0.5;

    /// Throws DomainError unless n_cum is nonempty, positive and strictly
    /// increasing and phi lies in (0,1).
    void validate() const;
    std::size_t analyses() const { return n_cum.size(); }
    std::int64_t n_max() const { return n_cum.back(); }
    /// N_r / N_R
    double fraction(std::size_t r) const;
};

/// Fisher information of log WR at each analysis:
///   I_r = 3 phi (1-phi) (1 - pT_r) N_r / (4 (1 + pT_r)).
std::vector<double> information_vector(const AnalysisSchedule& schedule, std::span<const double> p_t);
std::vector<double> information_vector(const AnalysisSchedule& schedule, double p_t);

struct MvnModel {
    std::vector<double> mean;  // theta * sqrt(I_r)
    stat::SpdMatrix sigma;     // unit diagonal, rho = sqrt(I_r1 / I_r2), r1 < r2
};

/// Joint asymptotic distribution of (z_1, ..., z_R) for a given theta.
MvnModel mvn_model(double theta, std::span<const double> info);

/// Correlation part of mvn_model only.
stat::SpdMatrix correlation_matrix(std::span<const double> info);

struct ZPath {
    std::vector<double> z;
    std::vector<double> info;
    std::size_t r_current() const { return z.size(); }
};

struct NormalPrior {
    double mean = 0.0;
    double variance = 100.0;
};

struct PosteriorTheta {
    double mean = 0.0;
    double variance = 0.0;
    double pp_e = 0.5;  // Pr(theta > 0 | z)
};

/// Normal posterior of theta given the statistic path:
///   var  = (1/s0^2 + B' S^-1 B)^-1
///   mean = var * (theta0/s0^2 + B' S^-1 Z),   B = (sqrt(I_1), ..., sqrt(I_R+))'
/// S^-1 is applied through a Cholesky solve. Throws NumericError when the
/// correlation matrix implied by z.info is not positive definite.
PosteriorTheta posterior_theta(const ZPath& z, const NormalPrior& prior);

/// Reusable form of posterior_theta for many paths sharing one information
/// vector: S_r^-1 B_r is solved once per prefix length.
class PosteriorEvaluator {
   public:
    PosteriorEvaluator(std::span<const double> info, NormalPrior prior);

    /// Posterior after the first `r_current` statistics of z.
    PosteriorTheta evaluate(std::span<const double> z, std::size_t r_current) const;
    std::size_t analyses() const { return weights_.size(); }

   private:
    NormalPrior prior_;
    std::vector<std::vector<double>> weights_;  // S_r^-1 B_r per prefix
    std::vector<double> precision_;             // 1/s0^2 + B_r' S_r^-1 B_r
};

/// Posterior after analysis r = len(z) during trial conduct, with
/// information built from the per-analysis tie probabilities p_t. If those
/// values do not give strictly increasing information, the latest tie
/// probability is applied to every analysis instead.
PosteriorTheta posterior_from_history(std::span<const double> z, std::span<const double> p_t,
                                      const AnalysisSchedule& schedule, const NormalPrior& prior);

struct ToxCounts {
    std::int64_t y1 = 0, n1 = 0;  // treatment: events / evaluable
    std::int64_t y0 = 0, n0 = 0;  // control
    /// Throws ContractError unless 0 <= y <= n in both arms.
    void validate() const;
};

struct BetaPrior {
    double a = 1.0;
    double b = 1.0;
};

/// Pr(q_T1 - q_T0 < delta | data) under independent Beta priors:
///   1 - int_delta^1 f_{Beta(y1+a, n1-y1+b)}(p) I_{p-delta}(y0+a, n0-y0+b) dp
/// by composite Gauss-Legendre (512 nodes, 2048 when the 256- and 512-node
/// values disagree by more than 1e-7).
double pp_toxicity(const ToxCounts& c, double delta, BetaPrior prior = {});

/// Futility / superiority posterior-probability thresholds per analysis:
///   futility_r    = lambda (N_r/N_R)^gamma
///   superiority_r = 1 - (1 - lambda)(N_r/N_R)^gamma
/// Both equal lambda at the final analysis, where only PP > lambda is used.
struct BoundarySet {
    double lambda = 0.0;
    double gamma = 0.0;
    std::vector<std::int64_t> n_cum;
    std::vector<double> futility;
    std::vector<double> superiority;

    std::size_t analyses() const { return futility.size(); }
    /// Same thresholds with the interim superiority boundaries set to 1.
    BoundarySet futility_only() const;
};

/// Throws DomainError when lambda or gamma lies outside [0,1].
BoundarySet boundary_set(double lambda, double gamma, const AnalysisSchedule& schedule);

enum class Decision { Continue, StopFutility, StopSuperiority, Effective, Ineffective };

std::string_view to_string(Decision d);
std::optional<Decision> decision_from_string(std::string_view s);

/// Interim: StopFutility iff pp < futility[r], StopSuperiority iff
/// pp > superiority[r], else Continue. Final (r = R-1): Effective iff
/// pp > lambda. r is zero-based. Throws ContractError if r is out of range.
Decision evaluate_interim(double pp, std::size_t r, const BoundarySet& b);

/// RFC-4180 CSV: analysis_index,n_cum,futility_pp,superiority_pp
/// (analysis_index is 1-based).
void write_boundary_csv(std::ostream& os, const BoundarySet& b);

}  // namespace bmw::inference
