#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bmw::wr {

enum class Arm : std::uint8_t { Control = 0, Treatment = 1 };

/// Ordered binary endpoints; position 0 has the highest priority. Every
/// endpoint is a success indicator, so 1 beats 0.
class EndpointHierarchy {
   public:
    /// Throws ContractError on an empty list or duplicate identifiers.
    explicit EndpointHierarchy(std::vector<std::string> endpoints);

    /// The two-endpoint hierarchy used throughout the simulations
    /// (objective response, then event-free survival at 3 months).
    static EndpointHierarchy or_efs3();

    std::size_t size() const { return endpoints_.size(); }
    const std::vector<std::string>& endpoints() const { return endpoints_; }

   private:
    std::vector<std::string> endpoints_;
};

struct PatientOutcome {
    Arm arm = Arm::Control;
    std::vector<std::uint8_t> x_e;  // aligned with the hierarchy
    std::uint8_t x_t = 0;           // toxicity indicator
};

enum class PairResult { Win, Loss, Tie };

/// Hierarchical comparison of one treatment patient against one control
/// patient. Throws ContractError if either outcome does not match h.
PairResult compare_pair(const PatientOutcome& treat, const PatientOutcome& ctrl,
                        const EndpointHierarchy& h);

struct WltCounts {
    std::int64_t n_win = 0;
    std::int64_t n_loss = 0;
    std::int64_t n_tie = 0;
    std::int64_t n_treat = 0;
    std::int64_t n_ctrl = 0;

    std::int64_t pairs() const { return n_treat * n_ctrl; }
    /// Throws ContractError unless counts are non-negative and sum to
    /// n_treat * n_ctrl.
    void validate() const;

    friend bool operator==(const WltCounts&, const WltCounts&) = default;
};

/// All n_treat x n_ctrl comparisons. Throws ContractError on an empty cohort
/// or an outcome that does not conform to h.
WltCounts count_wlt(std::span<const PatientOutcome> treat_cohort,
                    std::span<const PatientOutcome> ctrl_cohort, const EndpointHierarchy& h);

/// Packs an efficacy vector into an integer with endpoint 0 as the most
/// significant bit. Under the 1-beats-0 rule, comparing two codes as
/// integers is exactly the hierarchical comparison.
std::uint32_t efficacy_code(std::span<const std::uint8_t> x_e);

/// Incremental per-arm tallies of efficacy codes; counts() costs O(2^K)
/// regardless of cohort size. Used when cohorts grow analysis by analysis.
class WltTally {
   public:
    explicit WltTally(std::size_t n_endpoints);

    void add(Arm arm, std::uint32_t code);
    WltCounts counts() const;
    std::int64_t n_treat() const { return n_treat_; }
    std::int64_t n_ctrl() const { return n_ctrl_; }

   private:
    std::vector<std::int64_t> treat_;
    std::vector<std::int64_t> ctrl_;
    std::int64_t n_treat_ = 0;
    std::int64_t n_ctrl_ = 0;
};

struct WrEstimate {
    double p_hat_w = 0.0;
    double p_hat_l = 0.0;
    double p_hat_t = 0.0;
    double wr = 1.0;
    double theta_hat = 0.0;
    double z = 0.0;
    double info = 0.0;
};

/// Largest tie probability admitted into variance and information formulas.
inline constexpr double kMaxTieProbability = 1.0 - 1e-6;

/// Win-ratio point estimate and Wald statistic
///   z = theta_hat / sqrt(4(1+pT) / (3 phi(1-phi)(1-pT) N)) = theta_hat * sqrt(info).
/// Zero wins or zero losses get +0.5 on both (Haldane); pT is clipped to
/// kMaxTieProbability. All ties gives z = 0.
WrEstimate wr_estimate(const WltCounts& c, double phi, std::int64_t n_total);

/// Arm sizes at an analysis with n_total enrolled: round(phi * n_total)
/// treated, the rest control.
std::int64_t treated_at(double phi, std::int64_t n_total);

/// True outcome-generating configuration of one simulated scenario.
struct ScenarioTruth {
    std::vector<double> q_e0;  // control efficacy marginals
    std::vector<double> q_e1;  // treatment efficacy marginals
    double q_t0 = 0.3;
    double q_t1 = 0.3;
    double rho_ee = 0.25;  // latent corr(W_E1, W_E2)
    double rho_et = 0.2;   // latent corr(W_E1, W_T)
    // latent corr(W_E2, W_T); below -1 means "use rho_ee * rho_et"
    double rho_e2t = -2.0;

    double effective_rho_e2t() const { return rho_e2t < -1.0 ? rho_ee * rho_et : rho_e2t; }
    /// Throws DomainError on probabilities outside (0,1), |rho| >= 1 or a
    /// latent correlation matrix that is not positive definite.
    void validate() const;
};

struct TheoreticalWlt {
    double p_w = 0.0;
    double p_l = 0.0;
    double p_t = 0.0;
    double theta = 0.0;
};

/// Joint cell probabilities of two thresholded latent normals, indexed by
/// efficacy_code: [ (0,0), (0,1), (1,0), (1,1) ].
std::array<double, 4> efficacy_cell_probabilities(double q1, double q2, double rho);

/// Exact win/loss/tie probabilities for a two-endpoint scenario.
TheoreticalWlt theoretical_wlt(const ScenarioTruth& s, const EndpointHierarchy& h);

}  // namespace bmw::wr
