#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bmw/calibration/calibration.hpp"
#include "bmw/stat/rng.hpp"
#include "bmw/win_ratio/win_ratio.hpp"

namespace bmw::sim {

/// Thresholded latent-normal outcome generator for one scenario. Latent
/// vector (W_E1, ..., W_EK, W_T): corr(W_E1, W_Ek) = rho_ee,
/// corr(W_E1, W_T) = rho_et, corr(W_Ek, W_T) = rho_e2t for k >= 2.
/// Supports one or two efficacy endpoints.
class OutcomeSampler {
   public:
    explicit OutcomeSampler(const wr::ScenarioTruth& s);

    wr::PatientOutcome sample(wr::Arm arm, stat::Rng& rng) const;

    /// Same draw as sample() packed as (efficacy code, toxicity flag).
    std::pair<std::uint32_t, bool> sample_code(wr::Arm arm, stat::Rng& rng) const;

    std::size_t endpoints() const { return k_; }

   private:
    std::size_t k_;
    std::vector<double> chol_;                 // (k+1)x(k+1) lower factor
    std::array<std::vector<double>, 2> cut_;   // per arm: k efficacy cutoffs then toxicity
};

/// One patient drawn from s.
wr::PatientOutcome sample_patient(const wr::ScenarioTruth& s, wr::Arm arm, stat::Rng& rng);

enum class Outcome { Success, FailEfficacy, FailToxicity };

std::string_view to_string(Outcome o);

struct TrialResult {
    Outcome decision = Outcome::FailEfficacy;
    std::size_t stop_analysis = 0;  // zero-based
    std::int64_t n_used = 0;
    std::vector<double> pp_trace_e;
    std::vector<double> pp_trace_t;
    bool efficacy_rejected = false;
    bool toxicity_rejected = false;
};

/// Efficacy-only trial. Efficacy-only engines copy efficacy_rejected into
/// toxicity_rejected, so Success always means both claims hold.
TrialResult run_trial_bmw(const calib::DesignSpec& spec, const inference::BoundarySet& b_e,
                          const wr::ScenarioTruth& s, stat::Rng& rng, bool futility_only = false);

/// Efficacy first; after an efficacy superiority claim the toxicity
/// non-inferiority test runs at the same and later analyses. Requires
/// spec.tox for delta and the Beta prior.
TrialResult run_trial_graphical(const calib::DesignSpec& spec, const inference::BoundarySet& b_e,
                                const inference::BoundarySet& b_t, const wr::ScenarioTruth& s, stat::Rng& rng);

/// Fixed-sample comparator at N_R: Wald WR z > z_{1-alpha}, then (with
/// toxicity) a one-sided Wald test of q_T1 - q_T0 < delta at level alpha.
TrialResult run_conventional(const calib::DesignSpec& spec, const wr::ScenarioTruth& s, stat::Rng& rng,
                             bool with_toxicity);

enum class Engine { Bmw, BmwFutility, Graphical, Conventional, ConventionalToxicity };

std::string_view to_string(Engine e);
std::optional<Engine> engine_from_string(std::string_view s);

struct TruthLabels {
    bool efficacy_null = false;
    bool toxicity_null = false;
};

struct Boundaries {
    inference::BoundarySet efficacy;
    std::optional<inference::BoundarySet> toxicity;
};

struct OcSummary {
    std::size_t n_trials = 0;
    double reject_rate_e = 0.0;
    double reject_rate_t = 0.0;
    std::optional<double> fwer;  // empty when no null is true
    double pcs = 0.0;
    double expected_n = 0.0;
    // [analysis][Success, FailEfficacy, FailToxicity], fractions of n_trials
    std::vector<std::array<double, 3>> stop_distribution;
};

/// Replicate i draws from Rng(seed, i); results do not depend on threads.
/// progress(done, n_trials) is called after each batch of replicates.
OcSummary estimate_ocs(Engine engine, const calib::DesignSpec& spec, const Boundaries& b,
                       const wr::ScenarioTruth& s, std::size_t n_trials, TruthLabels labels, std::uint64_t seed,
                       unsigned threads = 1, const calib::ProgressFn& progress = {});

/// Aggregates replicate results into an OcSummary.
OcSummary summarize(std::span<const TrialResult> results, std::size_t analyses, TruthLabels labels);

struct RawPaths {
    calib::PathMatrix z;
    calib::PathMatrix p_t;  // per-analysis observed tie probability (clipped)
};

/// z-paths computed from simulated cohorts: count_wlt and wr_estimate on the
/// accumulated patients at each analysis. Row i uses Rng(seed, i).
RawPaths sample_raw_z_paths(const calib::DesignSpec& spec, const wr::ScenarioTruth& s, calib::Hypothesis tag,
                            std::size_t n_paths, std::uint64_t seed, unsigned threads = 1);

/// calibrate_efficacy with raw-data z-paths in place of asymptotic draws.
calib::CalibrationResult calibrate_from_raw_data(const calib::DesignSpec& spec, const wr::ScenarioTruth& s_null,
                                                 const wr::ScenarioTruth& s_alt, unsigned threads = 1,
                                                 const calib::ProgressFn& progress = {});

/// Mean observed tie probability over n_perm random re-splits of the pooled
/// cohort at the original arm sizes.
double estimate_null_tie_probability(std::span<const wr::PatientOutcome> treat_cohort,
                                     std::span<const wr::PatientOutcome> ctrl_cohort,
                                     const wr::EndpointHierarchy& h, std::size_t n_perm, stat::Rng& rng);

}  // namespace bmw::sim
