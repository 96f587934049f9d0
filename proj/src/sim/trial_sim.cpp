#include "bmw/sim/trial_sim.hpp"

#include <algorithm>
#include <cmath>

#include "bmw/errors.hpp"
#include "bmw/parallel.hpp"
#include "bmw/stat/normal.hpp"
#include "bmw/stat/spd.hpp"

namespace bmw::sim {

using inference::BoundarySet;
using inference::Decision;
using wr::Arm;

OutcomeSampler::OutcomeSampler(const wr::ScenarioTruth& s) : k_(s.q_e0.size()) {
    s.validate();
    if (k_ < 1 || k_ > 2) throw DomainError("outcome sampling supports one or two efficacy endpoints");
    const std::size_t d = k_ + 1;
    std::vector<double> c(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) c[i * d + i] = 1.0;
    auto set = [&](std::size_t i, std::size_t j, double v) { c[i * d + j] = c[j * d + i] = v; };
    set(0, k_, s.rho_et);
    if (k_ == 2) {
        set(0, 1, s.rho_ee);
        set(1, 2, s.effective_rho_e2t());
    }
    const stat::CholeskyFactor f(stat::SpdMatrix(d, std::move(c)));
    chol_.resize(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j <= i; ++j) chol_[i * d + j] = f.lower(i, j);

    const std::vector<double>* q[2] = {&s.q_e0, &s.q_e1};
    const double qt[2] = {s.q_t0, s.q_t1};
    for (int a = 0; a < 2; ++a) {
        for (double p : *q[a]) cut_[a].push_back(stat::normal_quantile(1.0 - p));
        cut_[a].push_back(stat::normal_quantile(1.0 - qt[a]));
    }
}

std::pair<std::uint32_t, bool> OutcomeSampler::sample_code(Arm arm, stat::Rng& rng) const {
    const std::size_t d = k_ + 1;
    double u[3];
    for (std::size_t i = 0; i < d; ++i) u[i] = rng.normal();
    const auto& cut = cut_[static_cast<int>(arm)];
    std::uint32_t code = 0;
    bool tox = false;
    for (std::size_t i = 0; i < d; ++i) {
        double w = 0.0;
        for (std::size_t j = 0; j <= i; ++j) w += chol_[i * d + j] * u[j];
        const bool hit = w >= cut[i];
        if (i < k_) code = (code << 1) | (hit ? 1u : 0u);
        else tox = hit;
    }
    return {code, tox};
}

wr::PatientOutcome OutcomeSampler::sample(Arm arm, stat::Rng& rng) const {
    const auto [code, tox] = sample_code(arm, rng);
    wr::PatientOutcome p;
    p.arm = arm;
    p.x_e.resize(k_);
    for (std::size_t i = 0; i < k_; ++i) p.x_e[i] = static_cast<std::uint8_t>((code >> (k_ - 1 - i)) & 1u);
    p.x_t = tox ? 1 : 0;
    return p;
}

wr::PatientOutcome sample_patient(const wr::ScenarioTruth& s, Arm arm, stat::Rng& rng) {
    return OutcomeSampler(s).sample(arm, rng);
}

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::Success: return "Success";
        case Outcome::FailEfficacy: return "FailEfficacy";
        case Outcome::FailToxicity: return "FailToxicity";
    }
    return "FailEfficacy";
}

namespace {

// Accumulating cohort: efficacy tallies plus toxicity counts per arm.
class Cohort {
   public:
    Cohort(const OutcomeSampler& sampler, double phi) : sampler_(sampler), phi_(phi), tally_(sampler.endpoints()) {}

    void enroll_to(std::int64_t n_total, stat::Rng& rng) {
        const std::int64_t n1 = wr::treated_at(phi_, n_total);
        const std::int64_t n0 = n_total - n1;
        while (tox_.n1 < n1) add(Arm::Treatment, rng);
        while (tox_.n0 < n0) add(Arm::Control, rng);
        n_ = n_total;
    }

    wr::WrEstimate estimate() const { return wr::wr_estimate(tally_.counts(), phi_, n_); }
    const inference::ToxCounts& tox() const { return tox_; }

   private:
    void add(Arm arm, stat::Rng& rng) {
        const auto [code, t] = sampler_.sample_code(arm, rng);
        tally_.add(arm, code);
        if (arm == Arm::Treatment) {
            ++tox_.n1;
            tox_.y1 += t ? 1 : 0;
        } else {
            ++tox_.n0;
            tox_.y0 += t ? 1 : 0;
        }
    }

    const OutcomeSampler& sampler_;
    double phi_;
    wr::WltTally tally_;
    inference::ToxCounts tox_;
    std::int64_t n_ = 0;
};

// PP_E from the statistic history under the configured tie source.
class EfficacyMonitor {
   public:
    explicit EfficacyMonitor(const calib::DesignSpec& spec) : spec_(spec) {}

    double update(const wr::WrEstimate& e) {
        z_.push_back(e.z);
        p_t_.push_back(spec_.trial_tie_source == calib::TieSource::Design
                           ? spec_.p_t_null
                           : std::min(e.p_hat_t, wr::kMaxTieProbability));
        return inference::posterior_from_history(z_, p_t_, spec_.schedule, spec_.prior).pp_e;
    }

   private:
    const calib::DesignSpec& spec_;
    std::vector<double> z_;
    std::vector<double> p_t_;
};

}  // namespace

TrialResult run_trial_bmw(const calib::DesignSpec& spec, const BoundarySet& b_e, const wr::ScenarioTruth& s,
                          stat::Rng& rng, bool futility_only) {
    const std::size_t R = spec.schedule.analyses();
    if (b_e.analyses() != R) throw ContractError("run_trial_bmw: boundaries do not match the schedule");
    const BoundarySet b = futility_only ? b_e.futility_only() : b_e;
    const OutcomeSampler sampler(s);
    Cohort cohort(sampler, spec.schedule.phi);
    EfficacyMonitor monitor(spec);
    TrialResult out;
    for (std::size_t r = 0; r < R; ++r) {
        cohort.enroll_to(spec.schedule.n_cum[r], rng);
        const double pp = monitor.update(cohort.estimate());
        out.pp_trace_e.push_back(pp);
        const Decision d = inference::evaluate_interim(pp, r, b);
        if (d == Decision::Continue) continue;
        out.stop_analysis = r;
        out.n_used = spec.schedule.n_cum[r];
        out.efficacy_rejected = d == Decision::StopSuperiority || d == Decision::Effective;
        out.toxicity_rejected = out.efficacy_rejected;
        out.decision = out.efficacy_rejected ? Outcome::Success : Outcome::FailEfficacy;
        return out;
    }
    throw ContractError("run_trial_bmw: decision sequence did not terminate");
}

TrialResult run_trial_graphical(const calib::DesignSpec& spec, const BoundarySet& b_e, const BoundarySet& b_t,
                                const wr::ScenarioTruth& s, stat::Rng& rng) {
    if (!spec.tox) throw ContractError("run_trial_graphical: design has no toxicity settings");
    const std::size_t R = spec.schedule.analyses();
    if (b_e.analyses() != R || b_t.analyses() != R)
        throw ContractError("run_trial_graphical: boundaries do not match the schedule");
    const OutcomeSampler sampler(s);
    Cohort cohort(sampler, spec.schedule.phi);
    EfficacyMonitor monitor(spec);
    TrialResult out;
    auto stop = [&](std::size_t r, Outcome o) {
        out.stop_analysis = r;
        out.n_used = spec.schedule.n_cum[r];
        out.decision = o;
        return out;
    };
    bool toxicity_phase = false;
    for (std::size_t r = 0; r < R; ++r) {
        cohort.enroll_to(spec.schedule.n_cum[r], rng);
        const bool final = r + 1 == R;
        if (!toxicity_phase) {
            const double pp_e = monitor.update(cohort.estimate());
            out.pp_trace_e.push_back(pp_e);
            if (final) {
                const double pp_t = inference::pp_toxicity(cohort.tox(), spec.tox->delta, spec.tox->prior);
                out.pp_trace_t.push_back(pp_t);
                if (!(pp_e > b_e.lambda)) return stop(r, Outcome::FailEfficacy);
                out.efficacy_rejected = true;
                if (!(pp_t > b_t.lambda)) return stop(r, Outcome::FailToxicity);
                out.toxicity_rejected = true;
                return stop(r, Outcome::Success);
            }
            const Decision d = inference::evaluate_interim(pp_e, r, b_e);
            if (d == Decision::StopFutility) return stop(r, Outcome::FailEfficacy);
            if (d == Decision::Continue) continue;
            out.efficacy_rejected = true;
            toxicity_phase = true;
        }
        const double pp_t = inference::pp_toxicity(cohort.tox(), spec.tox->delta, spec.tox->prior);
        out.pp_trace_t.push_back(pp_t);
        switch (inference::evaluate_interim(pp_t, r, b_t)) {
            case Decision::Continue: break;
            case Decision::StopFutility:
            case Decision::Ineffective: return stop(r, Outcome::FailToxicity);
            case Decision::StopSuperiority:
            case Decision::Effective: out.toxicity_rejected = true; return stop(r, Outcome::Success);
        }
    }
    throw ContractError("run_trial_graphical: decision sequence did not terminate");
}

TrialResult run_conventional(const calib::DesignSpec& spec, const wr::ScenarioTruth& s, stat::Rng& rng,
                             bool with_toxicity) {
    if (with_toxicity && !spec.tox) throw ContractError("run_conventional: design has no toxicity settings");
    const OutcomeSampler sampler(s);
    Cohort cohort(sampler, spec.schedule.phi);
    const std::size_t R = spec.schedule.analyses();
    cohort.enroll_to(spec.schedule.n_max(), rng);
    TrialResult out;
    out.stop_analysis = R - 1;
    out.n_used = spec.schedule.n_max();
    const double crit = spec.alpha < 1.0 ? stat::normal_quantile(1.0 - spec.alpha) : -INFINITY;
    out.efficacy_rejected = cohort.estimate().z > crit;
    if (!with_toxicity) {
        out.toxicity_rejected = out.efficacy_rejected;
        out.decision = out.efficacy_rejected ? Outcome::Success : Outcome::FailEfficacy;
        return out;
    }
    if (!out.efficacy_rejected) {
        out.decision = Outcome::FailEfficacy;
        return out;
    }
    const auto& c = cohort.tox();
    const double p1 = static_cast<double>(c.y1) / static_cast<double>(c.n1);
    const double p0 = static_cast<double>(c.y0) / static_cast<double>(c.n0);
    const double se = std::sqrt(p1 * (1.0 - p1) / static_cast<double>(c.n1) + p0 * (1.0 - p0) / static_cast<double>(c.n0));
    const double diff = p1 - p0 - spec.tox->delta;
    out.toxicity_rejected = se > 0.0 ? diff / se < -crit : diff < 0.0;
    out.decision = out.toxicity_rejected ? Outcome::Success : Outcome::FailToxicity;
    return out;
}

std::string_view to_string(Engine e) {
    switch (e) {
        case Engine::Bmw: return "bmw";
        case Engine::BmwFutility: return "bmw_f";
        case Engine::Graphical: return "graphical";
        case Engine::Conventional: return "conventional";
        case Engine::ConventionalToxicity: return "conventional_tox";
    }
    return "bmw";
}

std::optional<Engine> engine_from_string(std::string_view s) {
    for (auto e : {Engine::Bmw, Engine::BmwFutility, Engine::Graphical, Engine::Conventional,
                   Engine::ConventionalToxicity})
        if (to_string(e) == s) return e;
    return std::nullopt;
}

OcSummary summarize(std::span<const TrialResult> results, std::size_t analyses, TruthLabels labels) {
    OcSummary oc;
    oc.n_trials = results.size();
    oc.stop_distribution.assign(analyses, {0.0, 0.0, 0.0});
    if (results.empty()) return oc;
    std::size_t rej_e = 0, rej_t = 0, errors = 0, correct = 0;
    double n_sum = 0.0;
    std::vector<std::array<std::size_t, 3>> stops(analyses, {0, 0, 0});
    const bool go_is_correct = !labels.efficacy_null && !labels.toxicity_null;
    for (const auto& r : results) {
        rej_e += r.efficacy_rejected;
        rej_t += r.toxicity_rejected;
        if ((labels.efficacy_null && r.efficacy_rejected) || (labels.toxicity_null && r.toxicity_rejected)) ++errors;
        if ((r.decision == Outcome::Success) == go_is_correct) ++correct;
        n_sum += static_cast<double>(r.n_used);
        stops.at(r.stop_analysis)[static_cast<int>(r.decision)] += 1;
    }
    const double n = static_cast<double>(results.size());
    oc.reject_rate_e = static_cast<double>(rej_e) / n;
    oc.reject_rate_t = static_cast<double>(rej_t) / n;
    if (labels.efficacy_null || labels.toxicity_null) oc.fwer = static_cast<double>(errors) / n;
    oc.pcs = static_cast<double>(correct) / n;
    oc.expected_n = n_sum / n;
    for (std::size_t a = 0; a < analyses; ++a)
        for (int k = 0; k < 3; ++k) oc.stop_distribution[a][k] = static_cast<double>(stops[a][k]) / n;
    return oc;
}

OcSummary estimate_ocs(Engine engine, const calib::DesignSpec& spec, const Boundaries& b,
                       const wr::ScenarioTruth& s, std::size_t n_trials, TruthLabels labels, std::uint64_t seed,
                       unsigned threads, const calib::ProgressFn& progress) {
    if (n_trials < 1) throw ContractError("estimate_ocs: n_trials must be at least 1");
    if (engine == Engine::Graphical && !b.toxicity)
        throw ContractError("estimate_ocs: the graphical engine needs toxicity boundaries");
    s.validate();
    std::vector<TrialResult> results(n_trials);
    constexpr std::size_t kBatch = 2000;
    for (std::size_t begin = 0; begin < n_trials; begin += kBatch) {
        const std::size_t count = std::min(kBatch, n_trials - begin);
        parallel_for(count, threads, [&](std::size_t j) {
            const std::size_t i = begin + j;
            stat::Rng rng(seed, i);
            switch (engine) {
                case Engine::Bmw: results[i] = run_trial_bmw(spec, b.efficacy, s, rng, false); break;
                case Engine::BmwFutility: results[i] = run_trial_bmw(spec, b.efficacy, s, rng, true); break;
                case Engine::Graphical:
                    results[i] = run_trial_graphical(spec, b.efficacy, *b.toxicity, s, rng);
                    break;
                case Engine::Conventional: results[i] = run_conventional(spec, s, rng, false); break;
                case Engine::ConventionalToxicity: results[i] = run_conventional(spec, s, rng, true); break;
            }
        });
        if (progress) progress(begin + count, n_trials);
    }
    return summarize(results, spec.schedule.analyses(), labels);
}

RawPaths sample_raw_z_paths(const calib::DesignSpec& spec, const wr::ScenarioTruth& s, calib::Hypothesis tag,
                            std::size_t n_paths, std::uint64_t seed, unsigned threads) {
    spec.schedule.validate();
    const OutcomeSampler sampler(s);
    const std::size_t R = spec.schedule.analyses();
    RawPaths out{calib::PathMatrix(n_paths, R, tag), calib::PathMatrix(n_paths, R, tag)};
    parallel_for(n_paths, threads, [&](std::size_t i) {
        stat::Rng rng(seed, i);
        Cohort cohort(sampler, spec.schedule.phi);
        auto z = out.z.row(i);
        auto pt = out.p_t.row(i);
        for (std::size_t r = 0; r < R; ++r) {
            cohort.enroll_to(spec.schedule.n_cum[r], rng);
            const auto e = cohort.estimate();
            z[r] = e.z;
            pt[r] = std::min(e.p_hat_t, wr::kMaxTieProbability);
        }
    });
    return out;
}

calib::CalibrationResult calibrate_from_raw_data(const calib::DesignSpec& spec, const wr::ScenarioTruth& s_null,
                                                 const wr::ScenarioTruth& s_alt, unsigned threads,
                                                 const calib::ProgressFn& progress) {
    spec.validate();
    const auto z_null = sample_raw_z_paths(spec, s_null, calib::Hypothesis::Null, spec.n_paths,
                                           stat::derive_seed(spec.seed, "raw/null"), threads);
    const auto z_alt = sample_raw_z_paths(spec, s_alt, calib::Hypothesis::Alternative, spec.n_paths,
                                          stat::derive_seed(spec.seed, "raw/alt"), threads);
    const auto pp_null = calib::pp_matrix(
        z_null.z, inference::information_vector(spec.schedule, spec.p_t_null), spec.prior, threads);
    const auto pp_alt = calib::pp_matrix(
        z_alt.z, inference::information_vector(spec.schedule, spec.p_t_alt), spec.prior, threads);
    return calib::grid_search(pp_null, pp_alt, spec.schedule, spec.grid, spec.alpha, spec.futility_only, threads,
                              progress);
}

double estimate_null_tie_probability(std::span<const wr::PatientOutcome> treat_cohort,
                                     std::span<const wr::PatientOutcome> ctrl_cohort,
                                     const wr::EndpointHierarchy& h, std::size_t n_perm, stat::Rng& rng) {
    if (n_perm < 100) throw ContractError("estimate_null_tie_probability: n_perm must be at least 100");
    if (treat_cohort.empty() || ctrl_cohort.empty()) throw ContractError("cohorts must be nonempty");
    std::vector<std::uint32_t> pooled;
    pooled.reserve(treat_cohort.size() + ctrl_cohort.size());
    for (auto cohort : {treat_cohort, ctrl_cohort})
        for (const auto& p : cohort) {
            if (p.x_e.size() != h.size()) throw ContractError("outcome does not conform to the hierarchy");
            pooled.push_back(wr::efficacy_code(p.x_e));
        }
    const std::size_t n1 = treat_cohort.size();
    double sum = 0.0;
    for (std::size_t k = 0; k < n_perm; ++k) {
        for (std::size_t i = pooled.size() - 1; i > 0; --i) std::swap(pooled[i], pooled[rng.below(i + 1)]);
        wr::WltTally tally(h.size());
        for (std::size_t i = 0; i < pooled.size(); ++i) tally.add(i < n1 ? Arm::Treatment : Arm::Control, pooled[i]);
        const auto c = tally.counts();
        sum += static_cast<double>(c.n_tie) / static_cast<double>(c.pairs());
    }
    return sum / static_cast<double>(n_perm);
}

}  // namespace bmw::sim
