#include "bmw/win_ratio/win_ratio.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "bmw/errors.hpp"
#include "bmw/stat/bivariate_normal.hpp"
#include "bmw/stat/normal.hpp"

namespace bmw::wr {

namespace {

constexpr std::size_t kMaxTallyEndpoints = 16;

void check_conforms(const PatientOutcome& p, const EndpointHierarchy& h) {
    if (p.x_e.size() != h.size())
        throw ContractError("patient outcome has " + std::to_string(p.x_e.size()) +
                            " efficacy endpoints, hierarchy has " + std::to_string(h.size()));
    for (auto v : p.x_e)
        if (v > 1) throw ContractError("efficacy endpoint values must be 0 or 1");
    if (p.x_t > 1) throw ContractError("toxicity indicator must be 0 or 1");
}

}  // namespace

EndpointHierarchy::EndpointHierarchy(std::vector<std::string> endpoints) : endpoints_(std::move(endpoints)) {
    if (endpoints_.empty()) throw ContractError("endpoint hierarchy needs at least one endpoint");
    std::set<std::string> seen;
    for (const auto& e : endpoints_)
        if (!seen.insert(e).second) throw ContractError("duplicate endpoint identifier: " + e);
}

EndpointHierarchy EndpointHierarchy::or_efs3() { return EndpointHierarchy({"OR", "EFS3"}); }

PairResult compare_pair(const PatientOutcome& treat, const PatientOutcome& ctrl, const EndpointHierarchy& h) {
    check_conforms(treat, h);
    check_conforms(ctrl, h);
    for (std::size_t k = 0; k < h.size(); ++k) {
        if (treat.x_e[k] != ctrl.x_e[k]) return treat.x_e[k] > ctrl.x_e[k] ? PairResult::Win : PairResult::Loss;
    }
    return PairResult::Tie;
}

void WltCounts::validate() const {
    if (n_win < 0 || n_loss < 0 || n_tie < 0 || n_treat < 0 || n_ctrl < 0)
        throw ContractError("win/loss/tie counts must be non-negative");
    if (n_win + n_loss + n_tie != n_treat * n_ctrl)
        throw ContractError("wins + losses + ties must equal n_treat * n_ctrl");
}

std::uint32_t efficacy_code(std::span<const std::uint8_t> x_e) {
    if (x_e.size() > 32) throw ContractError("at most 32 efficacy endpoints can be encoded");
    std::uint32_t code = 0;
    for (auto v : x_e) code = (code << 1) | (v ? 1u : 0u);
    return code;
}

WltTally::WltTally(std::size_t n_endpoints) {
    if (n_endpoints == 0 || n_endpoints > kMaxTallyEndpoints)
        throw ContractError("WltTally supports 1 to 16 endpoints");
    treat_.assign(std::size_t{1} << n_endpoints, 0);
    ctrl_.assign(std::size_t{1} << n_endpoints, 0);
}

void WltTally::add(Arm arm, std::uint32_t code) {
    if (code >= treat_.size()) throw ContractError("efficacy code out of range for tally");
    if (arm == Arm::Treatment) {
        ++treat_[code];
        ++n_treat_;
    } else {
        ++ctrl_[code];
        ++n_ctrl_;
    }
}

WltCounts WltTally::counts() const {
    WltCounts c;
    c.n_treat = n_treat_;
    c.n_ctrl = n_ctrl_;
    // ctrl_below = number of control patients with a strictly smaller code.
    std::int64_t ctrl_below = 0;
    for (std::size_t code = 0; code < treat_.size(); ++code) {
        c.n_win += treat_[code] * ctrl_below;
        c.n_tie += treat_[code] * ctrl_[code];
        ctrl_below += ctrl_[code];
    }
    c.n_loss = c.pairs() - c.n_win - c.n_tie;
    return c;
}

WltCounts count_wlt(std::span<const PatientOutcome> treat_cohort, std::span<const PatientOutcome> ctrl_cohort,
                    const EndpointHierarchy& h) {
    if (treat_cohort.empty() || ctrl_cohort.empty()) throw ContractError("count_wlt: cohorts must be nonempty");
    for (const auto& p : treat_cohort) check_conforms(p, h);
    for (const auto& p : ctrl_cohort) check_conforms(p, h);

    if (h.size() <= kMaxTallyEndpoints) {
        WltTally tally(h.size());
        for (const auto& p : treat_cohort) tally.add(Arm::Treatment, efficacy_code(p.x_e));
        for (const auto& p : ctrl_cohort) tally.add(Arm::Control, efficacy_code(p.x_e));
        return tally.counts();
    }
    WltCounts c;
    c.n_treat = static_cast<std::int64_t>(treat_cohort.size());
    c.n_ctrl = static_cast<std::int64_t>(ctrl_cohort.size());
    for (const auto& t : treat_cohort) {
        for (const auto& k : ctrl_cohort) {
            switch (compare_pair(t, k, h)) {
                case PairResult::Win: ++c.n_win; break;
                case PairResult::Loss: ++c.n_loss; break;
                case PairResult::Tie: ++c.n_tie; break;
            }
        }
    }
    return c;
}

std::int64_t treated_at(double phi, std::int64_t n_total) {
    return static_cast<std::int64_t>(std::llround(phi * static_cast<double>(n_total)));
}

WrEstimate wr_estimate(const WltCounts& c, double phi, std::int64_t n_total) {
    c.validate();
    if (!(phi > 0.0 && phi < 1.0)) throw DomainError("wr_estimate: phi must lie in (0,1)");
    if (n_total != c.n_treat + c.n_ctrl) throw ContractError("wr_estimate: n_total must equal n_treat + n_ctrl");
    if (c.pairs() <= 0) throw ContractError("wr_estimate: both arms must be nonempty");

    const double pairs = static_cast<double>(c.pairs());
    WrEstimate e;
    e.p_hat_w = static_cast<double>(c.n_win) / pairs;
    e.p_hat_l = static_cast<double>(c.n_loss) / pairs;
    e.p_hat_t = static_cast<double>(c.n_tie) / pairs;

    const double p_t = std::min(e.p_hat_t, kMaxTieProbability);
    e.info = 3.0 * phi * (1.0 - phi) * (1.0 - p_t) * static_cast<double>(n_total) / (4.0 * (1.0 + p_t));

    double wins = static_cast<double>(c.n_win);
    double losses = static_cast<double>(c.n_loss);
    if (c.n_win == 0 || c.n_loss == 0) {
        wins += 0.5;
        losses += 0.5;
    }
    e.wr = wins / losses;
    e.theta_hat = std::log(wins / losses);
    e.z = (c.n_win == 0 && c.n_loss == 0) ? 0.0 : e.theta_hat * std::sqrt(e.info);
    return e;
}

void ScenarioTruth::validate() const {
    auto prob = [](double p, const char* what) {
        if (!(p > 0.0 && p < 1.0)) throw DomainError(std::string(what) + " must lie in (0,1)");
    };
    if (q_e0.empty() || q_e0.size() != q_e1.size())
        throw DomainError("q_e0 and q_e1 must be nonempty and of equal length");
    for (double q : q_e0) prob(q, "q_e0 entries");
    for (double q : q_e1) prob(q, "q_e1 entries");
    prob(q_t0, "q_t0");
    prob(q_t1, "q_t1");
    const double r3 = effective_rho_e2t();
    if (!(std::fabs(rho_ee) < 1.0) || !(std::fabs(rho_et) < 1.0) || !(std::fabs(r3) < 1.0))
        throw DomainError("latent correlations must lie in (-1,1)");
    // 3x3 latent correlation matrix must be positive definite.
    const double det = 1.0 + 2.0 * rho_ee * rho_et * r3 - rho_ee * rho_ee - rho_et * rho_et - r3 * r3;
    if (!(det > 0.0)) throw DomainError("latent correlation matrix is not positive definite");
}

std::array<double, 4> efficacy_cell_probabilities(double q1, double q2, double rho) {
    if (!(q1 > 0.0 && q1 < 1.0) || !(q2 > 0.0 && q2 < 1.0))
        throw DomainError("efficacy marginals must lie in (0,1)");
    const double k1 = stat::normal_quantile(1.0 - q1);
    const double k2 = stat::normal_quantile(1.0 - q2);
    const double p11 = stat::bvn_upper_orthant(k1, k2, rho);
    const double p10 = q1 - p11;
    const double p01 = q2 - p11;
    const double p00 = 1.0 - p11 - p10 - p01;
    // code = 2*x1 + x2
    return {p00, p01, p10, p11};
}

TheoreticalWlt theoretical_wlt(const ScenarioTruth& s, const EndpointHierarchy& h) {
    s.validate();
    if (h.size() != 2 || s.q_e0.size() != 2)
        throw DomainError("theoretical_wlt is defined for two binary endpoints");
    const auto c0 = efficacy_cell_probabilities(s.q_e0[0], s.q_e0[1], s.rho_ee);
    const auto c1 = efficacy_cell_probabilities(s.q_e1[0], s.q_e1[1], s.rho_ee);
    TheoreticalWlt t;
    for (std::uint32_t a = 0; a < 4; ++a) {
        for (std::uint32_t b = 0; b < 4; ++b) {
            const double p = c1[a] * c0[b];
            if (a > b) t.p_w += p;
            else if (a < b) t.p_l += p;
        }
    }
    t.p_t = 1.0 - t.p_w - t.p_l;
    if (!(t.p_w > 0.0 && t.p_l > 0.0)) throw DomainError("theoretical_wlt: degenerate win/loss probabilities");
    t.theta = std::log(t.p_w / t.p_l);
    return t;
}

}  // namespace bmw::wr
