#include "bmw/service/json_io.hpp"

#include "bmw/errors.hpp"

using nlohmann::json;

namespace bmw::inference {

void to_json(json& j, const AnalysisSchedule& v) { j = json{{"n_cum", v.n_cum}, {"phi", v.phi}}; }
void from_json(const json& j, AnalysisSchedule& v) {
    j.at("n_cum").get_to(v.n_cum);
    j.at("phi").get_to(v.phi);
}

void to_json(json& j, const NormalPrior& v) { j = json{{"mean", v.mean}, {"variance", v.variance}}; }
void from_json(const json& j, NormalPrior& v) {
    j.at("mean").get_to(v.mean);
    j.at("variance").get_to(v.variance);
}

void to_json(json& j, const BetaPrior& v) { j = json{{"a", v.a}, {"b", v.b}}; }
void from_json(const json& j, BetaPrior& v) {
    j.at("a").get_to(v.a);
    j.at("b").get_to(v.b);
}

void to_json(json& j, const PosteriorTheta& v) {
    j = json{{"mean", v.mean}, {"variance", v.variance}, {"pp_e", v.pp_e}};
}
void from_json(const json& j, PosteriorTheta& v) {
    j.at("mean").get_to(v.mean);
    j.at("variance").get_to(v.variance);
    j.at("pp_e").get_to(v.pp_e);
}

void to_json(json& j, const ToxCounts& v) { j = json{{"y1", v.y1}, {"n1", v.n1}, {"y0", v.y0}, {"n0", v.n0}}; }
void from_json(const json& j, ToxCounts& v) {
    j.at("y1").get_to(v.y1);
    j.at("n1").get_to(v.n1);
    j.at("y0").get_to(v.y0);
    j.at("n0").get_to(v.n0);
}

void to_json(json& j, const BoundarySet& v) {
    json rows = json::array();
    for (std::size_t r = 0; r < v.analyses(); ++r)
        rows.push_back({{"analysis_index", r + 1},
                        {"n_cum", v.n_cum[r]},
                        {"futility_pp", v.futility[r]},
                        {"superiority_pp", v.superiority[r]}});
    j = json{{"lambda", v.lambda}, {"gamma", v.gamma}, {"analyses", std::move(rows)}};
}
void from_json(const json& j, BoundarySet& v) {
    j.at("lambda").get_to(v.lambda);
    j.at("gamma").get_to(v.gamma);
    v.n_cum.clear();
    v.futility.clear();
    v.superiority.clear();
    for (const auto& row : j.at("analyses")) {
        v.n_cum.push_back(row.at("n_cum").get<std::int64_t>());
        v.futility.push_back(row.at("futility_pp").get<double>());
        v.superiority.push_back(row.at("superiority_pp").get<double>());
    }
}

}  // namespace bmw::inference

namespace bmw::wr {

void to_json(json& j, const WltCounts& v) {
    j = json{{"n_win", v.n_win}, {"n_loss", v.n_loss}, {"n_tie", v.n_tie}, {"n_treat", v.n_treat},
             {"n_ctrl", v.n_ctrl}};
}
void from_json(const json& j, WltCounts& v) {
    j.at("n_win").get_to(v.n_win);
    j.at("n_loss").get_to(v.n_loss);
    j.at("n_tie").get_to(v.n_tie);
    j.at("n_treat").get_to(v.n_treat);
    j.at("n_ctrl").get_to(v.n_ctrl);
}

void to_json(json& j, const ScenarioTruth& v) {
    j = json{{"q_e0", v.q_e0}, {"q_e1", v.q_e1}, {"q_t0", v.q_t0}, {"q_t1", v.q_t1},
             {"rho_ee", v.rho_ee}, {"rho_et", v.rho_et}, {"rho_e2t", v.effective_rho_e2t()}};
}
void from_json(const json& j, ScenarioTruth& v) {
    j.at("q_e0").get_to(v.q_e0);
    j.at("q_e1").get_to(v.q_e1);
    v.q_t0 = j.value("q_t0", 0.3);
    v.q_t1 = j.value("q_t1", 0.3);
    v.rho_ee = j.value("rho_ee", 0.25);
    v.rho_et = j.value("rho_et", 0.2);
    v.rho_e2t = j.contains("rho_e2t") ? j.at("rho_e2t").get<double>() : -2.0;
}

}  // namespace bmw::wr

namespace bmw::calib {

void to_json(json& j, const ToxicityTargets& v) {
    j = json{{"delta", v.delta}, {"q_t0_null", v.q_t0_null}, {"q_t1_alt", v.q_t1_alt},
             {"prior_a", v.prior.a}, {"prior_b", v.prior.b}};
}
void from_json(const json& j, ToxicityTargets& v) {
    j.at("delta").get_to(v.delta);
    j.at("q_t0_null").get_to(v.q_t0_null);
    j.at("q_t1_alt").get_to(v.q_t1_alt);
    v.prior.a = j.value("prior_a", 1.0);
    v.prior.b = j.value("prior_b", 1.0);
}

void to_json(json& j, const Grid& v) { j = json{{"lambda", v.lambdas}, {"gamma", v.gammas}}; }
void from_json(const json& j, Grid& v) {
    j.at("lambda").get_to(v.lambdas);
    j.at("gamma").get_to(v.gammas);
}

void to_json(json& j, const GridPoint& v) {
    j = json{{"lambda", v.lambda},   {"gamma", v.gamma},   {"poe_null", v.poe_null},
             {"poe_alt", v.poe_alt}, {"en_null", v.en_null}, {"en_alt", v.en_alt}};
}
void from_json(const json& j, GridPoint& v) {
    j.at("lambda").get_to(v.lambda);
    j.at("gamma").get_to(v.gamma);
    j.at("poe_null").get_to(v.poe_null);
    j.at("poe_alt").get_to(v.poe_alt);
    j.at("en_null").get_to(v.en_null);
    j.at("en_alt").get_to(v.en_alt);
}

void to_json(json& j, const CalibrationResult& v) {
    j = json{{"lambda_opt", v.lambda_opt},
             {"gamma_opt", v.gamma_opt},
             {"poe_null", v.poe_null},
             {"poe_alt", v.poe_alt},
             {"en_null", v.en_null},
             {"en_alt", v.en_alt},
             {"feasible_count", v.feasible_count},
             {"futility_only", v.futility_only},
             {"boundaries", v.boundaries},
             {"surface", v.surface}};
}
void from_json(const json& j, CalibrationResult& v) {
    j.at("lambda_opt").get_to(v.lambda_opt);
    j.at("gamma_opt").get_to(v.gamma_opt);
    j.at("poe_null").get_to(v.poe_null);
    j.at("poe_alt").get_to(v.poe_alt);
    j.at("en_null").get_to(v.en_null);
    j.at("en_alt").get_to(v.en_alt);
    j.at("feasible_count").get_to(v.feasible_count);
    j.at("futility_only").get_to(v.futility_only);
    j.at("boundaries").get_to(v.boundaries);
    j.at("surface").get_to(v.surface);
}

}  // namespace bmw::calib

namespace bmw::sim {

void to_json(json& j, const TruthLabels& v) {
    j = json{{"efficacy_null", v.efficacy_null}, {"toxicity_null", v.toxicity_null}};
}
void from_json(const json& j, TruthLabels& v) {
    v.efficacy_null = j.value("efficacy_null", false);
    v.toxicity_null = j.value("toxicity_null", false);
}

void to_json(json& j, const OcSummary& v) {
    json stops = json::array();
    for (const auto& s : v.stop_distribution)
        stops.push_back({{"success", s[0]}, {"fail_efficacy", s[1]}, {"fail_toxicity", s[2]}});
    j = json{{"n_trials", v.n_trials},
             {"reject_rate_e", v.reject_rate_e},
             {"reject_rate_t", v.reject_rate_t},
             {"fwer", v.fwer ? json(*v.fwer) : json(nullptr)},
             {"pcs", v.pcs},
             {"expected_n", v.expected_n},
             {"stop_distribution", std::move(stops)}};
}
void from_json(const json& j, OcSummary& v) {
    j.at("n_trials").get_to(v.n_trials);
    j.at("reject_rate_e").get_to(v.reject_rate_e);
    j.at("reject_rate_t").get_to(v.reject_rate_t);
    const auto& f = j.at("fwer");
    v.fwer = f.is_null() ? std::nullopt : std::optional<double>(f.get<double>());
    j.at("pcs").get_to(v.pcs);
    j.at("expected_n").get_to(v.expected_n);
    v.stop_distribution.clear();
    for (const auto& s : j.at("stop_distribution"))
        v.stop_distribution.push_back(
            {s.at("success").get<double>(), s.at("fail_efficacy").get<double>(), s.at("fail_toxicity").get<double>()});
}

void to_json(json& j, const TrialResult& v) {
    j = json{{"decision", to_string(v.decision)},
             {"stop_analysis", v.stop_analysis + 1},
             {"n_used", v.n_used},
             {"pp_trace_e", v.pp_trace_e},
             {"pp_trace_t", v.pp_trace_t},
             {"efficacy_rejected", v.efficacy_rejected},
             {"toxicity_rejected", v.toxicity_rejected}};
}
void from_json(const json& j, TrialResult& v) {
    const auto d = j.at("decision").get<std::string>();
    if (d == "Success") v.decision = Outcome::Success;
    else if (d == "FailEfficacy") v.decision = Outcome::FailEfficacy;
    else if (d == "FailToxicity") v.decision = Outcome::FailToxicity;
    else throw ContractError("unknown trial decision '" + d + "'");
    v.stop_analysis = j.at("stop_analysis").get<std::size_t>() - 1;
    j.at("n_used").get_to(v.n_used);
    j.at("pp_trace_e").get_to(v.pp_trace_e);
    j.at("pp_trace_t").get_to(v.pp_trace_t);
    j.at("efficacy_rejected").get_to(v.efficacy_rejected);
    j.at("toxicity_rejected").get_to(v.toxicity_rejected);
}

}  // namespace bmw::sim
