#include "bmw/service/config.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "bmw/errors.hpp"
#include "bmw/service/json_io.hpp"
#include "reader.hpp"

using nlohmann::json;

namespace bmw::service {

namespace {

using detail::Reader;

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
        if (!out.empty()) out += '\n';
        out += s;
    }
    return out;
}

void parse_design(Reader& rd, const json& d, Config& c) {
    auto& spec = c.design;
    if (auto v = rd.number(d, "alpha", "design.alpha", true)) spec.alpha = *v;
    if (auto v = rd.number(d, "phi", "design.phi", false)) spec.schedule.phi = *v;
    if (!d.contains("n_cum")) {
        rd.fail("design.n_cum", "is required");
    } else {
        const json& n = d.at("n_cum");
        bool ok = n.is_array() && !n.empty();
        std::vector<std::int64_t> v;
        if (ok)
            for (const auto& e : n) {
                if (!e.is_number_integer() || e.get<std::int64_t>() <= 0) {
                    ok = false;
                    break;
                }
                v.push_back(e.get<std::int64_t>());
            }
        if (!ok) {
            rd.fail("design.n_cum", "must be a nonempty array of positive integers");
        } else {
            for (std::size_t i = 1; i < v.size(); ++i)
                if (v[i] <= v[i - 1]) {
                    rd.fail("design.n_cum", "must be strictly increasing");
                    break;
                }
            spec.schedule.n_cum = std::move(v);
        }
    }
    if (!(spec.schedule.phi > 0.0 && spec.schedule.phi < 1.0)) rd.fail("design.phi", "must lie in (0,1)");
    if (!(spec.alpha > 0.0 && spec.alpha <= 1.0)) rd.fail("design.alpha", "must lie in (0,1]");

    if (const json* p = rd.object(d, "prior", "design.prior", false)) {
        if (auto v = rd.number(*p, "mean", "design.prior.mean", false)) spec.prior.mean = *v;
        if (auto v = rd.number(*p, "variance", "design.prior.variance", false)) spec.prior.variance = *v;
        if (!(spec.prior.variance > 0.0)) rd.fail("design.prior.variance", "must be positive");
    }
    if (auto v = rd.number(d, "theta_alt", "design.theta_alt", false)) spec.theta_alt = *v;
    if (!(spec.theta_alt > 0.0)) rd.fail("design.theta_alt", "must be positive");
    if (auto v = rd.unsigned_int(d, "n_paths", "design.n_paths", false)) spec.n_paths = *v;
    if (spec.n_paths < 1000) rd.fail("design.n_paths", "must be at least 1000");

    if (const json* s = rd.object(d, "design_scenarios", "design.design_scenarios", false)) {
        DesignScenarios ds;
        auto ctrl = rd.numbers(*s, "control", "design.design_scenarios.control", true);
        auto tn = rd.numbers(*s, "treatment_null", "design.design_scenarios.treatment_null", true);
        auto ta = rd.numbers(*s, "treatment_alt", "design.design_scenarios.treatment_alt", true);
        if (auto v = rd.number(*s, "rho_ee", "design.design_scenarios.rho_ee", false)) ds.rho_ee = *v;
        if (ctrl && tn && ta) {
            ds.control = *ctrl;
            ds.treatment_null = *tn;
            ds.treatment_alt = *ta;
            rd.probability_vector(ds.control, "design.design_scenarios.control");
            rd.probability_vector(ds.treatment_null, "design.design_scenarios.treatment_null");
            rd.probability_vector(ds.treatment_alt, "design.design_scenarios.treatment_alt");
            if (ds.control.size() != 2 || ds.treatment_null.size() != 2 || ds.treatment_alt.size() != 2)
                rd.fail("design.design_scenarios", "marginal vectors must have two entries");
            if (!(std::fabs(ds.rho_ee) < 1.0)) rd.fail("design.design_scenarios.rho_ee", "must lie in (-1,1)");
            c.design_scenarios = ds;
        }
    }
    const auto pn = rd.number(d, "p_t_null", "design.p_t_null", false);
    const auto pa = rd.number(d, "p_t_alt", "design.p_t_alt", false);
    const std::size_t before = rd.issues.size();
    if ((!pn || !pa) && !c.design_scenarios)
        rd.fail("design", "needs p_t_null and p_t_alt, or design_scenarios to derive them");
    if (rd.issues.size() == before && c.design_scenarios) {
        try {
            const auto h = wr::EndpointHierarchy::or_efs3();
            spec.p_t_null = wr::theoretical_wlt(c.design_scenarios->null_truth(), h).p_t;
            spec.p_t_alt = wr::theoretical_wlt(c.design_scenarios->alt_truth(), h).p_t;
        } catch (const std::exception& e) {
            rd.fail("design.design_scenarios", e.what());
        }
    }
    if (pn) spec.p_t_null = *pn;
    if (pa) spec.p_t_alt = *pa;
    if (!(spec.p_t_null >= 0.0 && spec.p_t_null < 1.0)) rd.fail("design.p_t_null", "must lie in [0,1)");
    if (!(spec.p_t_alt >= 0.0 && spec.p_t_alt < 1.0)) rd.fail("design.p_t_alt", "must lie in [0,1)");

    if (const json* t = rd.object(d, "toxicity", "design.toxicity", false)) {
        calib::ToxicityTargets tox;
        if (auto v = rd.number(*t, "delta", "design.toxicity.delta", true)) tox.delta = *v;
        if (auto v = rd.number(*t, "q_t0_null", "design.toxicity.q_t0_null", true)) tox.q_t0_null = *v;
        if (auto v = rd.number(*t, "q_t1_alt", "design.toxicity.q_t1_alt", true)) tox.q_t1_alt = *v;
        if (auto v = rd.number(*t, "prior_a", "design.toxicity.prior_a", false)) tox.prior.a = *v;
        if (auto v = rd.number(*t, "prior_b", "design.toxicity.prior_b", false)) tox.prior.b = *v;
        if (!(tox.delta > 0.0 && tox.delta < 1.0)) rd.fail("design.toxicity.delta", "must lie in (0,1)");
        if (!(tox.q_t0_null > 0.0 && tox.q_t0_null + tox.delta < 1.0))
            rd.fail("design.toxicity.q_t0_null", "must satisfy 0 < q_t0_null < 1 - delta");
        if (!(tox.q_t1_alt > 0.0 && tox.q_t1_alt < 1.0)) rd.fail("design.toxicity.q_t1_alt", "must lie in (0,1)");
        if (!(tox.prior.a > 0.0 && tox.prior.b > 0.0)) rd.fail("design.toxicity", "prior_a and prior_b must be positive");
        spec.tox = tox;
    }

    if (auto m = rd.string(d, "calibration_method", "design.calibration_method", false)) {
        if (*m == "asymptotic") c.method = CalibrationMethod::Asymptotic;
        else if (*m == "raw_data") c.method = CalibrationMethod::RawData;
        else rd.fail("design.calibration_method", "must be \"asymptotic\" or \"raw_data\"");
    }
    if (c.method == CalibrationMethod::RawData && !c.design_scenarios)
        rd.fail("design.calibration_method", "raw_data calibration needs design_scenarios");
    if (auto m = rd.string(d, "tie_source", "design.tie_source", false)) {
        if (*m == "observed") spec.trial_tie_source = calib::TieSource::Observed;
        else if (*m == "design") spec.trial_tie_source = calib::TieSource::Design;
        else rd.fail("design.tie_source", "must be \"observed\" or \"design\"");
    }
}

void parse_scenarios(Reader& rd, const json& doc, Config& c) {
    if (!doc.contains("scenarios")) return;
    const json& arr = doc.at("scenarios");
    if (!arr.is_array()) {
        rd.fail("scenarios", "must be an array");
        return;
    }
    std::set<std::string> ids;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string path = "scenarios[" + std::to_string(i) + "]";
        const json& s = arr[i];
        if (!s.is_object()) {
            rd.fail(path, "must be an object");
            continue;
        }
        ScenarioEntry e;
        const std::size_t before = rd.issues.size();
        if (auto v = rd.string(s, "id", path + ".id", true)) e.id = *v;
        if (!e.id.empty() && !ids.insert(e.id).second) rd.fail(path + ".id", "duplicate scenario id '" + e.id + "'");
        if (auto v = rd.numbers(s, "q_e0", path + ".q_e0", true)) e.truth.q_e0 = *v;
        if (auto v = rd.numbers(s, "q_e1", path + ".q_e1", true)) e.truth.q_e1 = *v;
        if (auto v = rd.number(s, "q_t0", path + ".q_t0", false)) e.truth.q_t0 = *v;
        if (auto v = rd.number(s, "q_t1", path + ".q_t1", false)) e.truth.q_t1 = *v;
        if (auto v = rd.number(s, "rho_ee", path + ".rho_ee", false)) e.truth.rho_ee = *v;
        if (auto v = rd.number(s, "rho_et", path + ".rho_et", false)) e.truth.rho_et = *v;
        if (auto v = rd.number(s, "rho_e2t", path + ".rho_e2t", false)) e.truth.rho_e2t = *v;
        if (const json* l = rd.object(s, "labels", path + ".labels", false)) {
            if (auto v = rd.boolean(*l, "efficacy_null", path + ".labels.efficacy_null")) e.labels.efficacy_null = *v;
            if (auto v = rd.boolean(*l, "toxicity_null", path + ".labels.toxicity_null")) e.labels.toxicity_null = *v;
        }
        if (rd.issues.size() == before) {
            try {
                e.truth.validate();
                if (e.truth.q_e0.size() > 2) throw DomainError("at most two efficacy endpoints are supported");
            } catch (const std::exception& ex) {
                rd.fail(path, ex.what());
            }
        }
        c.scenarios.push_back(std::move(e));
    }
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> issues)
    : std::runtime_error(join(issues)), issues_(std::move(issues)) {}

wr::ScenarioTruth DesignScenarios::null_truth() const {
    wr::ScenarioTruth s;
    s.q_e0 = control;
    s.q_e1 = treatment_null;
    s.rho_ee = rho_ee;
    return s;
}

wr::ScenarioTruth DesignScenarios::alt_truth() const {
    wr::ScenarioTruth s;
    s.q_e0 = control;
    s.q_e1 = treatment_alt;
    s.rho_ee = rho_ee;
    return s;
}

std::string_view to_string(CalibrationMethod m) {
    return m == CalibrationMethod::RawData ? "raw_data" : "asymptotic";
}

Config parse_config(const json& doc) {
    Reader rd;
    Config c;
    if (!doc.is_object()) throw ValidationError({"$: configuration must be a JSON object"});
    if (!doc.contains("schema_version")) rd.fail("schema_version", "is required");
    else if (!doc.at("schema_version").is_number_integer() || doc.at("schema_version").get<int>() != kSchemaVersion)
        rd.fail("schema_version", "must be " + std::to_string(kSchemaVersion));

    if (const json* d = rd.object(doc, "design", "design", true)) parse_design(rd, *d, c);

    if (const json* g = rd.object(doc, "grid", "grid", false)) {
        if (auto v = rd.axis(*g, "lambda", "grid.lambda")) c.design.grid.lambdas = *v;
        if (auto v = rd.axis(*g, "gamma", "grid.gamma")) c.design.grid.gammas = *v;
        for (double l : c.design.grid.lambdas)
            if (!(l >= 0.0 && l <= 1.0)) {
                rd.fail("grid.lambda", "values must lie in [0,1]");
                break;
            }
        for (double x : c.design.grid.gammas)
            if (!(x >= 0.0 && x <= 1.0)) {
                rd.fail("grid.gamma", "values must lie in [0,1]");
                break;
            }
    }
    if (const json* s = rd.object(doc, "seeds", "seeds", false)) {
        if (auto v = rd.unsigned_int(*s, "calibration", "seeds.calibration", false)) c.design.seed = *v;
        if (auto v = rd.unsigned_int(*s, "simulation", "seeds.simulation", false)) c.simulation_seed = *v;
    }
    if (const json* b = rd.object(doc, "boundaries", "boundaries", false)) {
        c.boundaries.efficacy = rd.lambda_gamma(*b, "efficacy", "boundaries.efficacy");
        c.boundaries.efficacy_futility = rd.lambda_gamma(*b, "efficacy_futility", "boundaries.efficacy_futility");
        c.boundaries.toxicity = rd.lambda_gamma(*b, "toxicity", "boundaries.toxicity");
    }
    if (const json* s = rd.object(doc, "simulation", "simulation", false)) {
        if (auto v = rd.unsigned_int(*s, "n_trials", "simulation.n_trials", false)) c.n_trials = *v;
        if (c.n_trials < 1) rd.fail("simulation.n_trials", "must be at least 1");
        if (s->contains("methods")) {
            const json& m = s->at("methods");
            if (!m.is_array() || m.empty()) {
                rd.fail("simulation.methods", "must be a nonempty array of method names");
            } else {
                c.methods.clear();
                for (const auto& e : m) {
                    const auto eng = e.is_string() ? sim::engine_from_string(e.get<std::string>()) : std::nullopt;
                    if (!eng) rd.fail("simulation.methods", "unknown method " + e.dump());
                    else c.methods.push_back(*eng);
                }
            }
        }
    }
    parse_scenarios(rd, doc, c);
    for (auto m : c.methods)
        if ((m == sim::Engine::Graphical || m == sim::Engine::ConventionalToxicity) && !c.design.tox)
            rd.fail("simulation.methods", std::string(sim::to_string(m)) + " needs design.toxicity");

    if (!rd.issues.empty()) throw ValidationError(std::move(rd.issues));
    return c;
}

Config parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min(e.byte, text.size()); ++i) line += text[i] == '\n';
        throw ValidationError({"$: malformed JSON at line " + std::to_string(line) + " (byte " +
                               std::to_string(e.byte) + "): " + e.what()});
    }
    return parse_config(doc);
}

json config_to_json(const Config& c) {
    const auto& d = c.design;
    json design{{"alpha", d.alpha},
                {"phi", d.schedule.phi},
                {"n_cum", d.schedule.n_cum},
                {"prior", d.prior},
                {"theta_alt", d.theta_alt},
                {"p_t_null", d.p_t_null},
                {"p_t_alt", d.p_t_alt},
                {"n_paths", d.n_paths},
                {"calibration_method", to_string(c.method)},
                {"tie_source", d.trial_tie_source == calib::TieSource::Design ? "design" : "observed"}};
    if (c.design_scenarios)
        design["design_scenarios"] = {{"control", c.design_scenarios->control},
                                      {"treatment_null", c.design_scenarios->treatment_null},
                                      {"treatment_alt", c.design_scenarios->treatment_alt},
                                      {"rho_ee", c.design_scenarios->rho_ee}};
    if (d.tox) design["toxicity"] = *d.tox;
    json methods = json::array();
    for (auto m : c.methods) methods.push_back(sim::to_string(m));
    json scenarios = json::array();
    for (const auto& s : c.scenarios) {
        json e = s.truth;
        e["id"] = s.id;
        e["labels"] = s.labels;
        scenarios.push_back(std::move(e));
    }
    json doc{{"schema_version", kSchemaVersion},
             {"design", std::move(design)},
             {"grid", d.grid},
             {"seeds", {{"calibration", d.seed}, {"simulation", c.simulation_seed}}},
             {"simulation", {{"n_trials", c.n_trials}, {"methods", std::move(methods)}}},
             {"scenarios", std::move(scenarios)}};
    json b = json::object();
    auto put = [&](const char* k, const std::optional<LambdaGamma>& v) {
        if (v) b[k] = {{"lambda", v->lambda}, {"gamma", v->gamma}};
    };
    put("efficacy", c.boundaries.efficacy);
    put("efficacy_futility", c.boundaries.efficacy_futility);
    put("toxicity", c.boundaries.toxicity);
    if (!b.empty()) doc["boundaries"] = std::move(b);
    return doc;
}

}  // namespace bmw::service
