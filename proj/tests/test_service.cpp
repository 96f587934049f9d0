#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "bmw/service/config.hpp"
#include "bmw/service/jobs.hpp"
#include "bmw/service/json_io.hpp"
#include "bmw/service/service.hpp"
#include "bmw/stat/normal.hpp"

using nlohmann::json;
using namespace bmw;
using namespace bmw::service;

namespace {

json small_config() {
    return json::parse(R"({
      "schema_version": 1,
      "design": {"alpha": 0.1, "phi": 0.5, "n_cum": [80, 120, 160], "n_paths": 2000,
                 "design_scenarios": {"control": [0.4, 0.3], "treatment_null": [0.4, 0.3],
                                      "treatment_alt": [0.4, 0.66]},
                 "toxicity": {"delta": 0.1, "q_t0_null": 0.3, "q_t1_alt": 0.3}},
      "grid": {"lambda": {"from": 0.85, "to": 0.97, "step": 0.02}, "gamma": [0, 0.5, 1]},
      "seeds": {"calibration": 11, "simulation": 12},
      "simulation": {"n_trials": 400, "methods": ["bmw", "graphical", "conventional"]},
      "scenarios": [
        {"id": "null", "q_e0": [0.4, 0.3], "q_e1": [0.4, 0.3], "labels": {"efficacy_null": true}},
        {"id": "alt", "q_e0": [0.4, 0.3], "q_e1": [0.4, 0.66], "q_t1": 0.4, "labels": {"toxicity_null": true}}
      ]
    })");
}

std::vector<std::string> issues_of(const json& doc) {
    try {
        parse_config(doc);
    } catch (const ValidationError& e) {
        return e.issues();
    }
    return {};
}

bool mentions(const std::vector<std::string>& issues, const std::string& needle) {
    for (const auto& i : issues)
        if (i.find(needle) != std::string::npos) return true;
    return false;
}

template <class T>
void round_trip(const T& v) {
    const json a = v;
    const json b = a.get<T>();
    CHECK(a.dump() == b.dump());
}

json design_block(bool with_tox) {
    json d{{"n_cum", {80, 120, 160}}, {"phi", 0.5}, {"efficacy", {{"lambda", 0.92}, {"gamma", 0.90}}}};
    if (with_tox) d["toxicity"] = {{"lambda", 0.9}, {"gamma", 0.5}, {"delta", 0.1}};
    return d;
}

json counts(std::int64_t w, std::int64_t l, std::int64_t n_half) {
    return {{"n_win", w}, {"n_loss", l}, {"n_tie", n_half * n_half - w - l}, {"n_treat", n_half}, {"n_ctrl", n_half}};
}

json tox(std::int64_t y1, std::int64_t y0, std::int64_t n_half) {
    return {{"y1", y1}, {"n1", n_half}, {"y0", y0}, {"n0", n_half}};
}

}  // namespace

TEST_CASE("shipped configurations parse") {
    for (const char* name : {"table1_scenario_1_1", "table1_scenario_1_1_raw", "table2_scenario_3_1_3_4",
                             "table2_scenario_3_2_3_5", "table2_scenario_3_3_3_6", "table3_block1"}) {
        std::ifstream is(std::string(BMW_SOURCE_DIR) + "/configs/" + name + ".json");
        REQUIRE(is);
        std::stringstream ss;
        ss << is.rdbuf();
        CAPTURE(name);
        const Config c = parse_config_text(ss.str());
        CHECK(c.design.schedule.n_cum == std::vector<std::int64_t>{80, 120, 160});
        CHECK(c.design.grid.size() == 50 * 21);
        CHECK(!c.scenarios.empty());
    }
}

TEST_CASE("configuration derives tie probabilities from the design scenarios") {
    const Config c = parse_config(small_config());
    CHECK(c.design.p_t_null == doctest::Approx(0.311840).epsilon(1e-5));
    CHECK(c.design.p_t_alt == doctest::Approx(0.232178).epsilon(1e-5));
    CHECK(c.design.grid.lambdas.size() == 7);
    CHECK(c.design.grid.lambdas.back() == doctest::Approx(0.97));
    CHECK(c.design.seed == 11);
    CHECK(c.simulation_seed == 12);
    CHECK(c.scenarios[1].truth.q_t1 == 0.4);
    CHECK(c.scenarios[1].labels.toxicity_null);
}

TEST_CASE("configuration errors are collected per field") {
    json doc = small_config();
    doc["design"].erase("n_cum");
    CHECK(mentions(issues_of(doc), "design.n_cum: is required"));

    doc = small_config();
    doc["design"]["n_cum"] = {80, 60};
    doc["design"]["phi"] = 1.5;
    doc["simulation"]["methods"] = {"bmw", "nope"};
    const auto many = issues_of(doc);
    CHECK(mentions(many, "design.n_cum: must be strictly increasing"));
    CHECK(mentions(many, "design.phi"));
    CHECK(mentions(many, "unknown method \"nope\""));

    doc = small_config();
    doc["design"]["alpha"] = 1.0;
    CHECK(issues_of(doc).empty());
    doc["design"]["alpha"] = 0.0;
    CHECK(mentions(issues_of(doc), "design.alpha"));

    doc = small_config();
    doc["design"].erase("toxicity");
    CHECK(mentions(issues_of(doc), "graphical needs design.toxicity"));

    doc = small_config();
    doc.erase("schema_version");
    CHECK(mentions(issues_of(doc), "schema_version"));

    doc = small_config();
    doc["scenarios"][1]["id"] = "null";
    doc["scenarios"][0]["q_e1"] = {0.4, 1.2};
    const auto sc = issues_of(doc);
    CHECK(mentions(sc, "duplicate scenario id"));
    CHECK(mentions(sc, "scenarios[0]"));

    doc = small_config();
    doc["design"].erase("design_scenarios");
    CHECK(mentions(issues_of(doc), "needs p_t_null and p_t_alt"));
    doc["design"]["p_t_null"] = 0.3;
    doc["design"]["p_t_alt"] = 0.25;
    CHECK(issues_of(doc).empty());
}

TEST_CASE("malformed JSON reports its line") {
    try {
        parse_config_text("{\n  \"schema_version\": 1,\n  \"design\": {,\n}");
        FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
        CHECK(mentions(e.issues(), "line 3"));
    }
}

TEST_CASE("configuration round trip is idempotent") {
    const Config c = parse_config(small_config());
    const json once = config_to_json(c);
    const json twice = config_to_json(parse_config(once));
    CHECK(once.dump() == twice.dump());
}

TEST_CASE("JSON round trip for public types") {
    round_trip(inference::AnalysisSchedule{{80, 120, 160}, 0.5});
    round_trip(inference::NormalPrior{0.1, 4.0});
    round_trip(inference::BetaPrior{0.5, 2.0});
    round_trip(inference::PosteriorTheta{0.2, 0.04, 0.84});
    round_trip(inference::ToxCounts{3, 40, 5, 40});
    round_trip(inference::boundary_set(0.92, 0.9, {{80, 120, 160}, 0.5}));
    round_trip(wr::WltCounts{1, 2, 3, 2, 3});
    wr::ScenarioTruth s{{0.4, 0.3}, {0.4, 0.66}};
    round_trip(s);
    round_trip(calib::ToxicityTargets{});
    round_trip(calib::Grid{{0.5, 0.6}, {0.0, 1.0}});
    round_trip(calib::GridPoint{0.9, 0.5, 0.1, 0.8, 110, 115});
    round_trip(sim::TruthLabels{true, false});
    sim::OcSummary oc;
    oc.n_trials = 10;
    oc.fwer = 0.1;
    oc.stop_distribution = {{0.1, 0.2, 0.0}, {0.3, 0.4, 0.0}};
    round_trip(oc);
    oc.fwer.reset();
    round_trip(oc);
    sim::TrialResult tr;
    tr.decision = sim::Outcome::FailToxicity;
    tr.stop_analysis = 1;
    tr.pp_trace_e = {0.5, 0.99};
    tr.pp_trace_t = {0.4};
    round_trip(tr);
    round_trip(JobRecord{"abc", JobKind::Simulate, JobStatus::Running, 0.5, "simulate", "", ""});

    calib::DesignSpec spec;
    spec.n_paths = 1000;
    spec.grid = {{0.9, 0.95}, {0.0, 1.0}};
    round_trip(calib::calibrate_efficacy(spec));
}

TEST_CASE("decide: symmetric counts give pp 0.5 and Continue") {
    const json req{{"design", design_block(false)}, {"analysis_index", 1}, {"wlt_history", {counts(500, 500, 40)}}};
    const json r = decide(req);
    CHECK(r["pp_e"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r["decision"] == "Continue");
    CHECK(r["outcome"] == "Continue");
    CHECK(r["efficacy_boundaries"]["futility"].get<double>() < 0.5);
    CHECK(r["efficacy_boundaries"]["superiority"].get<double>() > 0.5);
}

TEST_CASE("decide: strong first interim crosses superiority") {
    const json req{{"design", design_block(false)}, {"analysis_index", 1}, {"wlt_history", {counts(820, 380, 40)}}};
    const json r = decide(req);
    // one analysis: I = 3 (1/4)(3/4) 80 / 5 = 9, vague prior variance 100
    const double info = 9.0, z = std::log(820.0 / 380.0) * 3.0;
    const double var = 1.0 / (0.01 + info), mean = var * z * std::sqrt(info);
    CHECK(r["pp_e"].get<double>() == doctest::Approx(stat::normal_cdf(mean / std::sqrt(var))).epsilon(1e-12));
    CHECK(r["pp_e"].get<double>() == doctest::Approx(0.99).epsilon(0.005));
    CHECK(r["efficacy_boundaries"]["superiority"].get<double>() == doctest::Approx(0.957129).epsilon(1e-6));
    CHECK(r["decision"] == "StopSuperiority");
    CHECK(r["outcome"] == "Success");
}

TEST_CASE("decide: toxicity phase after an efficacy crossing") {
    json d = design_block(true);
    const json first{{"design", d},
                     {"analysis_index", 1},
                     {"wlt_history", {counts(820, 380, 40)}},
                     {"tox_history", {tox(12, 12, 40)}}};
    const json r1 = decide(first);
    CHECK(r1["phase"] == "toxicity");
    CHECK(r1["pp_t"].is_number());
    CHECK(r1["pp_trace_t"].size() == 1);
    const double pp_t = r1["pp_t"].get<double>();
    CHECK(pp_t == doctest::Approx(inference::pp_toxicity({12, 40, 12, 40}, 0.1)));
    const double sup = r1["toxicity_boundaries"]["superiority"].get<double>();
    const double fut = r1["toxicity_boundaries"]["futility"].get<double>();
    CHECK(r1["decision"] == (pp_t > sup ? "StopSuperiority" : pp_t < fut ? "StopFutility" : "Continue"));

    // efficacy phase at an interim: no toxicity evaluation yet
    const json quiet{{"design", d},
                     {"analysis_index", 1},
                     {"wlt_history", {counts(700, 600, 40)}},
                     {"tox_history", {tox(12, 12, 40)}}};
    const json r2 = decide(quiet);
    CHECK(r2["phase"] == "efficacy");
    CHECK(r2["pp_t"].is_null());
    CHECK(r2["pp_trace_t"][0].is_null());
}

TEST_CASE("decide: validation failures") {
    auto fails_with = [](const json& req, const std::string& needle) {
        try {
            decide(req);
        } catch (const ValidationError& e) {
            return mentions(e.issues(), needle);
        }
        return false;
    };
    json req{{"design", design_block(false)}, {"analysis_index", 2}, {"wlt_history", {counts(500, 500, 40)}}};
    CHECK(fails_with(req, "wlt_history: must have one entry per analysis"));
    req["wlt_history"].push_back(counts(500, 500, 40));
    CHECK(fails_with(req, "wlt_history[1]: arm sizes must be 60 treated and 60 control"));
    req["wlt_history"][1] = counts(1800, 1000, 60);
    req["wlt_history"][1]["n_tie"] = 5;
    CHECK(fails_with(req, "n_win + n_loss + n_tie"));
    // first interim already stopped for superiority
    req["wlt_history"] = {counts(820, 380, 40), counts(1800, 1000, 60)};
    CHECK(fails_with(req, "already stopped at analysis 1"));
    req["analysis_index"] = 4;
    CHECK(fails_with(req, "analysis_index"));
    json tox_req{{"design", design_block(true)}, {"analysis_index", 1}, {"wlt_history", {counts(500, 500, 40)}}};
    CHECK(fails_with(tox_req, "tox_history: is required"));
    json no_eff = req;
    no_eff["design"].erase("efficacy");
    CHECK(fails_with(no_eff, "design.efficacy"));
    CHECK_THROWS_AS(decide(json::array()), ValidationError);
}

TEST_CASE("decide is a pure function of the request") {
    const json req{{"design", design_block(true)},
                   {"analysis_index", 2},
                   {"wlt_history", {counts(700, 600, 40), counts(1500, 1300, 60)}},
                   {"tox_history", {tox(12, 12, 40), tox(18, 17, 60)}}};
    CHECK(decide(req).dump() == decide(req).dump());
}

TEST_CASE("CSV writers") {
    calib::CalibrationResult r;
    r.surface = {{0.9, 0.5, 0.1, 0.8, 0, 0}, {0.95, 1.0, 0.05, 0.7, 0, 0}};
    CHECK(surface_csv(r) ==
          "lambda,gamma,poe_null,poe_alt\r\n0.9000,0.5000,0.100000,0.800000\r\n0.9500,1.0000,0.050000,0.700000\r\n");
    const auto b = inference::boundary_set(0.9, 0.0, {{10, 20}, 0.5});
    CHECK(boundary_csv(b) == "analysis_index,n_cum,futility_pp,superiority_pp\r\n1,10,0.9,0.9\r\n2,20,0.9,0.9\r\n");
    CHECK(boundaries_json(0.9, 0.0, {{10, 20}, 0.5})["analyses"].size() == 2);
    CHECK(to_text(json{{"a", 1}}) == "{\n  \"a\": 1\n}\n");
}

TEST_CASE("simulation output is deterministic across thread counts") {
    Config c = parse_config(small_config());
    const auto a = run_simulation(c, 1);
    const auto b = run_simulation(c, 4);
    CHECK(a.csv == b.csv);
    CHECK(to_text(a.report) == to_text(b.report));
    CHECK(a.csv.rfind("scenario_id,method,n_trials,reject_rate_e,reject_rate_t,fwer,pcs,expected_n\r\n", 0) == 0);
    // 2 scenarios x 3 methods + header
    CHECK(std::count(a.csv.begin(), a.csv.end(), '\n') == 7);
    CHECK(a.csv.find("alt,bmw,400,") != std::string::npos);
    CHECK(a.csv.find(",NA,") == std::string::npos);  // both scenarios have a true null
    CHECK(a.report["boundaries"].contains("toxicity"));
}

TEST_CASE("simulation with fixed boundaries and a single replicate") {
    json doc = small_config();
    doc["simulation"] = {{"n_trials", 1}, {"methods", {"bmw"}}};
    doc["boundaries"] = {{"efficacy", {{"lambda", 0.93}, {"gamma", 1.0}}}};
    doc["scenarios"] = {{{"id", "x"}, {"q_e0", {0.4, 0.3}}, {"q_e1", {0.4, 0.66}}}};
    const auto out = run_simulation(parse_config(doc), 1);
    CHECK(out.report["boundaries"]["efficacy"]["lambda"] == 0.93);
    const auto rate = out.report["results"][0]["oc"]["reject_rate_e"].get<double>();
    CHECK((rate == 0.0 || rate == 1.0));
    CHECK(out.csv.find(",NA,") != std::string::npos);
}

TEST_CASE("calibration report") {
    std::vector<double> seen;
    const auto out = run_calibration(parse_config(small_config()), 2, [&](double f, const std::string&) { seen.push_back(f); });
    CHECK(out.report["kind"] == "calibration");
    CHECK(out.report["seed"] == 11);
    CHECK(out.report["efficacy"]["poe_null"].get<double>() <= 0.1);
    CHECK(out.report.contains("toxicity"));
    REQUIRE(!seen.empty());
    CHECK(seen.back() == 1.0);
    CHECK(std::is_sorted(seen.begin(), seen.end()));
}
