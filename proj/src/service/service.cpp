#include "bmw/service/service.hpp"

#include <cstdio>
#include <sstream>

#include "bmw/errors.hpp"
#include "bmw/service/json_io.hpp"
#include "reader.hpp"

using nlohmann::json;

namespace bmw::service {

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

calib::CalibrationResult calibrate_efficacy_for(const Config& c, bool futility_only, unsigned threads,
                                                const calib::ProgressFn& progress) {
    calib::DesignSpec spec = c.design;
    spec.futility_only = futility_only;
    if (c.method == CalibrationMethod::RawData)
        return sim::calibrate_from_raw_data(spec, c.design_scenarios->null_truth(), c.design_scenarios->alt_truth(),
                                            threads, progress);
    return calib::calibrate_efficacy(spec, threads, progress);
}

calib::ProgressFn stage(const Progress& p, double from, double span, const std::string& label) {
    if (!p) return {};
    return [=](std::size_t done, std::size_t total) {
        p(from + span * static_cast<double>(done) / static_cast<double>(total), label);
    };
}

}  // namespace

std::string to_text(const json& doc) { return doc.dump(2) + "\n"; }

CalibrationOutput run_calibration(const Config& config, unsigned threads, const Progress& progress) {
    CalibrationOutput out;
    const double eff_share = config.design.tox ? 0.5 : 1.0;
    out.efficacy = calibrate_efficacy_for(config, false, threads, stage(progress, 0.0, eff_share, "efficacy"));
    if (config.design.tox)
        out.toxicity = calib::calibrate_toxicity(config.design, threads, stage(progress, 0.5, 0.5, "toxicity"));
    out.report = json{{"schema_version", kSchemaVersion},
                      {"kind", "calibration"},
                      {"method", to_string(config.method)},
                      {"seed", config.design.seed},
                      {"n_paths", config.design.n_paths},
                      {"alpha", config.design.alpha},
                      {"p_t_null", config.design.p_t_null},
                      {"p_t_alt", config.design.p_t_alt},
                      {"efficacy", out.efficacy}};
    if (out.toxicity) out.report["toxicity"] = *out.toxicity;
    if (progress) progress(1.0, "done");
    return out;
}

std::string surface_csv(const calib::CalibrationResult& r) {
    std::string s = "lambda,gamma,poe_null,poe_alt\r\n";
    for (const auto& g : r.surface)
        s += fixed(g.lambda, 4) + "," + fixed(g.gamma, 4) + "," + fixed(g.poe_null, 6) + "," + fixed(g.poe_alt, 6) +
             "\r\n";
    return s;
}

std::string boundary_csv(const inference::BoundarySet& b) {
    std::ostringstream os;
    inference::write_boundary_csv(os, b);
    return os.str();
}

SimulationOutput run_simulation(const Config& config, unsigned threads, const Progress& progress) {
    if (config.scenarios.empty()) throw ValidationError({"scenarios: at least one scenario is required"});
    bool need_e = false, need_f = false, need_t = false;
    for (auto m : config.methods) {
        need_e |= m == sim::Engine::Bmw || m == sim::Engine::Graphical;
        need_f |= m == sim::Engine::BmwFutility;
        need_t |= m == sim::Engine::Graphical;
    }
    const auto& sched = config.design.schedule;
    std::optional<inference::BoundarySet> b_e, b_f, b_t;
    // The calibration stages take the first 30% of reported progress.
    if (need_e)
        b_e = config.boundaries.efficacy
                  ? inference::boundary_set(config.boundaries.efficacy->lambda, config.boundaries.efficacy->gamma, sched)
                  : calibrate_efficacy_for(config, false, threads, stage(progress, 0.0, 0.1, "calibrate efficacy"))
                        .boundaries;
    if (need_f)
        b_f = config.boundaries.efficacy_futility
                  ? inference::boundary_set(config.boundaries.efficacy_futility->lambda,
                                            config.boundaries.efficacy_futility->gamma, sched)
                        .futility_only()
                  : calibrate_efficacy_for(config, true, threads, stage(progress, 0.1, 0.1, "calibrate futility-only"))
                        .boundaries;
    if (need_t)
        b_t = config.boundaries.toxicity
                  ? inference::boundary_set(config.boundaries.toxicity->lambda, config.boundaries.toxicity->gamma, sched)
                  : calib::calibrate_toxicity(config.design, threads, stage(progress, 0.2, 0.1, "calibrate toxicity"))
                        .boundaries;

    SimulationOutput out;
    out.csv = "scenario_id,method,n_trials,reject_rate_e,reject_rate_t,fwer,pcs,expected_n\r\n";
    json rows = json::array();
    const std::size_t total = config.scenarios.size() * config.methods.size();
    std::size_t done = 0;
    for (const auto& s : config.scenarios) {
        const std::uint64_t seed = stat::derive_seed(config.simulation_seed, "scenario/" + s.id);
        for (auto m : config.methods) {
            sim::Boundaries b;
            if (m == sim::Engine::BmwFutility) b.efficacy = *b_f;
            else if (b_e) b.efficacy = *b_e;
            else b.efficacy = inference::boundary_set(1.0, 0.0, sched);  // unused by the conventional engines
            b.toxicity = b_t;
            const double from = 0.3 + 0.7 * static_cast<double>(done) / static_cast<double>(total);
            const auto oc = sim::estimate_ocs(m, config.design, b, s.truth, config.n_trials, s.labels, seed, threads,
                                              stage(progress, from, 0.7 / static_cast<double>(total),
                                                    "simulate " + s.id + " " + std::string(sim::to_string(m))));
            out.csv += s.id + "," + std::string(sim::to_string(m)) + "," + std::to_string(oc.n_trials) + "," +
                       fixed(oc.reject_rate_e, 6) + "," + fixed(oc.reject_rate_t, 6) + "," +
                       (oc.fwer ? fixed(*oc.fwer, 6) : std::string("NA")) + "," + fixed(oc.pcs, 6) + "," +
                       fixed(oc.expected_n, 4) + "\r\n";
            rows.push_back({{"scenario_id", s.id}, {"method", sim::to_string(m)}, {"oc", oc}});
            ++done;
        }
    }
    json bounds = json::object();
    if (b_e) bounds["efficacy"] = *b_e;
    if (b_f) bounds["efficacy_futility"] = *b_f;
    if (b_t) bounds["toxicity"] = *b_t;
    out.report = json{{"schema_version", kSchemaVersion},
                      {"kind", "simulation"},
                      {"seed", config.simulation_seed},
                      {"n_trials", config.n_trials},
                      {"boundaries", std::move(bounds)},
                      {"results", std::move(rows)}};
    return out;
}

json boundaries_json(double lambda, double gamma, const inference::AnalysisSchedule& schedule) {
    return json(inference::boundary_set(lambda, gamma, schedule));
}

namespace {

struct DecideInput {
    inference::AnalysisSchedule schedule;
    inference::NormalPrior prior;
    inference::BoundarySet b_e;
    std::optional<inference::BoundarySet> b_t;
    double delta = 0.1;
    inference::BetaPrior tox_prior;
    bool design_ties = false;
    double p_t_design = 0.0;
    std::size_t r = 0;  // 1-based analysis index
    std::vector<wr::WltCounts> wlt;
    std::vector<inference::ToxCounts> tox;
};

DecideInput parse_decide(const json& req) {
    detail::Reader rd;
    DecideInput in;
    if (!req.is_object()) throw ValidationError({"$: request must be a JSON object"});
    const json* d = rd.object(req, "design", "design", true);
    if (d) {
        std::vector<double> n;
        if (auto v = rd.numbers(*d, "n_cum", "design.n_cum", true)) n = *v;
        for (double x : n) {
            if (!(x > 0.0) || std::floor(x) != x) {
                rd.fail("design.n_cum", "must contain positive integers");
                break;
            }
            in.schedule.n_cum.push_back(static_cast<std::int64_t>(x));
        }
        for (std::size_t i = 1; i < in.schedule.n_cum.size(); ++i)
            if (in.schedule.n_cum[i] <= in.schedule.n_cum[i - 1]) {
                rd.fail("design.n_cum", "must be strictly increasing");
                break;
            }
        if (auto v = rd.number(*d, "phi", "design.phi", false)) in.schedule.phi = *v;
        if (!(in.schedule.phi > 0.0 && in.schedule.phi < 1.0)) rd.fail("design.phi", "must lie in (0,1)");
        if (const json* p = rd.object(*d, "prior", "design.prior", false)) {
            if (auto v = rd.number(*p, "mean", "design.prior.mean", false)) in.prior.mean = *v;
            if (auto v = rd.number(*p, "variance", "design.prior.variance", false)) in.prior.variance = *v;
            if (!(in.prior.variance > 0.0)) rd.fail("design.prior.variance", "must be positive");
        }
        auto eff = rd.lambda_gamma(*d, "efficacy", "design.efficacy");
        if (!d->contains("efficacy")) rd.fail("design.efficacy", "is required");
        std::optional<LambdaGamma> tox;
        if (const json* t = rd.object(*d, "toxicity", "design.toxicity", false)) {
            tox = rd.lambda_gamma(*d, "toxicity", "design.toxicity");
            if (auto v = rd.number(*t, "delta", "design.toxicity.delta", true)) in.delta = *v;
            if (!(in.delta > 0.0 && in.delta < 1.0)) rd.fail("design.toxicity.delta", "must lie in (0,1)");
            if (auto v = rd.number(*t, "prior_a", "design.toxicity.prior_a", false)) in.tox_prior.a = *v;
            if (auto v = rd.number(*t, "prior_b", "design.toxicity.prior_b", false)) in.tox_prior.b = *v;
            if (!(in.tox_prior.a > 0.0 && in.tox_prior.b > 0.0))
                rd.fail("design.toxicity", "prior_a and prior_b must be positive");
        }
        if (auto s = rd.string(*d, "tie_source", "design.tie_source", false)) {
            if (*s == "design") in.design_ties = true;
            else if (*s != "observed") rd.fail("design.tie_source", "must be \"observed\" or \"design\"");
        }
        if (in.design_ties) {
            if (auto v = rd.number(*d, "p_t_design", "design.p_t_design", true)) in.p_t_design = *v;
            if (!(in.p_t_design >= 0.0 && in.p_t_design < 1.0)) rd.fail("design.p_t_design", "must lie in [0,1)");
        }
        if (rd.issues.empty() && eff) {
            in.b_e = inference::boundary_set(eff->lambda, eff->gamma, in.schedule);
            if (tox) in.b_t = inference::boundary_set(tox->lambda, tox->gamma, in.schedule);
        }
    }
    if (auto v = rd.unsigned_int(req, "analysis_index", "analysis_index", true)) {
        in.r = *v;
        if (in.r < 1 || (d && !in.schedule.n_cum.empty() && in.r > in.schedule.n_cum.size()))
            rd.fail("analysis_index", "must lie in 1..number of analyses");
    }
    if (!rd.issues.empty()) throw ValidationError(std::move(rd.issues));

    auto history = [&](const char* key, bool required) -> const json* {
        if (!req.contains(key)) {
            if (required) rd.fail(key, "is required");
            return nullptr;
        }
        const json& h = req.at(key);
        if (!h.is_array()) {
            rd.fail(key, "must be an array");
            return nullptr;
        }
        if (h.size() != in.r) {
            rd.fail(key, "must have one entry per analysis up to analysis_index (" + std::to_string(in.r) + ")");
            return nullptr;
        }
        return &h;
    };
    if (const json* h = history("wlt_history", true)) {
        for (std::size_t k = 0; k < h->size(); ++k) {
            const std::string path = "wlt_history[" + std::to_string(k) + "]";
            const json& e = (*h)[k];
            wr::WltCounts c;
            const char* keys[] = {"n_win", "n_loss", "n_tie", "n_treat", "n_ctrl"};
            std::int64_t* dst[] = {&c.n_win, &c.n_loss, &c.n_tie, &c.n_treat, &c.n_ctrl};
            bool ok = e.is_object();
            if (!ok) rd.fail(path, "must be an object");
            for (int i = 0; ok && i < 5; ++i) {
                auto v = rd.unsigned_int(e, keys[i], path + "." + keys[i], true);
                if (!v) ok = false;
                else *dst[i] = static_cast<std::int64_t>(*v);
            }
            if (!ok) continue;
            const std::int64_t n1 = wr::treated_at(in.schedule.phi, in.schedule.n_cum[k]);
            if (c.n_treat != n1 || c.n_ctrl != in.schedule.n_cum[k] - n1)
                rd.fail(path, "arm sizes must be " + std::to_string(n1) + " treated and " +
                                  std::to_string(in.schedule.n_cum[k] - n1) + " control at this analysis");
            else if (c.n_win + c.n_loss + c.n_tie != c.pairs())
                rd.fail(path, "n_win + n_loss + n_tie must equal n_treat * n_ctrl");
            in.wlt.push_back(c);
        }
    }
    if (const json* h = history("tox_history", in.b_t.has_value())) {
        for (std::size_t k = 0; k < h->size(); ++k) {
            const std::string path = "tox_history[" + std::to_string(k) + "]";
            const json& e = (*h)[k];
            inference::ToxCounts c;
            const char* keys[] = {"y1", "n1", "y0", "n0"};
            std::int64_t* dst[] = {&c.y1, &c.n1, &c.y0, &c.n0};
            bool ok = e.is_object();
            if (!ok) rd.fail(path, "must be an object");
            for (int i = 0; ok && i < 4; ++i) {
                auto v = rd.unsigned_int(e, keys[i], path + "." + keys[i], true);
                if (!v) ok = false;
                else *dst[i] = static_cast<std::int64_t>(*v);
            }
            if (!ok) continue;
            const std::int64_t n1 = wr::treated_at(in.schedule.phi, in.schedule.n_cum[k]);
            if (c.n1 != n1 || c.n0 != in.schedule.n_cum[k] - n1)
                rd.fail(path, "n1 and n0 must match the arm sizes at this analysis");
            else if (c.y1 > c.n1 || c.y0 > c.n0)
                rd.fail(path, "event counts cannot exceed arm sizes");
            in.tox.push_back(c);
        }
    }
    if (!rd.issues.empty()) throw ValidationError(std::move(rd.issues));
    return in;
}

}  // namespace

json decide(const json& request) {
    const DecideInput in = parse_decide(request);
    const std::size_t R = in.schedule.analyses();
    const bool with_tox = in.b_t.has_value();
    std::vector<double> z, p_t, pp_e;
    json pp_t_trace = json::array();
    bool toxicity_phase = false;
    std::string decision = "Continue";
    std::string outcome = "Continue";
    std::optional<double> pp_t_now;
    for (std::size_t k = 0; k < in.r; ++k) {
        const bool current = k + 1 == in.r;
        const auto est = wr::wr_estimate(in.wlt[k], in.schedule.phi, in.schedule.n_cum[k]);
        z.push_back(est.z);
        p_t.push_back(in.design_ties ? in.p_t_design : std::min(est.p_hat_t, wr::kMaxTieProbability));
        pp_e.push_back(inference::posterior_from_history(z, p_t, in.schedule, in.prior).pp_e);
        std::optional<double> pp_t;
        if (with_tox && (toxicity_phase || k + 1 == R)) {
            pp_t = inference::pp_toxicity(in.tox[k], in.delta, in.tox_prior);
            pp_t_trace.push_back(*pp_t);
        } else {
            pp_t_trace.push_back(nullptr);
        }
        std::string d_now, out_now = "Continue";
        if (!toxicity_phase) {
            const auto d = inference::evaluate_interim(pp_e.back(), k, in.b_e);
            d_now = std::string(inference::to_string(d));
            if (d == inference::Decision::StopFutility || d == inference::Decision::Ineffective) {
                out_now = "FailEfficacy";
            } else if (d == inference::Decision::Effective) {
                out_now = !with_tox ? "Success" : (*pp_t > in.b_t->lambda ? "Success" : "FailToxicity");
            } else if (d == inference::Decision::StopSuperiority) {
                if (!with_tox) {
                    out_now = "Success";
                } else {
                    toxicity_phase = true;
                    pp_t = inference::pp_toxicity(in.tox[k], in.delta, in.tox_prior);
                    pp_t_trace.back() = *pp_t;
                }
            }
        }
        if (toxicity_phase) {
            const auto d = inference::evaluate_interim(*pp_t, k, *in.b_t);
            d_now = std::string(inference::to_string(d));
            if (d == inference::Decision::StopFutility || d == inference::Decision::Ineffective)
                out_now = "FailToxicity";
            else if (d == inference::Decision::StopSuperiority || d == inference::Decision::Effective)
                out_now = "Success";
        }
        if (!current && out_now != "Continue")
            throw ValidationError({"wlt_history: the trial already stopped at analysis " + std::to_string(k + 1) +
                                   " (" + out_now + ")"});
        if (current) {
            decision = d_now;
            outcome = out_now;
            pp_t_now = pp_t;
        }
    }
    const std::size_t k = in.r - 1;
    json resp{{"analysis_index", in.r},
              {"n_cum", in.schedule.n_cum[k]},
              {"phase", toxicity_phase ? "toxicity" : "efficacy"},
              {"pp_e", pp_e.back()},
              {"pp_trace_e", pp_e},
              {"efficacy_boundaries",
               {{"futility", in.b_e.futility[k]}, {"superiority", in.b_e.superiority[k]}, {"lambda", in.b_e.lambda}}},
              {"decision", decision},
              {"outcome", outcome}};
    if (with_tox) {
        resp["pp_t"] = pp_t_now ? json(*pp_t_now) : json(nullptr);
        resp["pp_trace_t"] = pp_t_trace;
        resp["toxicity_boundaries"] = {{"futility", in.b_t->futility[k]},
                                       {"superiority", in.b_t->superiority[k]},
                                       {"lambda", in.b_t->lambda}};
    }
    return resp;
}

}  // namespace bmw::service
