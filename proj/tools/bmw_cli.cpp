#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "bmw/errors.hpp"
#include "bmw/parallel.hpp"
#include "bmw/service/http.hpp"
#include "bmw/service/json_io.hpp"
#include "bmw/service/service.hpp"
#include "bmw/win_ratio/win_ratio.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using namespace bmw;
using namespace bmw::service;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kInfeasible = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw UsageError("cannot read " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw UsageError("cannot write " + path.string());
    os << text;
}

// Malformed documents are routed through parse_config_text for its
// line/byte diagnostics.
json read_document(const std::string& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        parse_config_text(text);
        throw;
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

// <dir>/<stem>.json -> <dir>/<stem><suffix>
fs::path sibling(const fs::path& out, const std::string& suffix) {
    fs::path p = out;
    p.replace_extension();
    return p.string() + suffix;
}

void report_issues(const ValidationError& e) {
    std::cerr << "configuration error:\n";
    for (const auto& i : e.issues()) std::cerr << "  " << i << "\n";
}

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
};

int cmd_calibrate(const Common& o) {
    json doc = read_document(o.config);
    if (o.seed && doc.is_object()) doc["seeds"]["calibration"] = *o.seed;
    const Config c = parse_config(doc);
    const fs::path out = o.out.empty() ? fs::path("calibration.json") : fs::path(o.out);
    CalibrationOutput r;
    try {
        r = run_calibration(c, resolve_threads(o.threads));
    } catch (const CalibrationError& e) {
        std::cerr << "calibration infeasible: " << e.what() << "\n";
        return kInfeasible;
    }
    write_text(out, to_text(r.report));
    write_text(sibling(out, ".boundaries.csv"), boundary_csv(r.efficacy.boundaries));
    write_text(sibling(out, ".surface.csv"), surface_csv(r.efficacy));
    if (r.toxicity) {
        write_text(sibling(out, ".toxicity.boundaries.csv"), boundary_csv(r.toxicity->boundaries));
        write_text(sibling(out, ".toxicity.surface.csv"), surface_csv(*r.toxicity));
    }
    std::cout << "efficacy lambda=" << r.efficacy.lambda_opt << " gamma=" << r.efficacy.gamma_opt
              << " poe_null=" << r.efficacy.poe_null << " poe_alt=" << r.efficacy.poe_alt << "\n";
    if (r.toxicity)
        std::cout << "toxicity lambda=" << r.toxicity->lambda_opt << " gamma=" << r.toxicity->gamma_opt
                  << " poe_null=" << r.toxicity->poe_null << " poe_alt=" << r.toxicity->poe_alt << "\n";
    std::cout << "wrote " << out.string() << "\n";
    return kOk;
}

int cmd_simulate(const Common& o, const std::string& scenarios, std::optional<std::uint64_t> n_trials,
                 const std::vector<std::string>& methods) {
    json doc = read_document(o.config);
    if (!doc.is_object()) return parse_config(doc), kConfigError;
    if (!scenarios.empty()) {
        json s = read_document(scenarios);
        doc["scenarios"] = s.is_object() && s.contains("scenarios") ? s.at("scenarios") : s;
    }
    if (o.seed) doc["seeds"]["simulation"] = *o.seed;
    if (n_trials) doc["simulation"]["n_trials"] = *n_trials;
    if (!methods.empty()) {
        json m = json::array();
        for (const auto& entry : methods)
            for (const auto& name : split(entry, ',')) m.push_back(name);
        doc["simulation"]["methods"] = m;
    }
    const Config c = parse_config(doc);
    try {
        const auto r = run_simulation(c, resolve_threads(o.threads));
        if (o.out.empty()) {
            std::cout << r.csv;
        } else {
            write_text(o.out, r.csv);
            write_text(sibling(o.out, ".json"), to_text(r.report));
            std::cout << "wrote " << o.out << "\n";
        }
    } catch (const CalibrationError& e) {
        std::cerr << "calibration infeasible: " << e.what() << "\n";
        return kInfeasible;
    }
    return kOk;
}

int cmd_boundaries(double lambda, double gamma, const std::string& n_cum, double phi, const std::string& format,
                   const std::string& out) {
    inference::AnalysisSchedule sched;
    sched.phi = phi;
    for (const auto& s : split(n_cum, ',')) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || v <= 0) throw UsageError("--n-cum must be a comma-separated list of positive integers");
        sched.n_cum.push_back(v);
    }
    sched.validate();
    const auto b = inference::boundary_set(lambda, gamma, sched);
    const std::string text = format == "csv" ? boundary_csv(b) : to_text(json(b));
    if (out.empty()) std::cout << text;
    else write_text(out, text);
    return kOk;
}

// Patient CSV in enrollment order: arm,x_e1,...,x_eK,x_t with arm 1 for
// treatment and 0 for control. An optional header row is skipped.
std::vector<wr::PatientOutcome> read_patients(const std::string& path) {
    std::istringstream is(read_text(path));
    std::vector<wr::PatientOutcome> out;
    std::string line;
    std::size_t lineno = 0, width = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (lineno == 1 && !cells.empty() && cells[0] == "arm") continue;
        auto bad = [&](const std::string& why) {
            return UsageError(path + ":" + std::to_string(lineno) + ": " + why);
        };
        if (cells.size() < 3) throw bad("expected arm,x_e1,...,x_eK,x_t");
        if (width == 0) width = cells.size();
        if (cells.size() != width) throw bad("row width differs from the first row");
        std::vector<std::uint8_t> v;
        for (const auto& c : cells) {
            if (c != "0" && c != "1") throw bad("entries must be 0 or 1");
            v.push_back(c == "1");
        }
        wr::PatientOutcome p;
        p.arm = v[0] ? wr::Arm::Treatment : wr::Arm::Control;
        p.x_e.assign(v.begin() + 1, v.end() - 1);
        p.x_t = v.back();
        out.push_back(std::move(p));
    }
    return out;
}

// Builds the per-analysis count histories of a decide request from
// patient-level rows.
json request_from_patients(const json& design, const std::vector<wr::PatientOutcome>& patients,
                           std::size_t analysis_index) {
    if (!design.is_object() || !design.contains("n_cum") || !design.at("n_cum").is_array())
        throw ValidationError({"design.n_cum: is required"});
    const auto n_cum = design.at("n_cum").get<std::vector<std::int64_t>>();
    const double phi = design.value("phi", 0.5);
    if (analysis_index < 1 || analysis_index > n_cum.size())
        throw ValidationError({"analysis_index: must lie in 1..number of analyses"});
    std::vector<wr::PatientOutcome> treat, ctrl;
    for (const auto& p : patients) (p.arm == wr::Arm::Treatment ? treat : ctrl).push_back(p);
    std::vector<std::string> names;
    for (std::size_t k = 0; k < (patients.empty() ? 1 : patients.front().x_e.size()); ++k)
        names.push_back("x_e" + std::to_string(k + 1));
    const wr::EndpointHierarchy h(names);
    json wlt = json::array(), tox = json::array();
    for (std::size_t r = 0; r < analysis_index; ++r) {
        const auto n1 = wr::treated_at(phi, n_cum[r]);
        const auto n0 = n_cum[r] - n1;
        if (static_cast<std::int64_t>(treat.size()) < n1 || static_cast<std::int64_t>(ctrl.size()) < n0)
            throw ValidationError({"patients: analysis " + std::to_string(r + 1) + " needs " + std::to_string(n1) +
                                   " treated and " + std::to_string(n0) + " control patients"});
        const std::span<const wr::PatientOutcome> t(treat.data(), static_cast<std::size_t>(n1));
        const std::span<const wr::PatientOutcome> c(ctrl.data(), static_cast<std::size_t>(n0));
        wlt.push_back(json(wr::count_wlt(t, c, h)));
        inference::ToxCounts tc{0, n1, 0, n0};
        for (const auto& p : t) tc.y1 += p.x_t;
        for (const auto& p : c) tc.y0 += p.x_t;
        tox.push_back(json(tc));
    }
    json req{{"design", design}, {"analysis_index", analysis_index}, {"wlt_history", wlt}};
    if (design.contains("toxicity")) req["tox_history"] = tox;
    return req;
}

int cmd_decide(const std::string& request, const std::string& design, const std::string& patients,
               std::size_t analysis_index, const std::string& out) {
    json req;
    if (!request.empty()) {
        req = read_document(request);
    } else {
        if (design.empty() || patients.empty())
            throw UsageError("decide needs --request, or --design with --patients and --analysis-index");
        json d = read_document(design);
        if (d.is_object() && d.contains("design")) d = d.at("design");
        req = request_from_patients(d, read_patients(patients), analysis_index);
    }
    const std::string text = to_text(decide(req));
    if (out.empty()) std::cout << text;
    else write_text(out, text);
    return kOk;
}

HttpService* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

int cmd_serve(const std::string& host, int port, const std::string& jobs_dir, unsigned workers, unsigned threads) {
    JobManager jobs(jobs_dir, workers, resolve_threads(threads));
    HttpService server(jobs);
    const int bound = server.bind(host, port);
    if (bound < 0) {
        std::cerr << "cannot bind " << host << ":" << port << "\n";
        return kConfigError;
    }
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on http://" << host << ":" << bound << " (jobs in " << jobs_dir << ")" << std::endl;
    server.run();
    g_server = nullptr;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian win-ratio monitoring designs: calibration, simulation and interim decisions"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", common.config, "configuration JSON")->check(CLI::ExistingFile);
        if (config_required) opt->required();
        sub->add_option("--seed", common.seed, "override the seed in the configuration");
        sub->add_option("--threads", common.threads, "worker threads (default: BMW_THREADS, then all cores)");
    };

    auto* cal = app.add_subcommand("calibrate", "calibrate (lambda, gamma) for a design");
    add_common(cal, true);
    cal->add_option("--out", common.out, "report path; CSV tables are written next to it");

    std::string scenarios;
    std::optional<std::uint64_t> n_trials;
    std::vector<std::string> methods;
    auto* sim = app.add_subcommand("simulate", "operating characteristics per scenario and method");
    add_common(sim, true);
    sim->add_option("--out", common.out, "CSV path (report JSON is written next to it); stdout when omitted");
    sim->add_option("--scenarios", scenarios, "scenario JSON replacing the configuration's scenarios")
        ->check(CLI::ExistingFile);
    sim->add_option("--n-trials", n_trials, "replicates per scenario and method");
    sim->add_option("--methods", methods, "bmw, bmw_f, graphical, conventional, conventional_tox")->delimiter(',');

    double lambda = 0.0, gamma = 0.0, phi = 0.5;
    std::string n_cum = "80,120,160", format = "json", out;
    auto* bnd = app.add_subcommand("boundaries", "tabulate futility and superiority thresholds");
    bnd->add_option("--lambda", lambda)->required();
    bnd->add_option("--gamma", gamma)->required();
    bnd->add_option("--n-cum", n_cum, "cumulative sample sizes")->capture_default_str();
    bnd->add_option("--phi", phi, "treatment allocation fraction")->capture_default_str();
    bnd->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    bnd->add_option("--out", out);

    std::string request, design, patients;
    std::size_t analysis_index = 0;
    auto* dec = app.add_subcommand("decide", "interim decision for a monitoring request");
    dec->add_option("--request", request, "decide request JSON")->check(CLI::ExistingFile);
    dec->add_option("--design", design, "design JSON (the request's design object)")->check(CLI::ExistingFile);
    dec->add_option("--patients", patients, "patient CSV: arm,x_e1,...,x_eK,x_t")->check(CLI::ExistingFile);
    dec->add_option("--analysis-index", analysis_index, "1-based analysis to evaluate");
    dec->add_option("--out", out);

    std::string host = "127.0.0.1", jobs_dir = "bmw-jobs";
    int port = 8080;
    unsigned workers = 2, threads = 0;
    auto* srv = app.add_subcommand("serve", "run the HTTP JSON service");
    srv->add_option("--host", host)->capture_default_str();
    srv->add_option("--port", port, "0 picks a free port")->capture_default_str();
    srv->add_option("--jobs-dir", jobs_dir, "directory for job records and results")->capture_default_str();
    srv->add_option("--workers", workers, "concurrent jobs")->capture_default_str();
    srv->add_option("--threads", threads, "threads per job (default: BMW_THREADS, then all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*cal) return cmd_calibrate(common);
        if (*sim) return cmd_simulate(common, scenarios, n_trials, methods);
        if (*bnd) return cmd_boundaries(lambda, gamma, n_cum, phi, format, out);
        if (*dec) return cmd_decide(request, design, patients, analysis_index, out);
        if (*srv) return cmd_serve(host, port, jobs_dir, workers, threads);
    } catch (const ValidationError& e) {
        report_issues(e);
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    }
    return kConfigError;
}
