#include "bmw/service/http.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>

#include "bmw/errors.hpp"
#include "bmw/service/json_io.hpp"
#include "bmw/service/service.hpp"

using nlohmann::json;

namespace bmw::service {

namespace {

constexpr const char* kJson = "application/json";
constexpr const char* kCsv = "text/csv; charset=utf-8";

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(to_text(body), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const std::vector<std::string>& issues = {}) {
    json body{{"error", message}};
    if (!issues.empty()) body["issues"] = issues;
    send_json(res, status, body);
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        send_error(res, 400, std::string("malformed JSON: ") + e.what());
        return std::nullopt;
    }
}

std::optional<std::uint64_t> parse_u64(const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
    try {
        return std::stoull(s);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::optional<double> parse_double(const std::string& s) {
    std::istringstream is(s);
    double v;
    if (!(is >> v) || !is.eof()) return std::nullopt;
    return v;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace

struct HttpService::Impl {
    JobManager& jobs;
    httplib::Server server;

    explicit Impl(JobManager& j) : jobs(j) { routes(); }

    void submit(JobKind kind, const httplib::Request& req, httplib::Response& res) {
        auto doc = parse_body(req, res);
        if (!doc) return;
        std::vector<std::string> issues;
        std::optional<std::uint64_t> seed, n_trials;
        if (req.has_param("seed") && !(seed = parse_u64(req.get_param_value("seed"))))
            issues.push_back("seed: must be a non-negative integer");
        if (req.has_param("n_trials")) {
            n_trials = parse_u64(req.get_param_value("n_trials"));
            if (!n_trials || *n_trials == 0) issues.push_back("n_trials: must be a positive integer");
        }
        if (!issues.empty()) return send_error(res, 422, "invalid query", issues);
        try {
            Config c = parse_config(*doc);
            if (seed) {
                if (kind == JobKind::Calibrate) c.design.seed = *seed;
                else c.simulation_seed = *seed;
            }
            if (n_trials) c.n_trials = *n_trials;
            send_json(res, 202, json(jobs.submit(kind, std::move(c))));
        } catch (const ValidationError& e) {
            send_error(res, 422, "invalid configuration", e.issues());
        }
    }

    void routes() {
        server.Post("/v1/calibrate",
                    [this](const httplib::Request& req, httplib::Response& res) { submit(JobKind::Calibrate, req, res); });
        server.Post("/v1/simulate",
                    [this](const httplib::Request& req, httplib::Response& res) { submit(JobKind::Simulate, req, res); });

        server.Get(R"(/v1/jobs/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const auto r = jobs.get(req.matches[1]);
            if (!r) return send_error(res, 404, "unknown job_id");
            send_json(res, 200, json(*r));
        });
        server.Get(R"(/v1/jobs/([0-9a-f]+)/result)", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            const auto r = jobs.get(id);
            if (!r) return send_error(res, 404, "unknown job_id");
            if (r->status == JobStatus::Failed) return send_error(res, 409, "job failed: " + r->error);
            if (r->status != JobStatus::Done) return send_error(res, 409, "job is " + std::string(to_string(r->status)));
            const std::string format = req.has_param("format") ? req.get_param_value("format") : "json";
            if (format == "json") {
                res.set_content(read_file(jobs.file(id, ".json")), kJson);
            } else if (format == "csv") {
                res.set_content(read_file(jobs.file(id, ".csv")), kCsv);
            } else if (format == "surface" && r->kind == JobKind::Calibrate) {
                res.set_content(read_file(jobs.file(id, ".surface.csv")), kCsv);
            } else {
                send_error(res, 422, "format: must be json, csv or (calibration only) surface");
            }
        });
        server.Get(R"(/v1/jobs/[^/]*(/result)?)", [](const httplib::Request&, httplib::Response& res) {
            send_error(res, 404, "unknown job_id");
        });

        server.Post("/v1/decide", [](const httplib::Request& req, httplib::Response& res) {
            auto doc = parse_body(req, res);
            if (!doc) return;
            try {
                send_json(res, 200, decide(*doc));
            } catch (const ValidationError& e) {
                send_error(res, 422, "invalid request", e.issues());
            }
        });

        server.Get("/v1/boundaries", [](const httplib::Request& req, httplib::Response& res) {
            std::vector<std::string> issues;
            auto number = [&](const char* key, std::optional<double> fallback) -> double {
                if (!req.has_param(key)) {
                    if (!fallback) issues.push_back(std::string(key) + ": is required");
                    return fallback.value_or(0.0);
                }
                const auto v = parse_double(req.get_param_value(key));
                if (!v) issues.push_back(std::string(key) + ": must be a number");
                return v.value_or(0.0);
            };
            const double lambda = number("lambda", std::nullopt);
            const double gamma = number("gamma", std::nullopt);
            inference::AnalysisSchedule sched{{80, 120, 160}, number("phi", 0.5)};
            if (req.has_param("n_cum")) {
                sched.n_cum.clear();
                std::stringstream ss(req.get_param_value("n_cum"));
                std::string item;
                while (std::getline(ss, item, ',')) {
                    const auto v = parse_u64(item);
                    if (!v || *v == 0) {
                        issues.push_back("n_cum: must be a comma-separated list of positive integers");
                        break;
                    }
                    sched.n_cum.push_back(static_cast<std::int64_t>(*v));
                }
            }
            if (!issues.empty()) return send_error(res, 422, "invalid query", issues);
            inference::BoundarySet b;
            try {
                sched.validate();
                b = inference::boundary_set(lambda, gamma, sched);
            } catch (const std::exception& e) {
                return send_error(res, 422, "invalid query", {e.what()});
            }
            const std::string format = req.has_param("format") ? req.get_param_value("format") : "json";
            if (format == "csv") res.set_content(boundary_csv(b), kCsv);
            else if (format == "json") send_json(res, 200, json(b));
            else send_error(res, 422, "format: must be json or csv");
        });

        server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, json{{"status", "ok"}, {"schema_version", kSchemaVersion}});
        });

        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            std::string msg = "internal error";
            try {
                if (ep) std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                msg += std::string(": ") + e.what();
            } catch (...) {
            }
            send_error(res, 500, msg);
        });
    }
};

HttpService::HttpService(JobManager& jobs) : impl_(std::make_unique<Impl>(jobs)) {}
HttpService::~HttpService() = default;

int HttpService::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpService::run() { return impl_->server.listen_after_bind(); }

void HttpService::stop() { impl_->server.stop(); }

}  // namespace bmw::service
