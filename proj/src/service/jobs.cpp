#include "bmw/service/jobs.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "bmw/service/json_io.hpp"
#include "bmw/service/service.hpp"
#include "bmw/stat/rng.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace bmw::service {

std::string_view to_string(JobKind k) { return k == JobKind::Calibrate ? "calibrate" : "simulate"; }

std::string_view to_string(JobStatus s) {
    switch (s) {
        case JobStatus::Queued: return "queued";
        case JobStatus::Running: return "running";
        case JobStatus::Done: return "done";
        case JobStatus::Failed: return "failed";
    }
    return "failed";
}

void to_json(json& j, const JobRecord& r) {
    j = json{{"job_id", r.job_id},
             {"kind", to_string(r.kind)},
             {"status", to_string(r.status)},
             {"progress", r.progress},
             {"stage", r.stage},
             {"error", r.error.empty() ? json(nullptr) : json(r.error)},
             {"result_ref", r.result_ref.empty() ? json(nullptr) : json(r.result_ref)}};
}

void from_json(const json& j, JobRecord& r) {
    j.at("job_id").get_to(r.job_id);
    r.kind = j.at("kind").get<std::string>() == "simulate" ? JobKind::Simulate : JobKind::Calibrate;
    const auto s = j.at("status").get<std::string>();
    r.status = s == "queued" ? JobStatus::Queued
               : s == "running" ? JobStatus::Running
               : s == "done"    ? JobStatus::Done
                                : JobStatus::Failed;
    j.at("progress").get_to(r.progress);
    r.stage = j.value("stage", "");
    r.error = j.at("error").is_null() ? "" : j.at("error").get<std::string>();
    r.result_ref = j.at("result_ref").is_null() ? "" : j.at("result_ref").get<std::string>();
}

namespace {

void write_file(const fs::path& p, const std::string& content) {
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write " + tmp.string());
        os << content;
    }
    fs::rename(tmp, p);
}

}  // namespace

JobManager::JobManager(fs::path dir, unsigned workers, unsigned threads_per_job)
    : dir_(std::move(dir)), threads_per_job_(threads_per_job) {
    fs::create_directories(dir_);
    for (const auto& entry : fs::directory_iterator(dir_)) {
        const auto name = entry.path().filename().string();
        const std::string suffix = ".record.json";
        if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
            continue;
        try {
            std::ifstream is(entry.path());
            JobRecord r = json::parse(is).get<JobRecord>();
            if (r.status == JobStatus::Queued || r.status == JobStatus::Running) {
                r.status = JobStatus::Failed;
                r.error = "interrupted by a service restart";
                persist(r);
            }
            records_[r.job_id] = r;
        } catch (const std::exception&) {
            // unreadable records are skipped
        }
    }
    salt_ = std::random_device{}();
    salt_ = (salt_ << 32) ^ static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());
    if (workers == 0) workers = 1;
    for (unsigned i = 0; i < workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

JobManager::~JobManager() {
    {
        std::lock_guard lk(mu_);
        stopping_ = true;
    }
    work_.notify_all();
    for (auto& t : workers_) t.join();
}

fs::path JobManager::file(const std::string& id, const std::string& suffix) const { return dir_ / (id + suffix); }

void JobManager::persist(const JobRecord& r) const { write_file(file(r.job_id, ".record.json"), to_text(json(r))); }

JobRecord JobManager::submit(JobKind kind, Config config) {
    JobRecord r;
    {
        std::lock_guard lk(mu_);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(stat::splitmix64(salt_ + ++counter_)));
        r.job_id = buf;
        r.kind = kind;
        r.stage = "queued";
        records_[r.job_id] = r;
        persist(r);
        queue_.push_back(Pending{r.job_id, kind, std::move(config)});
    }
    work_.notify_one();
    return r;
}

std::optional<JobRecord> JobManager::get(const std::string& id) const {
    std::lock_guard lk(mu_);
    auto it = records_.find(id);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

std::optional<JobRecord> JobManager::wait(const std::string& id) const {
    std::unique_lock lk(mu_);
    auto it = records_.find(id);
    if (it == records_.end()) return std::nullopt;
    changed_.wait(lk, [&] {
        const auto s = records_.at(id).status;
        return s == JobStatus::Done || s == JobStatus::Failed;
    });
    return records_.at(id);
}

void JobManager::update(const std::string& id, const std::function<void(JobRecord&)>& f) {
    JobRecord copy;
    {
        std::lock_guard lk(mu_);
        auto& r = records_.at(id);
        f(r);
        copy = r;
    }
    persist(copy);
    changed_.notify_all();
}

void JobManager::worker_loop() {
    for (;;) {
        Pending job;
        {
            std::unique_lock lk(mu_);
            work_.wait(lk, [&] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            job = std::move(queue_.front());
            queue_.pop_front();
        }
        run(job);
    }
}

void JobManager::run(Pending& job) {
    update(job.id, [](JobRecord& r) {
        r.status = JobStatus::Running;
        r.stage = "starting";
    });
    // Progress is written to the record file at most every 2 percentage points.
    double last_written = -1.0;
    auto progress = [&](double f, const std::string& stage) {
        if (f - last_written < 0.02 && f < 1.0) {
            std::lock_guard lk(mu_);
            auto& r = records_.at(job.id);
            r.progress = f;
            r.stage = stage;
            return;
        }
        last_written = f;
        update(job.id, [&](JobRecord& r) {
            r.progress = f;
            r.stage = stage;
        });
    };
    try {
        if (job.kind == JobKind::Calibrate) {
            const auto out = run_calibration(job.config, threads_per_job_, progress);
            write_file(file(job.id, ".surface.csv"), surface_csv(out.efficacy));
            write_file(file(job.id, ".csv"), boundary_csv(out.efficacy.boundaries));
            write_file(file(job.id, ".json"), to_text(out.report));
        } else {
            const auto out = run_simulation(job.config, threads_per_job_, progress);
            write_file(file(job.id, ".csv"), out.csv);
            write_file(file(job.id, ".json"), to_text(out.report));
        }
        update(job.id, [&](JobRecord& r) {
            r.status = JobStatus::Done;
            r.progress = 1.0;
            r.stage = "done";
            r.result_ref = file(job.id, ".json").string();
        });
    } catch (const std::exception& e) {
        const std::string msg = e.what();
        update(job.id, [&](JobRecord& r) {
            r.status = JobStatus::Failed;
            r.stage = "failed";
            r.error = msg;
        });
    }
}

}  // namespace bmw::service
