#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bmw/service/config.hpp"

namespace bmw::service {

enum class JobKind { Calibrate, Simulate };
enum class JobStatus { Queued, Running, Done, Failed };

std::string_view to_string(JobKind k);
std::string_view to_string(JobStatus s);

struct JobRecord {
    std::string job_id;
    JobKind kind = JobKind::Calibrate;
    JobStatus status = JobStatus::Queued;
    double progress = 0.0;
    std::string stage;
    std::string error;
    std::string result_ref;  // path of the JSON report once done
};

void to_json(nlohmann::json& j, const JobRecord& r);
void from_json(const nlohmann::json& j, JobRecord& r);

/// Runs calibrate/simulate jobs on a fixed number of workers. Results are
/// flat files in `dir`:
///   <id>.record.json   the JobRecord
///   <id>.json          report (same bytes the CLI writes)
///   <id>.csv           simulation table, or the boundary table for calibration
///   <id>.surface.csv   calibration only
/// Records found in `dir` at start-up are loaded; jobs that were queued or
/// running when the previous process ended are marked failed.
class JobManager {
   public:
    JobManager(std::filesystem::path dir, unsigned workers, unsigned threads_per_job);
    ~JobManager();
    JobManager(const JobManager&) = delete;
    JobManager& operator=(const JobManager&) = delete;

    /// Returns the record as queued.
    JobRecord submit(JobKind kind, Config config);
    std::optional<JobRecord> get(const std::string& id) const;
    /// Blocks until the job is done or failed. nullopt for unknown ids.
    std::optional<JobRecord> wait(const std::string& id) const;
    std::filesystem::path file(const std::string& id, const std::string& suffix) const;

   private:
    struct Pending {
        std::string id;
        JobKind kind;
        Config config;
    };

    void worker_loop();
    void run(Pending& job);
    void update(const std::string& id, const std::function<void(JobRecord&)>& f);
    void persist(const JobRecord& r) const;

    std::filesystem::path dir_;
    unsigned threads_per_job_;
    mutable std::mutex mu_;
    mutable std::condition_variable changed_;
    std::condition_variable work_;
    std::deque<Pending> queue_;
    std::map<std::string, JobRecord> records_;
    std::uint64_t counter_ = 0;
    std::uint64_t salt_;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

}  // namespace bmw::service
