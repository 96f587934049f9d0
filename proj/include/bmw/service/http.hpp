#pragma once

#include <memory>
#include <string>

#include "bmw/service/jobs.hpp"

namespace bmw::service {

/// JSON-over-HTTP front end:
///   POST /v1/calibrate[?seed=]            202 + JobRecord
///   POST /v1/simulate[?seed=&n_trials=]   202 + JobRecord
///   GET  /v1/jobs/{id}                    JobRecord, 404 if unknown
///   GET  /v1/jobs/{id}/result[?format=csv|surface]
///   POST /v1/decide                       400 malformed JSON, 422 invalid request
///   GET  /v1/boundaries?lambda=&gamma=[&n_cum=80,120,160&phi=0.5&format=csv]
///   GET  /v1/health
class HttpService {
   public:
    explicit HttpService(JobManager& jobs);
    ~HttpService();
    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds host:port (port 0 picks a free port). Returns the bound port,
    /// or -1 on failure.
    int bind(const std::string& host, int port);
    /// Serves until stop() is called.
    bool run();
    void stop();

   private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace bmw::service
