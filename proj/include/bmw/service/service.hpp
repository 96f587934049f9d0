#pragma once

// Operations shared by the command-line tool and the HTTP service. Both
// front ends call these and write their output verbatim.

#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "bmw/service/config.hpp"

namespace bmw::service {

/// fraction in [0,1], short stage label
using Progress = std::function<void(double, const std::string&)>;

struct CalibrationOutput {
    nlohmann::json report;
    calib::CalibrationResult efficacy;
    std::optional<calib::CalibrationResult> toxicity;
};

/// Efficacy calibration (asymptotic or raw-data per the config) plus the
/// toxicity calibration when the design has toxicity settings. Throws
/// CalibrationError when a grid has no feasible point.
CalibrationOutput run_calibration(const Config& config, unsigned threads, const Progress& progress = {});

/// RFC-4180 CSV with CRLF line ends: lambda,gamma,poe_null,poe_alt
std::string surface_csv(const calib::CalibrationResult& r);

/// analysis_index,n_cum,futility_pp,superiority_pp
std::string boundary_csv(const inference::BoundarySet& b);

struct SimulationOutput {
    std::string csv;
    nlohmann::json report;
};

/// One row per scenario x method:
///   scenario_id,method,n_trials,reject_rate_e,reject_rate_t,fwer,pcs,expected_n
/// fwer is NA when the scenario has no true null. Boundaries come from
/// config.boundaries when given, otherwise they are calibrated first. Every
/// method sees the same per-scenario replicate streams.
SimulationOutput run_simulation(const Config& config, unsigned threads, const Progress& progress = {});

/// Interim decision for one monitoring request. Pure function of the
/// request. Throws ValidationError on invalid input.
nlohmann::json decide(const nlohmann::json& request);

/// Boundary table for (lambda, gamma) over a schedule.
nlohmann::json boundaries_json(double lambda, double gamma, const inference::AnalysisSchedule& schedule);

/// Serialized form written by both front ends (two-space indent, trailing
/// newline).
std::string to_text(const nlohmann::json& doc);

}  // namespace bmw::service
