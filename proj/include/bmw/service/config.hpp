#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmw/calibration/calibration.hpp"
#include "bmw/sim/trial_sim.hpp"

namespace bmw::service {

inline constexpr int kSchemaVersion = 1;

/// Collected field-level problems ("design.n_cum: must be strictly
/// increasing"). what() joins them with newlines.
class ValidationError : public std::runtime_error {
   public:
    explicit ValidationError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const { return issues_; }

   private:
    std::vector<std::string> issues_;
};

enum class CalibrationMethod { Asymptotic, RawData };

/// Efficacy marginals used to derive the design tie probabilities and, for
/// raw-data calibration, to simulate cohorts.
struct DesignScenarios {
    std::vector<double> control;
    std::vector<double> treatment_null;
    std::vector<double> treatment_alt;
    double rho_ee = 0.25;

    wr::ScenarioTruth null_truth() const;
    wr::ScenarioTruth alt_truth() const;
};

struct ScenarioEntry {
    std::string id;
    wr::ScenarioTruth truth;
    sim::TruthLabels labels;
};

struct LambdaGamma {
    double lambda = 0.0;
    double gamma = 0.0;
};

struct FixedBoundaries {
    std::optional<LambdaGamma> efficacy;
    std::optional<LambdaGamma> efficacy_futility;
    std::optional<LambdaGamma> toxicity;
};

struct Config {
    calib::DesignSpec design;
    CalibrationMethod method = CalibrationMethod::Asymptotic;
    std::optional<DesignScenarios> design_scenarios;
    std::uint64_t simulation_seed = 1;
    std::size_t n_trials = 10000;
    std::vector<sim::Engine> methods{sim::Engine::Bmw};
    std::vector<ScenarioEntry> scenarios;
    FixedBoundaries boundaries;
};

/// Parses and validates a configuration document. Throws ValidationError
/// listing every offending field.
Config parse_config(const nlohmann::json& doc);

/// As parse_config, from text. Malformed JSON is reported with its byte
/// offset and line number.
Config parse_config_text(const std::string& text);

/// Canonical JSON for a parsed configuration (parse_config of the result
/// yields the same Config).
nlohmann::json config_to_json(const Config& c);

std::string_view to_string(CalibrationMethod m);

}  // namespace bmw::service
