#pragma once

// nlohmann::json conversions for the public value types. Every to_json has a
// matching from_json so documents round-trip.

#include <json.hpp>

#include "bmw/calibration/calibration.hpp"
#include "bmw/sim/trial_sim.hpp"

namespace bmw::inference {
void to_json(nlohmann::json& j, const AnalysisSchedule& v);
void from_json(const nlohmann::json& j, AnalysisSchedule& v);
void to_json(nlohmann::json& j, const NormalPrior& v);
void from_json(const nlohmann::json& j, NormalPrior& v);
void to_json(nlohmann::json& j, const BetaPrior& v);
void from_json(const nlohmann::json& j, BetaPrior& v);
void to_json(nlohmann::json& j, const PosteriorTheta& v);
void from_json(const nlohmann::json& j, PosteriorTheta& v);
void to_json(nlohmann::json& j, const ToxCounts& v);
void from_json(const nlohmann::json& j, ToxCounts& v);
void to_json(nlohmann::json& j, const BoundarySet& v);
void from_json(const nlohmann::json& j, BoundarySet& v);
}  // namespace bmw::inference

namespace bmw::wr {
void to_json(nlohmann::json& j, const WltCounts& v);
void from_json(const nlohmann::json& j, WltCounts& v);
void to_json(nlohmann::json& j, const ScenarioTruth& v);
void from_json(const nlohmann::json& j, ScenarioTruth& v);
}  // namespace bmw::wr

namespace bmw::calib {
void to_json(nlohmann::json& j, const ToxicityTargets& v);
void from_json(const nlohmann::json& j, ToxicityTargets& v);
void to_json(nlohmann::json& j, const Grid& v);
void from_json(const nlohmann::json& j, Grid& v);
void to_json(nlohmann::json& j, const GridPoint& v);
void from_json(const nlohmann::json& j, GridPoint& v);
/// Surface included; boundaries emitted as per-analysis rows.
void to_json(nlohmann::json& j, const CalibrationResult& v);
void from_json(const nlohmann::json& j, CalibrationResult& v);
}  // namespace bmw::calib

namespace bmw::sim {
void to_json(nlohmann::json& j, const TruthLabels& v);
void from_json(const nlohmann::json& j, TruthLabels& v);
/// fwer is null when undefined.
void to_json(nlohmann::json& j, const OcSummary& v);
void from_json(const nlohmann::json& j, OcSummary& v);
void to_json(nlohmann::json& j, const TrialResult& v);
void from_json(const nlohmann::json& j, TrialResult& v);
}  // namespace bmw::sim
