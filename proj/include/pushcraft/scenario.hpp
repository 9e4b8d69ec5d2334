#pragma once

#include <cstdint>
#include <iosfwd>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pushcraft/pipeline.hpp"

namespace pushcraft {

inline constexpr int kSchemaVersion = 1;

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& what) : std::runtime_error("scenario: " + what) {}
};

/// Validates and fills defaults; unknown keys are rejected.
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& sc);
Scenario load_scenario(const std::string& path);

std::uint64_t fnv1a(std::string_view bytes);
/// 16 hex digits over the canonical serialization (defaults filled in).
std::string scenario_hash(const Scenario& sc);

struct PlanFile {
  std::string method = "kghs";
  std::string scenario_hash;
  Scenario scenario;
  GuidingPath path;
  HybridPlan plan;
};

/// No wall-clock fields, so identical inputs give identical files.
nlohmann::json plan_to_json(const PlanFile& pf);
PlanFile plan_from_json(const nlohmann::json& j);

nlohmann::json mode_to_json(const InteractionMode& m);
InteractionMode mode_from_json(const nlohmann::json& j);

/// Line-delimited: a header line, then one line per record.
void write_log(std::ostream& os, const ExecutionLog& log, const Scenario& sc);

struct LoadedLog {
  ExecutionLog log;
  Scenario scenario;
  std::string scenario_hash;
};
LoadedLog read_log(std::istream& is);

nlohmann::json metrics_to_json(const Metrics& m);

std::string read_file(const std::string& path);

}  // namespace pushcraft
