#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "triage/model.hpp"
#include "triage/solver.hpp"

namespace triage {

// Malformed input: bad JSON, wrong types, missing fields, unknown enum
// values. `location` is a JSON pointer to the offending value.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string location, const std::string& message)
      : std::runtime_error(location.empty() ? message : location + ": " + message), location_(std::move(location)) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

inline constexpr int kFormatVersion = 1;

struct ScenarioDocument {
  Scenario scenario;
  std::map<std::string, Observations> observation_sets;
  bool operator==(const ScenarioDocument&) const = default;
};

// Parses and validates. Throws ParseError for malformed text and
// ValidationError for a well-formed but inconsistent scenario.
ScenarioDocument load_scenario(const std::string& text);
ScenarioDocument load_scenario_file(const std::string& path);

// Parses without validating.
ScenarioDocument parse_scenario(const nlohmann::json& doc);

nlohmann::json to_json(const ScenarioDocument& doc);
std::string save_scenario(const ScenarioDocument& doc);

// {"P": 0.92, ...}; values are range-checked by validate_observations.
Observations parse_observations(const nlohmann::json& doc);
nlohmann::json to_json(const Observations& obs);
// "P=0.92,M1=0.5"
Observations parse_observation_list(const std::string& text);

// {"rules": [{"component", "trajectory", "action"|"distribution"}]}
Policy parse_policy(const nlohmann::json& doc);
nlohmann::json to_json(const Policy& policy);

nlohmann::json to_json(const Action& action);
Action parse_action(const nlohmann::json& doc, const std::string& location = "");

enum class BatteryCase { A, B, C };
std::optional<BatteryCase> parse_battery_case(std::string_view text);

struct BatteryScenario {
  Scenario scenario;
  Observations observations;
};

// The EV battery pack of the worked example: pack P with modules M1 and M2,
// seven edges, and the case's health readings. `paper_figures` switches to
// PathAttribution accounting and, for case B, the published override
// revenues (M1 reuse 250, pack repurpose 183).
BatteryScenario builtin_battery_case(BatteryCase which, bool paper_figures = false);
// The battery scenario with observation sets "A", "B" and "C".
ScenarioDocument battery_document();

enum class DotMode { Physical, Augmented };

// Deterministic Graphviz text. Physical mode draws components and edges;
// augmented mode draws every reachable (v, tau) state and dashed CE exits for
// the options admissible there under `obs`. Throws ExpansionCapExceeded.
std::string export_dot(const Scenario& scenario, DotMode mode, const Observations* obs = nullptr,
                       std::size_t cap = 100'000);

}  // namespace triage
