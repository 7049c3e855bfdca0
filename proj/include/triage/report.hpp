#pragma once

#include <string>

#include "json.hpp"
#include "triage/solver.hpp"

namespace triage {

// Money goes on the wire as a JSON number with at most six decimals.
nlohmann::json money_json(Money amount);
nlohmann::json outcome_json(const Outcome& outcome);  // null when infeasible

nlohmann::json to_json(const FrontierAction& action);
nlohmann::json to_json(const UtilityBreakdown& breakdown);
nlohmann::json to_json(const CommitRecord& record);
nlohmann::json to_json(const Solution& solution);
nlohmann::json to_json(const Explanation& explanation);
nlohmann::json frontier_json(const Scenario& scenario, const Observations& obs, const FrontierState& frontier);

std::string solution_table(const Solution& solution);
std::string explanation_table(const Explanation& explanation);

}  // namespace triage
