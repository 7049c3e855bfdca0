#include "triage/report.hpp"

#include <iomanip>
#include <sstream>

#include "triage/scenario_io.hpp"

namespace triage {

using nlohmann::json;

json money_json(Money amount) { return amount.to_double(); }

json outcome_json(const Outcome& outcome) { return outcome.feasible() ? money_json(outcome.amount()) : json(nullptr); }

json to_json(const FrontierAction& action) { return {{"component", action.component}, {"action", to_json(action.action)}}; }

json to_json(const UtilityBreakdown& b) {
  return {{"revenue", money_json(b.revenue)},
          {"path_cost", money_json(b.path_cost)},
          {"proc_cost", money_json(b.proc_cost)},
          {"utility", money_json(b.utility)}};
}

json to_json(const CommitRecord& record) {
  return {{"component", record.component},
          {"trajectory", std::vector<Id>(record.trajectory.begin(), record.trajectory.end())},
          {"option", record.option.empty() ? json(nullptr) : json(record.option)},
          {"breakdown", to_json(record.breakdown)}};
}

json to_json(const Solution& solution) {
  json steps = json::array();
  for (const auto& step : solution.steps) {
    steps.push_back({{"component", step.action.component},
                     {"action", to_json(step.action.action)},
                     {"state", step.state.to_string()},
                     {"reward", money_json(step.reward)}});
  }
  json routing = json::array();
  for (const auto& record : solution.routing) routing.push_back(to_json(record));
  return {{"value", outcome_json(solution.value)},
          {"feasible", solution.value.feasible()},
          {"accounting", std::string(to_string(solution.accounting))},
          {"steps", steps},
          {"policy", to_json(solution.policy)},
          {"routing", routing},
          {"infeasible_components", solution.infeasible_components},
          {"states_expanded", solution.states_expanded}};
}

json to_json(const Explanation& ex) {
  json components = json::array();
  for (const auto& c : ex.components) {
    json actions = json::array();
    for (const auto& a : c.actions) {
      json row = {{"action", to_json(a.action)}, {"admissible", a.admissible()}, {"best", a.best}};
      if (a.rejection) {
        row["reason_code"] = std::string(to_string(*a.rejection));
      } else if (a.spawn_conflict) {
        row["reason_code"] = "spawn-conflict";
      } else {
        row["stage_reward"] = money_json(a.stage_reward);
        row["continuation"] = outcome_json(a.continuation);
        row["branch"] = outcome_json(a.branch);
        row["projected"] = outcome_json(a.projected);
      }
      actions.push_back(std::move(row));
    }
    components.push_back({{"component", c.state.component},
                          {"state", state_signature(c.state).to_string()},
                          {"trajectory", std::vector<Id>(c.state.trajectory.begin(), c.state.trajectory.end())},
                          {"visible_health", c.visible_health ? json(*c.visible_health) : json(nullptr)},
                          {"actions", actions}});
  }
  return {{"value", outcome_json(ex.value)},
          {"realized", money_json(ex.realized)},
          {"best", ex.best ? to_json(*ex.best) : json(nullptr)},
          {"components", components}};
}

json frontier_json(const Scenario& scenario, const Observations& obs, const FrontierState& frontier) {
  json live = json::array();
  for (const auto& state : frontier.live) {
    auto health = visible_health(scenario, obs, state);
    live.push_back({{"component", state.component},
                    {"state", state_signature(state).to_string()},
                    {"trajectory", std::vector<Id>(state.trajectory.begin(), state.trajectory.end())},
                    {"visible_health", health ? json(*health) : json(nullptr)}});
  }
  json resources = json::object();
  for (const auto& [name, cap] : scenario.budgets.resource_caps) {
    resources[name] = {{"used", 0.0}, {"cap", cap.to_double()}};
  }
  for (const auto& [name, used] : frontier.used.resources) {
    auto cap = scenario.budgets.resource_caps.find(name);
    resources[name] = {{"used", used.to_double()},
                       {"cap", cap == scenario.budgets.resource_caps.end() ? json(nullptr) : json(cap->second.to_double())}};
  }
  json committed = json::array();
  for (const auto& record : frontier.committed) committed.push_back(to_json(record));
  return {{"live", live},
          {"complete", frontier.complete()},
          {"realized", money_json(frontier.realized)},
          {"committed", committed},
          {"budgets",
           {{"time", {{"used", frontier.used.time.to_double()},
                      {"cap", scenario.budgets.time_max ? json(scenario.budgets.time_max->to_double()) : json(nullptr)}}},
            {"resources", resources}}}};
}

namespace {

std::string outcome_text(const Outcome& o) { return o.feasible() ? o.amount().to_string() : "infeasible"; }

}  // namespace

std::string solution_table(const Solution& solution) {
  std::ostringstream out;
  out << "value: " << outcome_text(solution.value) << "  (" << to_string(solution.accounting) << " accounting)\n";
  if (!solution.value.feasible()) {
    out << "no complete routing; stuck components:";
    for (const auto& id : solution.infeasible_components) out << ' ' << id;
    out << '\n';
    return out.str();
  }
  out << "policy:\n";
  int n = 0;
  for (const auto& step : solution.steps) {
    out << "  " << std::setw(2) << ++n << ". " << std::left << std::setw(28) << step.action.to_string()
        << std::right << " at " << std::left << std::setw(36) << step.state.to_string() << std::right
        << " reward " << step.reward.to_string() << '\n';
  }
  if (!solution.routing.empty()) {
    out << "routing:\n";
    for (const auto& r : solution.routing) {
      out << "  " << std::left << std::setw(6) << r.component << std::right << " -> "
          << (r.option.empty() ? std::string("(negligible)") : r.option) << "  revenue " << r.breakdown.revenue.to_string()
          << ", path " << r.breakdown.path_cost.to_string() << ", proc " << r.breakdown.proc_cost.to_string()
          << ", utility " << r.breakdown.utility.to_string() << '\n';
    }
  }
  out << "states expanded: " << solution.states_expanded << '\n';
  return out.str();
}

std::string explanation_table(const Explanation& ex) {
  std::ostringstream out;
  out << "projected total: " << outcome_text(ex.value) << "  realized so far: " << ex.realized.to_string() << '\n';
  for (const auto& c : ex.components) {
    out << state_signature(c.state).to_string();
    if (c.visible_health) out << "  health " << *c.visible_health;
    out << '\n';
    for (const auto& a : c.actions) {
      out << "  " << (a.best ? '*' : ' ') << ' ' << std::left << std::setw(22) << a.action.to_string() << std::right;
      if (a.rejection) {
        out << " rejected: " << to_string(*a.rejection);
      } else if (a.spawn_conflict) {
        out << " rejected: spawn-conflict";
      } else {
        out << " reward " << a.stage_reward.to_string() << ", then " << outcome_text(a.continuation) << ", total "
            << outcome_text(a.projected);
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace triage
