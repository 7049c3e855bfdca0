#include "triage/admissibility.hpp"

#include <algorithm>
#include <array>

#include "triage/valuation.hpp"

namespace triage {

namespace {

constexpr std::array<std::pair<ReasonCode, std::string_view>, 8> kReasonNames{{
    {ReasonCode::Precedence, "precedence"},
    {ReasonCode::AccessGate, "access-gate"},
    {ReasonCode::GateForbid, "gate-forbid"},
    {ReasonCode::Safety, "safety"},
    {ReasonCode::HealthThreshold, "health-threshold"},
    {ReasonCode::HealthUnknown, "health-unknown"},
    {ReasonCode::TimeBudget, "time-budget"},
    {ReasonCode::ResourceBudget, "resource-budget"},
}};

bool subset_of(const IdSet& needed, const EdgeSet& have) {
  return std::includes(have.begin(), have.end(), needed.begin(), needed.end());
}

bool intersects(const IdSet& a, const EdgeSet& b) {
  return std::any_of(a.begin(), a.end(), [&](const Id& id) { return b.contains(id); });
}

}  // namespace

std::string_view to_string(ReasonCode code) {
  for (const auto& [c, name] : kReasonNames) {
    if (c == code) return name;
  }
  return "?";
}

std::optional<ReasonCode> parse_reason_code(std::string_view text) {
  for (const auto& [c, name] : kReasonNames) {
    if (name == text) return c;
  }
  return std::nullopt;
}

void BudgetUsage::add(const DisassemblyEdge& edge) {
  time += edge.time;
  for (const auto& [resource, amount] : edge.resources) resources[resource] += amount;
}

std::optional<ReasonCode> edge_rejection(const AugmentedState& state, const DisassemblyEdge& edge,
                                         const Scenario& scenario, const BudgetUsage& used) {
  if (edge.applies_to != state.component) {
    throw ModelError("edge '" + edge.id + "' does not apply to component '" + state.component + "'");
  }
  if (state.trajectory.contains(edge.id)) {
    throw ModelError("edge '" + edge.id + "' was already executed");
  }
  if (!subset_of(edge.prerequisites, state.trajectory)) return ReasonCode::Precedence;
  if (scenario.budgets.time_max && used.time + edge.time > *scenario.budgets.time_max) {
    return ReasonCode::TimeBudget;
  }
  for (const auto& [resource, amount] : edge.resources) {
    auto cap = scenario.budgets.resource_caps.find(resource);
    if (cap == scenario.budgets.resource_caps.end()) continue;
    auto spent = used.resources.find(resource);
    Quantity before = spent == used.resources.end() ? Quantity{} : spent->second;
    if (before + amount > cap->second) return ReasonCode::ResourceBudget;
  }
  return std::nullopt;
}

std::optional<ReasonCode> option_rejection(const AugmentedState& state, const CEOption& option,
                                           const Scenario& scenario, const Observations& obs) {
  const auto& component = scenario.component(state.component);
  if (std::find(component.option_ids.begin(), component.option_ids.end(), option.id) ==
      component.option_ids.end()) {
    throw ModelError("option '" + option.id + "' is not available for component '" + component.id + "'");
  }
  if (!subset_of(option.gate_requires, state.trajectory)) return ReasonCode::AccessGate;
  if (intersects(option.gate_forbids, state.trajectory)) return ReasonCode::GateForbid;
  if (!(component.safety_score <= option.safety_max)) return ReasonCode::Safety;

  bool needs_health = option.min_health.has_value() || std::holds_alternative<HealthScaledRevenue>(option.revenue);
  if (needs_health) {
    auto health = visible_health(scenario, obs, state);
    if (!health) return ReasonCode::HealthUnknown;
    if (option.min_health && *health < *option.min_health) return ReasonCode::HealthThreshold;
  }
  return std::nullopt;
}

ActionSet admissible_actions(const AugmentedState& state, const Scenario& scenario, const Observations& obs,
                             const BudgetUsage& used) {
  const auto& component = scenario.component(state.component);
  ActionSet out;

  std::vector<Id> option_ids = component.option_ids;
  std::sort(option_ids.begin(), option_ids.end());
  option_ids.erase(std::unique(option_ids.begin(), option_ids.end()), option_ids.end());
  for (const auto& id : option_ids) {
    if (auto reason = option_rejection(state, scenario.option(id), scenario, obs)) {
      out.rejections.push_back({Action::commit(id), *reason});
    } else {
      out.commits.push_back(id);
    }
  }

  for (const auto* edge : scenario.edges_on(state.component)) {
    if (state.trajectory.contains(edge->id)) continue;
    if (auto reason = edge_rejection(state, *edge, scenario, used)) {
      out.rejections.push_back({Action::edge(edge->id), *reason});
    } else {
      out.edges.push_back(edge->id);
    }
  }
  return out;
}

}  // namespace triage
