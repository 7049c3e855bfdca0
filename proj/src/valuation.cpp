#include "triage/valuation.hpp"

#include <algorithm>
#include <vector>

#include "triage/admissibility.hpp"

namespace triage {

double rvr(double lo, double hi, double health) {
  if (!(lo < hi)) throw ValuationError("rvr requires lo < hi");
  return std::clamp((health - lo) / (hi - lo), 0.0, 1.0);
}

double aggregate_health(std::span<const WeightedHealth> children, AggregatorKind kind) {
  if (children.empty()) throw ValuationError("cannot aggregate health over zero children");
  if (kind == AggregatorKind::Min) {
    double lowest = children.front().health;
    for (const auto& child : children) lowest = std::min(lowest, child.health);
    return lowest;
  }
  double total_weight = 0.0;
  double weighted = 0.0;
  for (const auto& child : children) {
    if (child.weight < 0.0) throw ValuationError("aggregation weights must be >= 0");
    total_weight += child.weight;
    weighted += child.weight * child.health;
  }
  if (!(total_weight > 0.0)) throw ValuationError("aggregation weights are all zero");
  return std::clamp(weighted / total_weight, 0.0, 1.0);
}

namespace {

std::optional<double> resolve(const Scenario& scenario, const Observations& obs, const Id& component, int depth) {
  if (auto it = obs.health.find(component); it != obs.health.end()) return it->second;
  const auto& c = scenario.component(component);
  if (!c.aggregator || depth > static_cast<int>(scenario.components.size())) return std::nullopt;
  std::vector<WeightedHealth> parts;
  for (const auto& child : c.aggregator->children) {
    auto h = resolve(scenario, obs, child.component, depth + 1);
    if (!h) return std::nullopt;
    parts.push_back({*h, child.weight});
  }
  return aggregate_health(parts, c.aggregator->kind);
}

}  // namespace

std::optional<double> resolve_health(const Scenario& scenario, const Observations& obs, const Id& component) {
  return resolve(scenario, obs, component, 0);
}

std::optional<double> visible_health(const Scenario& scenario, const Observations& obs,
                                     const AugmentedState& state) {
  const auto& c = scenario.component(state.component);
  for (const auto& edge : c.health_reveal_edges) {
    if (!state.trajectory.contains(edge)) return std::nullopt;
  }
  return resolve_health(scenario, obs, state.component);
}

Money option_revenue(const CEOption& option, std::optional<double> health) {
  return std::visit(
      [&](const auto& model) -> Money {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, HealthScaledRevenue>) {
          if (!health) throw ValuationError("option '" + option.id + "' needs a known health score");
          return Money::from_double(model.baseline.to_double() * rvr(model.rvr_lo, model.rvr_hi, *health));
        } else {
          return model.amount;
        }
      },
      option.revenue);
}

Money path_cost(const Scenario& scenario, const EdgeSet& edges) {
  Money total;
  for (const auto& id : edges) total += scenario.edge(id).cost;
  return total;
}

UtilityBreakdown option_utility(const AugmentedState& state, const CEOption& option, const Observations& obs,
                                const Scenario& scenario, AccountingMode mode, const EdgeSet& attributed) {
  if (auto reason = option_rejection(state, option, scenario, obs)) {
    throw InadmissibleAction("option '" + option.id + "' is not admissible at " +
                                 state_signature(state).to_string() + " (" + std::string(to_string(*reason)) + ")",
                             reason);
  }
  UtilityBreakdown out;
  out.revenue = option_revenue(option, visible_health(scenario, obs, state));
  out.proc_cost = option.proc_cost;
  if (mode == AccountingMode::PathAttribution) {
    if (option.kind == OptionKind::Null) {
      EdgeSet unpaid;
      std::set_difference(state.trajectory.begin(), state.trajectory.end(), attributed.begin(), attributed.end(),
                          std::inserter(unpaid, unpaid.end()));
      out.path_cost = path_cost(scenario, unpaid);
    } else {
      out.path_cost = path_cost(scenario, state.trajectory);
    }
  }
  out.utility = out.revenue - out.path_cost - out.proc_cost;
  return out;
}

Money stage_reward(const AugmentedState& state, const Action& action, const Observations& obs,
                   const Scenario& scenario, AccountingMode mode, const BudgetUsage& used,
                   const EdgeSet& attributed) {
  if (action.is_edge()) {
    const auto& edge = scenario.edge(action.id);
    if (auto reason = edge_rejection(state, edge, scenario, used)) {
      throw InadmissibleAction("edge '" + edge.id + "' is not admissible (" + std::string(to_string(*reason)) + ")",
                               reason);
    }
    return mode == AccountingMode::Incremental ? -edge.cost : Money{};
  }
  return option_utility(state, scenario.option(action.id), obs, scenario, mode, attributed).utility;
}

}  // namespace triage
