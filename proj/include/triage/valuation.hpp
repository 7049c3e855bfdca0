#pragma once

#include <optional>
#include <span>
#include <stdexcept>

#include "triage/augmentation.hpp"
#include "triage/model.hpp"

namespace triage {

class ValuationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Residual value ratio: clip((health - lo) / (hi - lo), 0, 1).
// Throws ValuationError unless lo < hi.
double rvr(double lo, double hi, double health);

struct WeightedHealth {
  double health = 0.0;
  double weight = 1.0;
};

// Weighted mean or minimum of child healths. Throws on an empty list or, in
// mean mode, when every weight is zero.
double aggregate_health(std::span<const WeightedHealth> children, AggregatorKind kind);

// Health of a component ignoring visibility: the direct observation if one
// exists, otherwise the aggregate of its children when it has an aggregator
// and every child resolves.
std::optional<double> resolve_health(const Scenario& scenario, const Observations& obs, const Id& component);

// Health usable at `state`: resolved health, but only once every
// health_reveal_edge of the component is in the trajectory.
std::optional<double> visible_health(const Scenario& scenario, const Observations& obs,
                                     const AugmentedState& state);

// Throws ValuationError for a health-scaled option with unknown health.
Money option_revenue(const CEOption& option, std::optional<double> health);

struct UtilityBreakdown {
  Money revenue;
  Money path_cost;
  Money proc_cost;
  Money utility;  // revenue - path_cost - proc_cost
  bool operator==(const UtilityBreakdown&) const = default;
};

// Sum of edge costs over `edges`.
Money path_cost(const Scenario& scenario, const EdgeSet& edges);

// Utility of committing the state's component to `option`.
//
// PathAttribution charges every edge in the trajectory (shared ancestors are
// charged once per descendant). A Null commit only pays for edges that are not
// in `attributed`, the union of trajectories already committed this run.
// Incremental charges no path cost: edge costs are paid as they execute.
//
// Throws InadmissibleAction (see admissibility.hpp) if the option is not
// admissible at the state.
UtilityBreakdown option_utility(const AugmentedState& state, const CEOption& option, const Observations& obs,
                                const Scenario& scenario, AccountingMode mode, const EdgeSet& attributed = {});

struct BudgetUsage;

// Per-action return. Edges: -cost (Incremental) or 0 (PathAttribution).
// Commits: option_utility(...).utility in both modes.
Money stage_reward(const AugmentedState& state, const Action& action, const Observations& obs,
                   const Scenario& scenario, AccountingMode mode, const BudgetUsage& used,
                   const EdgeSet& attributed = {});

}  // namespace triage
