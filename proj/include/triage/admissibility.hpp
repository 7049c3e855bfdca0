#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "triage/augmentation.hpp"
#include "triage/model.hpp"

namespace triage {

// Reasons are checked in declaration order; the first failing check wins.
enum class ReasonCode {
  Precedence,
  AccessGate,
  GateForbid,
  Safety,
  HealthThreshold,
  HealthUnknown,
  TimeBudget,
  ResourceBudget,
};

std::string_view to_string(ReasonCode code);
std::optional<ReasonCode> parse_reason_code(std::string_view text);

// Time and resources consumed by every edge executed so far in a run.
// Budgets are global: siblings draw from the same pool.
struct BudgetUsage {
  Quantity time;
  std::map<std::string, Quantity> resources;

  void add(const DisassemblyEdge& edge);
  bool operator==(const BudgetUsage&) const = default;
};

struct Rejection {
  Action action;
  ReasonCode reason;
  bool operator==(const Rejection&) const = default;
};

struct ActionSet {
  std::vector<Id> edges;    // admissible edge ids, sorted
  std::vector<Id> commits;  // admissible option ids, sorted
  std::vector<Rejection> rejections;

  bool empty() const { return edges.empty() && commits.empty(); }
};

class InadmissibleAction : public std::runtime_error {
 public:
  InadmissibleAction(std::string message, std::optional<ReasonCode> reason)
      : std::runtime_error(std::move(message)), reason_(reason) {}
  std::optional<ReasonCode> reason() const { return reason_; }

 private:
  std::optional<ReasonCode> reason_;
};

// First failing check for executing `edge` from `state`, or nullopt.
std::optional<ReasonCode> edge_rejection(const AugmentedState& state, const DisassemblyEdge& edge,
                                         const Scenario& scenario, const BudgetUsage& used);

// First failing check for committing `state` to `option`, or nullopt.
// Commits consume no budget.
std::optional<ReasonCode> option_rejection(const AugmentedState& state, const CEOption& option,
                                           const Scenario& scenario, const Observations& obs);

// The admissible set A(v, tau): candidate edges are those on the component
// not yet executed; candidate commits are the component's options. Every
// candidate is either admitted or rejected with exactly one reason.
ActionSet admissible_actions(const AugmentedState& state, const Scenario& scenario, const Observations& obs,
                             const BudgetUsage& used);

}  // namespace triage
