#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "triage/admissibility.hpp"
#include "triage/augmentation.hpp"
#include "triage/model.hpp"
#include "triage/valuation.hpp"

namespace triage {

// A total reward, or the explicit marker that no complete routing exists.
// Infeasible orders below every feasible amount and never takes part in
// arithmetic.
class Outcome {
 public:
  static Outcome infeasible() { return Outcome{}; }
  static Outcome of(Money amount) {
    Outcome o;
    o.amount_ = amount;
    return o;
  }

  bool feasible() const { return amount_.has_value(); }
  Money amount() const;  // throws std::logic_error when infeasible
  const std::optional<Money>& optional() const { return amount_; }

  bool operator==(const Outcome&) const = default;
  friend bool operator<(const Outcome& a, const Outcome& b) {
    if (!b.feasible()) return false;
    if (!a.feasible()) return true;
    return *a.amount_ < *b.amount_;
  }
  friend bool operator>(const Outcome& a, const Outcome& b) { return b < a; }

 private:
  std::optional<Money> amount_;
};

Outcome operator+(Money reward, const Outcome& rest);

struct CommitRecord {
  Id component;
  EdgeSet trajectory;
  Id option;  // empty for negligible components
  UtilityBreakdown breakdown;
  bool operator==(const CommitRecord&) const = default;
};

// The solver's decision state: every live component (AND) plus the budget
// consumed by the union of executed edges.
struct FrontierState {
  std::vector<AugmentedState> live;  // sorted by component id, ids distinct
  BudgetUsage used;
  // Union of committed trajectories (PathAttribution only).
  EdgeSet attributed;
  // Edges held by negligible components (PathAttribution only). Whatever
  // no commit has paid for is charged when the run completes.
  EdgeSet unsettled;
  // Every component that has been live at some point this run.
  IdSet instantiated;
  Money realized;
  std::vector<CommitRecord> committed;

  const AugmentedState* find(const Id& component) const;
  bool complete() const { return live.empty(); }
};

// Memo key: live state signatures, exact budget usage, attributed edges and
// the instantiated set. Realized reward and commit history are excluded.
std::string frontier_signature(const FrontierState& frontier);

FrontierState initial_frontier(const Scenario& scenario);

// Throws ModelError if the frontier could not arise from the scenario.
void check_frontier(const Scenario& scenario, const FrontierState& frontier);

struct FrontierAction {
  Id component;
  Action action;
  std::string to_string() const;
  auto operator<=>(const FrontierAction&) const = default;
};

struct Transition {
  FrontierState next;
  Money reward;
};

// Component that would be produced a second time by `edge`, if any.
std::optional<Id> spawn_conflict(const FrontierState& frontier, const DisassemblyEdge& edge);

// Executes one action. Throws InadmissibleAction (with the admissibility
// reason when there is one) and ModelError for unknown ids.
Transition apply_action(const FrontierState& frontier, const FrontierAction& action, const Scenario& scenario,
                        const Observations& obs);

// Every admissible action at the frontier in tie-break order: commits
// before edges, then by action id, then by component id.
std::vector<FrontierAction> frontier_actions(const FrontierState& frontier, const Scenario& scenario,
                                             const Observations& obs);

class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PolicyChoice {
  Action action;
  double probability = 1.0;
  bool operator==(const PolicyChoice&) const = default;
};

// Component-level policy: what to do at each augmented state, either one
// action or a distribution over actions.
class Policy {
 public:
  void set(const StateSignature& state, Action action);
  // Throws PolicyError unless probabilities are positive and sum to 1
  // within 1e-9.
  void set_distribution(const StateSignature& state, std::vector<PolicyChoice> choices);

  const std::vector<PolicyChoice>* find(const StateSignature& state) const;
  bool deterministic() const;
  std::size_t size() const { return rules_.size(); }
  const std::map<StateSignature, std::vector<PolicyChoice>>& rules() const { return rules_; }
  bool operator==(const Policy&) const = default;

 private:
  std::map<StateSignature, std::vector<PolicyChoice>> rules_;
};

struct Step {
  FrontierAction action;
  StateSignature state;  // acting component's state before the action
  Money reward;
};

struct Solution {
  Outcome value;
  AccountingMode accounting = AccountingMode::Incremental;
  Policy policy;
  std::vector<Step> steps;
  std::vector<CommitRecord> routing;
  std::vector<Id> infeasible_components;
  std::size_t states_expanded = 0;
};

// Exact stop-versus-continue optimisation over the augmented graph,
// memoised on frontier signatures. Holds its own copy of the inputs; the
// memo persists across queries so repeated calls are cheap.
class Solver {
 public:
  // Throws ValidationError for an invalid scenario or observations.
  Solver(Scenario scenario, Observations obs);

  Outcome value(const FrontierState& frontier);
  std::optional<FrontierAction> best_action(const FrontierState& frontier);

  Solution solve();
  Solution solve_from(const FrontierState& frontier);

  struct MemoEntry {
    FrontierState frontier;
    Outcome value;
    std::optional<FrontierAction> best;
  };
  const std::unordered_map<std::string, MemoEntry>& memo() const { return memo_; }
  std::size_t states_expanded() const { return memo_.size(); }

  const Scenario& scenario() const { return scenario_; }
  const Observations& observations() const { return obs_; }

 private:
  const MemoEntry& lookup(const FrontierState& frontier);

  Scenario scenario_;
  Observations obs_;
  std::unordered_map<std::string, MemoEntry> memo_;
};

Solution solve(const Scenario& scenario, const Observations& obs);

// Exact expected total stage reward of `policy` from the initial frontier,
// computed by weighted traversal of every branch. At each frontier the live
// component with the smallest id whose policy choice is not solely a Null
// commit acts; Null-only components act last.
double evaluate_policy(const Scenario& scenario, const Observations& obs, const Policy& policy,
                       std::size_t max_steps = 10'000);

struct ActionReport {
  Action action;
  std::optional<ReasonCode> rejection;
  bool spawn_conflict = false;
  Money stage_reward;
  Outcome continuation;  // optimal value after the action
  Outcome branch;        // stage_reward + continuation
  Outcome projected;     // realized so far + branch
  bool best = false;

  bool admissible() const { return !rejection && !spawn_conflict; }
};

struct ComponentReport {
  AugmentedState state;
  std::optional<double> visible_health;
  std::vector<ActionReport> actions;  // admissible first, then rejected
};

struct Explanation {
  Outcome value;  // optimal projected run total
  Money realized;
  std::vector<ComponentReport> components;
  std::optional<FrontierAction> best;
};

Explanation explain(Solver& solver, const FrontierState& frontier);
Explanation explain(const Scenario& scenario, const Observations& obs, const FrontierState& frontier);

}  // namespace triage
