#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "triage/model.hpp"

namespace triage {

// A node of the state-augmented graph: a physical component together with
// the set of edges executed on it or on its ancestors.
struct AugmentedState {
  Id component;
  EdgeSet trajectory;
  // Components live alongside this one. Not part of the signature.
  IdSet live_siblings;
  bool operator==(const AugmentedState&) const = default;
};

// Canonical identity of an augmented state: component plus sorted edge set.
// Equal signatures are interchangeable for valuation and admissibility.
struct StateSignature {
  Id component;
  std::vector<Id> edges;

  std::string to_string() const;  // "(v, {e0,e1})"
  auto operator<=>(const StateSignature&) const = default;
};

StateSignature state_signature(const AugmentedState& state);

// One state per root, each with an empty trajectory.
std::vector<AugmentedState> initial_states(const Scenario& scenario);

// Trajectory a component spawned by `edge` starts with: the parent's
// trajectory plus `edge`, minus earlier edges on the parent that extracted
// other components. Those stay only when a kept edge needs them as a
// prerequisite.
EdgeSet child_trajectory(const Scenario& scenario, const AugmentedState& parent, const DisassemblyEdge& edge);

struct Successor {
  Id edge;
  // The source under the extended trajectory (unless consumed) followed by
  // every spawned component with its child_trajectory.
  std::vector<AugmentedState> states;
};

// Structural successors only: edges on the state's component that are not
// yet executed and whose prerequisites are satisfied. Budgets, gates and
// health are left to admissibility. Throws ModelError on unknown ids.
std::vector<Successor> successors(const AugmentedState& state, const Scenario& scenario);

class ExpansionCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AugmentedTransition {
  StateSignature from;
  Id edge;
  StateSignature to;
  auto operator<=>(const AugmentedTransition&) const = default;
};

struct Expansion {
  std::vector<AugmentedState> states;  // sorted by signature
  std::vector<AugmentedTransition> transitions;  // sorted
};

struct ExpansionOptions {
  std::size_t cap = 1'000'000;
  // Dominance pruning hook; states for which this returns true are kept but
  // not expanded further. Off by default.
  std::function<bool(const AugmentedState&)> prune;
};

// Lazily explores every state reachable from the roots without committing,
// merging states with equal signatures.
Expansion expand(const Scenario& scenario, const ExpansionOptions& options = {});

}  // namespace triage
