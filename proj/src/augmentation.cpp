#include "triage/augmentation.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace triage {

std::string StateSignature::to_string() const {
  std::string out = "(" + component + ", {";
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (i) out += ",";
    out += edges[i];
  }
  return out + "})";
}

StateSignature state_signature(const AugmentedState& state) {
  return {state.component, std::vector<Id>(state.trajectory.begin(), state.trajectory.end())};
}

std::vector<AugmentedState> initial_states(const Scenario& scenario) {
  std::vector<AugmentedState> out;
  out.reserve(scenario.roots.size());
  for (const auto& root : scenario.roots) {
    scenario.component(root);
    AugmentedState state{root, {}, {}};
    for (const auto& other : scenario.roots) {
      if (other != root) state.live_siblings.insert(other);
    }
    out.push_back(std::move(state));
  }
  return out;
}

EdgeSet child_trajectory(const Scenario& scenario, const AugmentedState& parent, const DisassemblyEdge& edge) {
  EdgeSet kept;
  EdgeSet dropped;
  for (const auto& id : parent.trajectory) {
    const auto& done = scenario.edge(id);
    bool sibling_extraction = done.applies_to == parent.component && !done.spawns.empty();
    (sibling_extraction ? dropped : kept).insert(id);
  }
  kept.insert(edge.id);
  bool changed = true;
  while (changed && !dropped.empty()) {
    changed = false;
    for (auto it = dropped.begin(); it != dropped.end();) {
      bool needed = std::any_of(kept.begin(), kept.end(),
                                [&](const Id& k) { return scenario.edge(k).prerequisites.contains(*it); });
      if (needed) {
        kept.insert(*it);
        it = dropped.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  return kept;
}

std::vector<Successor> successors(const AugmentedState& state, const Scenario& scenario) {
  scenario.component(state.component);
  std::vector<Successor> out;
  for (const auto* edge : scenario.edges_on(state.component)) {
    if (state.trajectory.contains(edge->id)) continue;
    if (!std::includes(state.trajectory.begin(), state.trajectory.end(), edge->prerequisites.begin(),
                       edge->prerequisites.end())) {
      continue;
    }
    EdgeSet extended = state.trajectory;
    extended.insert(edge->id);

    Successor succ{edge->id, {}};
    if (!edge->removes_source()) {
      succ.states.push_back({state.component, extended, state.live_siblings});
    }
    for (const auto& spawn : edge->spawns) {
      scenario.component(spawn);
      succ.states.push_back({spawn, child_trajectory(scenario, state, *edge), {}});
    }
    // Siblings after the step: the previous siblings plus the other products
    // of this edge.
    for (auto& produced : succ.states) {
      IdSet siblings = state.live_siblings;
      for (const auto& other : succ.states) {
        if (other.component != produced.component) siblings.insert(other.component);
      }
      produced.live_siblings = std::move(siblings);
    }
    out.push_back(std::move(succ));
  }
  return out;
}

Expansion expand(const Scenario& scenario, const ExpansionOptions& options) {
  std::map<StateSignature, AugmentedState> seen;
  std::set<AugmentedTransition> transitions;
  std::deque<AugmentedState> queue;

  auto visit = [&](const AugmentedState& state) {
    auto sig = state_signature(state);
    if (seen.contains(sig)) return;
    if (seen.size() >= options.cap) {
      throw ExpansionCapExceeded("augmented expansion exceeded " + std::to_string(options.cap) + " states");
    }
    // Siblings depend on the path taken; signatures do not.
    seen.emplace(std::move(sig), AugmentedState{state.component, state.trajectory, {}});
    queue.push_back(state);
  };

  for (const auto& root : initial_states(scenario)) visit(root);
  while (!queue.empty()) {
    AugmentedState state = std::move(queue.front());
    queue.pop_front();
    if (options.prune && options.prune(state)) continue;
    auto from = state_signature(state);
    for (const auto& succ : successors(state, scenario)) {
      for (const auto& next : succ.states) {
        transitions.insert({from, succ.edge, state_signature(next)});
        visit(next);
      }
    }
  }

  Expansion out;
  for (auto& [_, state] : seen) out.states.push_back(std::move(state));
  out.transitions.assign(transitions.begin(), transitions.end());
  return out;
}

}  // namespace triage
