#include "triage/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <tuple>
#include <sstream>

namespace triage {

Money Outcome::amount() const {
  if (!amount_) throw std::logic_error("amount() called on an infeasible outcome");
  return *amount_;
}

Outcome operator+(Money reward, const Outcome& rest) {
  return rest.feasible() ? Outcome::of(reward + rest.amount()) : Outcome::infeasible();
}

const AugmentedState* FrontierState::find(const Id& component) const {
  for (const auto& state : live) {
    if (state.component == component) return &state;
  }
  return nullptr;
}

namespace {

void append_ids(std::string& out, const std::set<Id>& ids) {
  bool first = true;
  for (const auto& id : ids) {
    if (!first) out += ',';
    out += id;
    first = false;
  }
}

void normalize(FrontierState& frontier) {
  std::sort(frontier.live.begin(), frontier.live.end(),
            [](const AugmentedState& a, const AugmentedState& b) { return a.component < b.component; });
  for (auto& state : frontier.live) {
    state.live_siblings.clear();
    for (const auto& other : frontier.live) {
      if (other.component != state.component) state.live_siblings.insert(other.component);
    }
  }
}

}  // namespace

std::string frontier_signature(const FrontierState& frontier) {
  std::string key;
  for (const auto& state : frontier.live) {
    key += state.component;
    key += '{';
    append_ids(key, state.trajectory);
    key += "};";
  }
  key += "|t=" + std::to_string(frontier.used.time.units());
  for (const auto& [resource, amount] : frontier.used.resources) {
    if (amount == Quantity{}) continue;
    key += ';' + resource + '=' + std::to_string(amount.units());
  }
  key += "|a=";
  append_ids(key, frontier.attributed);
  key += "|i=";
  append_ids(key, frontier.instantiated);
  key += "|u=";
  append_ids(key, frontier.unsettled);
  return key;
}

FrontierState initial_frontier(const Scenario& scenario) {
  FrontierState frontier;
  for (auto& state : initial_states(scenario)) {
    frontier.instantiated.insert(state.component);
    if (scenario.component(state.component).negligible) {
      frontier.committed.push_back({state.component, {}, "", {}});
    } else {
      frontier.live.push_back(std::move(state));
    }
  }
  normalize(frontier);
  return frontier;
}

void check_frontier(const Scenario& scenario, const FrontierState& frontier) {
  IdSet seen;
  for (const auto& state : frontier.live) {
    const auto* component = scenario.find_component(state.component);
    if (!component) throw ModelError("frontier names unknown component '" + state.component + "'");
    if (component->negligible) throw ModelError("negligible component '" + state.component + "' cannot be live");
    if (!seen.insert(state.component).second) {
      throw ModelError("component '" + state.component + "' is live more than once");
    }
    if (!frontier.instantiated.contains(state.component)) {
      throw ModelError("live component '" + state.component + "' was never instantiated");
    }
    for (const auto& id : state.trajectory) {
      const auto* edge = scenario.find_edge(id);
      if (!edge) throw ModelError("trajectory names unknown edge '" + id + "'");
      for (const auto& pre : edge->prerequisites) {
        if (!state.trajectory.contains(pre)) {
          throw ModelError("unreachable state " + state_signature(state).to_string() + ": '" + id + "' requires '" +
                           pre + "'");
        }
      }
    }
  }
}

std::string FrontierAction::to_string() const { return component + ": " + action.to_string(); }

std::optional<Id> spawn_conflict(const FrontierState& frontier, const DisassemblyEdge& edge) {
  for (const auto& spawn : edge.spawns) {
    if (frontier.instantiated.contains(spawn)) return spawn;
  }
  return std::nullopt;
}

Transition apply_action(const FrontierState& frontier, const FrontierAction& act, const Scenario& scenario,
                        const Observations& obs) {
  const auto* state = frontier.find(act.component);
  if (!state) throw ModelError("component '" + act.component + "' is not live");
  const AccountingMode mode = scenario.accounting;

  Transition t{frontier, {}};
  auto& next = t.next;
  auto erase_source = [&] {
    std::erase_if(next.live, [&](const AugmentedState& s) { return s.component == act.component; });
  };

  if (act.action.is_edge()) {
    const auto& edge = scenario.edge(act.action.id);
    if (edge.applies_to != act.component) {
      throw InadmissibleAction("edge '" + edge.id + "' does not apply to '" + act.component + "'", std::nullopt);
    }
    if (state->trajectory.contains(edge.id)) {
      throw InadmissibleAction("edge '" + edge.id + "' was already executed", std::nullopt);
    }
    if (auto reason = edge_rejection(*state, edge, scenario, frontier.used)) {
      throw InadmissibleAction("edge '" + edge.id + "' rejected: " + std::string(to_string(*reason)), reason);
    }
    if (auto clash = spawn_conflict(frontier, edge)) {
      throw InadmissibleAction("edge '" + edge.id + "' would produce '" + *clash + "' a second time", std::nullopt);
    }
    t.reward = mode == AccountingMode::Incremental ? -edge.cost : Money{};
    EdgeSet extended = state->trajectory;
    extended.insert(edge.id);
    next.used.add(edge);
    erase_source();
    if (!edge.removes_source()) next.live.push_back({act.component, extended, {}});
    const EdgeSet inherited = edge.spawns.empty() ? EdgeSet{} : child_trajectory(scenario, *state, edge);
    for (const auto& spawn : edge.spawns) {
      next.instantiated.insert(spawn);
      if (scenario.component(spawn).negligible) {
        next.committed.push_back({spawn, inherited, "", {}});
        if (mode == AccountingMode::PathAttribution) next.unsettled.insert(inherited.begin(), inherited.end());
      } else {
        next.live.push_back({spawn, inherited, {}});
      }
    }
  } else {
    const auto& option = scenario.option(act.action.id);
    const auto& ids = scenario.component(act.component).option_ids;
    if (std::find(ids.begin(), ids.end(), option.id) == ids.end()) {
      throw InadmissibleAction("option '" + option.id + "' is not available for '" + act.component + "'",
                               std::nullopt);
    }
    if (auto reason = option_rejection(*state, option, scenario, obs)) {
      throw InadmissibleAction("option '" + option.id + "' rejected: " + std::string(to_string(*reason)), reason);
    }
    auto breakdown = option_utility(*state, option, obs, scenario, mode, frontier.attributed);
    t.reward = breakdown.utility;
    if (mode == AccountingMode::PathAttribution) {
      next.attributed.insert(state->trajectory.begin(), state->trajectory.end());
    }
    next.committed.push_back({act.component, state->trajectory, option.id, breakdown});
    erase_source();
  }
  if (next.live.empty() && !next.unsettled.empty()) {
    for (const auto& id : next.unsettled) {
      if (!next.attributed.contains(id)) t.reward -= scenario.edge(id).cost;
    }
    next.attributed.insert(next.unsettled.begin(), next.unsettled.end());
    next.unsettled.clear();
  }
  next.realized += t.reward;
  normalize(next);
  return t;
}

namespace {

// Commits sort before edges, then by action id, then by component id.
auto tie_key(const FrontierAction& a) {
  return std::make_tuple(a.action.kind == ActionKind::Commit ? 0 : 1, std::cref(a.action.id), std::cref(a.component));
}

// Admissible actions grouped per live component, unsorted.
std::vector<std::vector<FrontierAction>> actions_by_component(const FrontierState& frontier,
                                                              const Scenario& scenario, const Observations& obs) {
  std::vector<std::vector<FrontierAction>> out;
  for (const auto& state : frontier.live) {
    auto set = admissible_actions(state, scenario, obs, frontier.used);
    auto& group = out.emplace_back();
    for (const auto& id : set.commits) group.push_back({state.component, Action::commit(id)});
    for (const auto& id : set.edges) {
      if (!spawn_conflict(frontier, scenario.edge(id))) group.push_back({state.component, Action::edge(id)});
    }
  }
  return out;
}

}  // namespace

std::vector<FrontierAction> frontier_actions(const FrontierState& frontier, const Scenario& scenario,
                                             const Observations& obs) {
  std::vector<FrontierAction> out;
  for (auto& group : actions_by_component(frontier, scenario, obs)) {
    out.insert(out.end(), group.begin(), group.end());
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return tie_key(a) < tie_key(b); });
  return out;
}

void Policy::set(const StateSignature& state, Action action) { rules_[state] = {PolicyChoice{std::move(action), 1.0}}; }

void Policy::set_distribution(const StateSignature& state, std::vector<PolicyChoice> choices) {
  if (choices.empty()) throw PolicyError("empty distribution at " + state.to_string());
  double total = 0.0;
  for (const auto& c : choices) {
    if (!(c.probability > 0.0)) throw PolicyError("non-positive probability at " + state.to_string());
    total += c.probability;
  }
  if (std::abs(total - 1.0) > 1e-9) throw PolicyError("probabilities at " + state.to_string() + " do not sum to 1");
  rules_[state] = std::move(choices);
}

const std::vector<PolicyChoice>* Policy::find(const StateSignature& state) const {
  auto it = rules_.find(state);
  return it == rules_.end() ? nullptr : &it->second;
}

bool Policy::deterministic() const {
  return std::all_of(rules_.begin(), rules_.end(), [](const auto& kv) { return kv.second.size() == 1; });
}

Solver::Solver(Scenario scenario, Observations obs) : scenario_(std::move(scenario)), obs_(std::move(obs)) {
  require_valid(scenario_, &obs_);
}

const Solver::MemoEntry& Solver::lookup(const FrontierState& frontier) {
  auto key = frontier_signature(frontier);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;

  MemoEntry entry;
  entry.frontier.live = frontier.live;
  entry.frontier.used = frontier.used;
  entry.frontier.attributed = frontier.attributed;
  entry.frontier.unsettled = frontier.unsettled;
  entry.frontier.instantiated = frontier.instantiated;

  if (frontier.live.empty()) {
    entry.value = Outcome::of(Money{});
  } else {
    auto groups = actions_by_component(frontier, scenario_, obs_);
    // A component with nothing admissible now never regains an action: its
    // trajectory only changes through its own actions and budgets only grow.
    bool stuck = std::any_of(groups.begin(), groups.end(), [](const auto& g) { return g.empty(); });
    if (!stuck) {
      std::vector<FrontierAction> candidates;
      for (auto& g : groups) candidates.insert(candidates.end(), g.begin(), g.end());
      std::sort(candidates.begin(), candidates.end(),
                [](const auto& a, const auto& b) { return tie_key(a) < tie_key(b); });
      for (const auto& candidate : candidates) {
        auto t = apply_action(frontier, candidate, scenario_, obs_);
        Outcome total = t.reward + lookup(t.next).value;
        if (total > entry.value) {
          entry.value = total;
          entry.best = candidate;
        }
      }
    }
  }
  return memo_.emplace(std::move(key), std::move(entry)).first->second;
}

Outcome Solver::value(const FrontierState& frontier) { return lookup(frontier).value; }

std::optional<FrontierAction> Solver::best_action(const FrontierState& frontier) { return lookup(frontier).best; }

Solution Solver::solve() { return solve_from(initial_frontier(scenario_)); }

Solution Solver::solve_from(const FrontierState& start) {
  check_frontier(scenario_, start);
  Solution sol;
  sol.accounting = scenario_.accounting;
  sol.value = value(start);

  if (sol.value.feasible()) {
    FrontierState current = start;
    while (!current.complete()) {
      auto best = lookup(current).best;
      if (!best) throw std::logic_error("feasible frontier without a best action");
      auto sig = state_signature(*current.find(best->component));
      auto t = apply_action(current, *best, scenario_, obs_);
      sol.policy.set(sig, best->action);
      sol.steps.push_back({*best, std::move(sig), t.reward});
      current = std::move(t.next);
    }
    sol.routing.assign(current.committed.begin() + static_cast<std::ptrdiff_t>(start.committed.size()),
                       current.committed.end());
  } else {
    for (const auto& state : start.live) {
      FrontierState alone = start;
      alone.live = {state};
      normalize(alone);
      if (!value(alone).feasible()) sol.infeasible_components.push_back(state.component);
    }
    if (sol.infeasible_components.empty()) {
      for (const auto& state : start.live) sol.infeasible_components.push_back(state.component);
    }
  }
  sol.states_expanded = memo_.size();
  return sol;
}

Solution solve(const Scenario& scenario, const Observations& obs) { return Solver(scenario, obs).solve(); }

double evaluate_policy(const Scenario& scenario, const Observations& obs, const Policy& policy,
                       std::size_t max_steps) {
  require_valid(scenario, &obs);

  auto null_only = [&](const std::vector<PolicyChoice>& choices) {
    return std::all_of(choices.begin(), choices.end(), [&](const PolicyChoice& c) {
      if (c.action.is_edge()) return false;
      const auto* option = scenario.find_option(c.action.id);
      return option && option->kind == OptionKind::Null;
    });
  };

  std::function<double(const FrontierState&, std::size_t)> expected = [&](const FrontierState& frontier,
                                                                          std::size_t depth) -> double {
    if (frontier.complete()) return 0.0;
    if (depth >= max_steps) throw PolicyError("policy exceeded the step bound of " + std::to_string(max_steps));

    const AugmentedState* actor = nullptr;
    const std::vector<PolicyChoice>* choices = nullptr;
    for (const auto& state : frontier.live) {
      const auto* rule = policy.find(state_signature(state));
      if (!rule) throw PolicyError("policy undefined at " + state_signature(state).to_string());
      if (!actor || (null_only(*choices) && !null_only(*rule))) {
        actor = &state;
        choices = rule;
      }
    }

    double total = 0.0;
    for (const auto& choice : *choices) {
      Transition t;
      try {
        t = apply_action(frontier, {actor->component, choice.action}, scenario, obs);
      } catch (const InadmissibleAction& e) {
        throw PolicyError("policy picks an inadmissible action at " + state_signature(*actor).to_string() + ": " +
                          e.what());
      }
      total += choice.probability * (t.reward.to_double() + expected(t.next, depth + 1));
    }
    return total;
  };

  return expected(initial_frontier(scenario), 0);
}

Explanation explain(Solver& solver, const FrontierState& frontier) {
  const auto& scenario = solver.scenario();
  const auto& obs = solver.observations();
  check_frontier(scenario, frontier);

  Explanation ex;
  ex.realized = frontier.realized;
  ex.value = frontier.realized + solver.value(frontier);
  ex.best = solver.best_action(frontier);

  auto report_for = [&](const AugmentedState& state, const Action& action) {
    ActionReport r;
    r.action = action;
    auto t = apply_action(frontier, {state.component, action}, scenario, obs);
    r.stage_reward = t.reward;
    r.continuation = solver.value(t.next);
    r.branch = t.reward + r.continuation;
    r.projected = frontier.realized + r.branch;
    r.best = ex.best && ex.best->component == state.component && ex.best->action == action;
    return r;
  };

  for (const auto& state : frontier.live) {
    ComponentReport cr;
    cr.state = state;
    cr.visible_health = visible_health(scenario, obs, state);
    auto set = admissible_actions(state, scenario, obs, frontier.used);
    for (const auto& id : set.commits) cr.actions.push_back(report_for(state, Action::commit(id)));
    std::vector<ActionReport> blocked;
    for (const auto& id : set.edges) {
      if (spawn_conflict(frontier, scenario.edge(id))) {
        ActionReport r;
        r.action = Action::edge(id);
        r.spawn_conflict = true;
        blocked.push_back(std::move(r));
      } else {
        cr.actions.push_back(report_for(state, Action::edge(id)));
      }
    }
    cr.actions.insert(cr.actions.end(), blocked.begin(), blocked.end());
    for (const auto& rejection : set.rejections) {
      ActionReport r;
      r.action = rejection.action;
      r.rejection = rejection.reason;
      cr.actions.push_back(std::move(r));
    }
    ex.components.push_back(std::move(cr));
  }
  return ex;
}

Explanation explain(const Scenario& scenario, const Observations& obs, const FrontierState& frontier) {
  Solver solver(scenario, obs);
  return explain(solver, frontier);
}

}  // namespace triage
