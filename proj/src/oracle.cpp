#include "triage/oracle.hpp"

#include <algorithm>

#include "triage/valuation.hpp"

namespace triage {

namespace {

struct Event {
  bool is_edge = false;
  Id component;
  EdgeSet trajectory;  // before the event
  Id id;
};

struct Pending {
  Id component;
  EdgeSet trajectory;
};

// Trajectories of negligible components: they never act, but under path
// attribution the edges they alone hold still have to be paid for.
using Shells = std::vector<EdgeSet>;

struct Best {
  Money total;
  std::vector<Event> events;
  Shells shells;
};

class Enumerator {
 public:
  Enumerator(const Scenario& scenario, const Observations& obs, std::size_t cap)
      : s_(scenario), obs_(obs), cap_(cap) {}

  // Returns the best routing's events, or nullopt if none exists.
  std::optional<Best> run(const std::vector<Id>& roots) {
    pending_.clear();
    events_.clear();
    shells_.clear();
    instantiated_.clear();
    time_ = Quantity{};
    resources_.clear();
    best_.reset();
    for (const auto& root : s_.roots) instantiated_.insert(root);
    for (auto it = roots.rbegin(); it != roots.rend(); ++it) {
      if (!s_.component(*it).negligible) pending_.push_back({*it, {}});
    }
    descend();
    return best_;
  }

  std::size_t nodes() const { return nodes_; }

 private:
  bool commit_allowed(const Component& c, const CEOption& o, const EdgeSet& tau) const {
    for (const auto& need : o.gate_requires) {
      if (!tau.contains(need)) return false;
    }
    for (const auto& banned : o.gate_forbids) {
      if (tau.contains(banned)) return false;
    }
    if (c.safety_score > o.safety_max) return false;
    if (o.min_health || std::holds_alternative<HealthScaledRevenue>(o.revenue)) {
      auto health = visible_health(s_, obs_, AugmentedState{c.id, tau, {}});
      if (!health) return false;
      if (o.min_health && *health < *o.min_health) return false;
    }
    return true;
  }

  bool fits(const DisassemblyEdge& e) const {
    if (s_.budgets.time_max && time_ + e.time > *s_.budgets.time_max) return false;
    for (const auto& [resource, amount] : e.resources) {
      auto cap = s_.budgets.resource_caps.find(resource);
      if (cap == s_.budgets.resource_caps.end()) continue;
      auto spent = resources_.find(resource);
      Quantity before = spent == resources_.end() ? Quantity{} : spent->second;
      if (before + amount > cap->second) return false;
    }
    return true;
  }

  // A spawned child does not carry the edges that extracted its siblings,
  // unless one of its inherited edges depends on them.
  EdgeSet inherit(const Pending& parent, const DisassemblyEdge& e) const {
    EdgeSet out{e.id};
    std::vector<Id> work(e.prerequisites.begin(), e.prerequisites.end());
    for (const auto& id : parent.trajectory) {
      const auto& done = s_.edge(id);
      if (done.applies_to != parent.component || done.spawns.empty()) work.push_back(id);
    }
    while (!work.empty()) {
      Id id = work.back();
      work.pop_back();
      if (!out.insert(id).second) continue;
      for (const auto& pre : s_.edge(id).prerequisites) work.push_back(pre);
    }
    return out;
  }

  void descend() {
    if (++nodes_ > cap_) {
      throw OracleCapExceeded("oracle enumeration exceeded " + std::to_string(cap_) + " nodes");
    }
    if (pending_.empty()) {
      leaf();
      return;
    }
    Pending current = std::move(pending_.back());
    pending_.pop_back();
    const auto& component = s_.component(current.component);

    std::vector<Id> options = component.option_ids;
    std::sort(options.begin(), options.end());
    options.erase(std::unique(options.begin(), options.end()), options.end());
    for (const auto& id : options) {
      if (!commit_allowed(component, s_.option(id), current.trajectory)) continue;
      events_.push_back({false, current.component, current.trajectory, id});
      descend();
      events_.pop_back();
    }

    std::vector<const DisassemblyEdge*> edges;
    for (const auto& e : s_.edges) {
      if (e.applies_to == current.component) edges.push_back(&e);
    }
    std::sort(edges.begin(), edges.end(), [](const auto* a, const auto* b) { return a->id < b->id; });

    for (const auto* e : edges) {
      if (current.trajectory.contains(e->id)) continue;
      bool ready = std::all_of(e->prerequisites.begin(), e->prerequisites.end(),
                               [&](const Id& p) { return current.trajectory.contains(p); });
      if (!ready || !fits(*e)) continue;
      bool clash = std::any_of(e->spawns.begin(), e->spawns.end(),
                               [&](const Id& c) { return instantiated_.contains(c); });
      if (clash) continue;

      const auto saved_pending = pending_.size();
      const auto saved_shells = shells_.size();
      const auto saved_time = time_;
      const auto saved_resources = resources_;
      const auto saved_instantiated = instantiated_;

      EdgeSet extended = current.trajectory;
      extended.insert(e->id);
      time_ += e->time;
      for (const auto& [resource, amount] : e->resources) resources_[resource] += amount;
      const EdgeSet inherited = inherit(current, *e);
      for (auto it = e->spawns.rbegin(); it != e->spawns.rend(); ++it) {
        instantiated_.insert(*it);
        if (s_.component(*it).negligible) {
          shells_.push_back(inherited);
        } else {
          pending_.push_back({*it, inherited});
        }
      }
      // The source keeps acting until it commits or is consumed.
      bool consumed = e->consumes_source && !e->spawns.empty();
      if (!consumed) pending_.push_back({current.component, extended});

      events_.push_back({true, current.component, current.trajectory, e->id});
      descend();
      events_.pop_back();

      pending_.resize(saved_pending);
      shells_.resize(saved_shells);
      time_ = saved_time;
      resources_ = saved_resources;
      instantiated_ = saved_instantiated;
    }

    pending_.push_back(std::move(current));
  }

  void leaf() {
    Money total = total_of(s_, obs_, events_, shells_);
    if (!best_ || total > best_->total) best_ = Best{total, events_, shells_};
  }

 public:
  static Money revenue_of(const Scenario& s, const Observations& obs, const Event& ev) {
    const auto& option = s.option(ev.id);
    return option_revenue(option, visible_health(s, obs, AugmentedState{ev.component, ev.trajectory, {}}));
  }

  static Money cost_of(const Scenario& s, const EdgeSet& edges) {
    Money total;
    for (const auto& id : edges) total += s.edge(id).cost;
    return total;
  }

  static Money unsettled_cost(const Scenario& s, const Shells& shells, const EdgeSet& attributed) {
    EdgeSet unpaid;
    for (const auto& shell : shells) {
      for (const auto& id : shell) {
        if (!attributed.contains(id)) unpaid.insert(id);
      }
    }
    return cost_of(s, unpaid);
  }

  static bool is_null(const Scenario& s, const Event& ev) {
    return !ev.is_edge && s.option(ev.id).kind == OptionKind::Null;
  }

  static Money total_of(const Scenario& s, const Observations& obs, const std::vector<Event>& events,
                        const Shells& shells) {
    Money total;
    if (s.accounting == AccountingMode::Incremental) {
      for (const auto& ev : events) {
        if (ev.is_edge) {
          total -= s.edge(ev.id).cost;
        } else if (!is_null(s, ev)) {
          total += revenue_of(s, obs, ev) - s.option(ev.id).proc_cost;
        }
      }
      return total;
    }
    EdgeSet attributed;
    for (const auto& ev : events) {
      if (ev.is_edge || is_null(s, ev)) continue;
      total += revenue_of(s, obs, ev) - cost_of(s, ev.trajectory) - s.option(ev.id).proc_cost;
      attributed.insert(ev.trajectory.begin(), ev.trajectory.end());
    }
    for (const auto& ev : events) {
      if (!is_null(s, ev)) continue;
      EdgeSet unpaid;
      for (const auto& id : ev.trajectory) {
        if (!attributed.contains(id)) unpaid.insert(id);
      }
      total -= cost_of(s, unpaid);
      attributed.insert(ev.trajectory.begin(), ev.trajectory.end());
    }
    return total - unsettled_cost(s, shells, attributed);
  }

 private:
  const Scenario& s_;
  const Observations& obs_;
  std::size_t cap_;
  std::size_t nodes_ = 0;

  std::vector<Pending> pending_;
  std::vector<Event> events_;
  IdSet instantiated_;
  Quantity time_;
  std::map<std::string, Quantity> resources_;
  Shells shells_;
  std::optional<Best> best_;
};

}  // namespace

Solution brute_force_oracle(const Scenario& scenario, const Observations& obs, const OracleOptions& options) {
  require_valid(scenario, &obs);
  Enumerator enumerator(scenario, obs, options.cap);
  auto best = enumerator.run(scenario.roots);

  Solution sol;
  sol.accounting = scenario.accounting;

  if (!best) {
    sol.value = Outcome::infeasible();
    for (const auto& root : scenario.roots) {
      if (scenario.component(root).negligible) continue;
      Enumerator single(scenario, obs, options.cap);
      if (!single.run({root})) sol.infeasible_components.push_back(root);
    }
    if (sol.infeasible_components.empty()) {
      for (const auto& root : scenario.roots) {
        if (!scenario.component(root).negligible) sol.infeasible_components.push_back(root);
      }
    }
    sol.states_expanded = enumerator.nodes();
    return sol;
  }

  sol.value = Outcome::of(best->total);
  auto& events = best->events;
  // Null commits go last so that they only pay for what nobody else did.
  std::stable_partition(events.begin(), events.end(),
                        [&](const Event& ev) { return !Enumerator::is_null(scenario, ev); });

  const bool incremental = scenario.accounting == AccountingMode::Incremental;
  EdgeSet attributed;
  for (const auto& ev : events) {
    StateSignature sig{ev.component, std::vector<Id>(ev.trajectory.begin(), ev.trajectory.end())};
    Money reward;
    if (ev.is_edge) {
      reward = incremental ? -scenario.edge(ev.id).cost : Money{};
      sol.policy.set(sig, Action::edge(ev.id));
      sol.steps.push_back({{ev.component, Action::edge(ev.id)}, sig, reward});
      continue;
    }
    const auto& option = scenario.option(ev.id);
    UtilityBreakdown b;
    b.revenue = Enumerator::revenue_of(scenario, obs, ev);
    b.proc_cost = option.proc_cost;
    if (!incremental) {
      EdgeSet charged;
      for (const auto& id : ev.trajectory) {
        if (option.kind != OptionKind::Null || !attributed.contains(id)) charged.insert(id);
      }
      b.path_cost = Enumerator::cost_of(scenario, charged);
      attributed.insert(ev.trajectory.begin(), ev.trajectory.end());
    }
    b.utility = b.revenue - b.path_cost - b.proc_cost;
    reward = b.utility;
    sol.policy.set(sig, Action::commit(ev.id));
    sol.steps.push_back({{ev.component, Action::commit(ev.id)}, sig, reward});
    sol.routing.push_back({ev.component, ev.trajectory, ev.id, b});
  }
  if (!incremental && !sol.steps.empty()) {
    sol.steps.back().reward -= Enumerator::unsettled_cost(scenario, best->shells, attributed);
  }
  sol.states_expanded = enumerator.nodes();
  return sol;
}

}  // namespace triage
