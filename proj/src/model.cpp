#include "triage/model.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <tuple>

namespace triage {

namespace {

template <class T>
const T* find_by_id(const std::vector<T>& items, std::string_view id) {
  for (const auto& item : items) {
    if (item.id == id) return &item;
  }
  return nullptr;
}

using Graph = std::map<Id, IdSet>;

// Strongly connected components that contain a cycle (size > 1 or a
// self-loop). Each group is sorted; groups come out in id order.
std::vector<std::vector<Id>> cyclic_groups(const Graph& graph) {
  std::map<Id, int> index;
  std::map<Id, int> low;
  std::set<Id> on_stack;
  std::vector<Id> stack;
  std::vector<std::vector<Id>> groups;
  int counter = 0;

  std::function<void(const Id&)> visit = [&](const Id& node) {
    index[node] = low[node] = counter++;
    stack.push_back(node);
    on_stack.insert(node);
    auto it = graph.find(node);
    if (it != graph.end()) {
      for (const auto& next : it->second) {
        if (!index.contains(next)) {
          visit(next);
          low[node] = std::min(low[node], low[next]);
        } else if (on_stack.contains(next)) {
          low[node] = std::min(low[node], index[next]);
        }
      }
    }
    if (low[node] == index[node]) {
      std::vector<Id> group;
      Id member;
      do {
        member = stack.back();
        stack.pop_back();
        on_stack.erase(member);
        group.push_back(member);
      } while (member != node);
      bool self_loop = it != graph.end() && it->second.contains(node);
      if (group.size() > 1 || self_loop) {
        std::sort(group.begin(), group.end());
        groups.push_back(std::move(group));
      }
    }
  };

  for (const auto& [node, _] : graph) {
    if (!index.contains(node)) visit(node);
  }
  std::sort(groups.begin(), groups.end());
  return groups;
}

std::string join(const std::vector<Id>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

class Collector {
 public:
  void add(std::string code, Id subject, std::string message) {
    report_.push_back({std::move(code), std::move(subject), std::move(message)});
  }
  ValidationReport finish() {
    std::sort(report_.begin(), report_.end(), [](const Violation& a, const Violation& b) {
      return std::tie(a.subject, a.code, a.message) < std::tie(b.subject, b.code, b.message);
    });
    report_.erase(std::unique(report_.begin(), report_.end()), report_.end());
    return std::move(report_);
  }

 private:
  ValidationReport report_;
};

template <class T>
void check_duplicates(const std::vector<T>& items, std::string_view what, Collector& out) {
  std::map<Id, int> seen;
  for (const auto& item : items) ++seen[item.id];
  for (const auto& [id, count] : seen) {
    if (count > 1) {
      out.add("duplicate-id", id, std::string(what) + " id '" + id + "' appears " + std::to_string(count) + " times");
    }
  }
}

void check_edge_refs(const Scenario& s, const Id& subject, const IdSet& refs, std::string_view field, Collector& out) {
  for (const auto& ref : refs) {
    if (!s.find_edge(ref)) {
      out.add("unknown-reference", subject, std::string(field) + " names unknown edge '" + ref + "'");
    }
  }
}

}  // namespace

const Component* Scenario::find_component(std::string_view id) const { return find_by_id(components, id); }
const DisassemblyEdge* Scenario::find_edge(std::string_view id) const { return find_by_id(edges, id); }
const CEOption* Scenario::find_option(std::string_view id) const { return find_by_id(options, id); }

const Component& Scenario::component(std::string_view id) const {
  if (const auto* c = find_component(id)) return *c;
  throw ModelError("unknown component '" + std::string(id) + "'");
}
const DisassemblyEdge& Scenario::edge(std::string_view id) const {
  if (const auto* e = find_edge(id)) return *e;
  throw ModelError("unknown edge '" + std::string(id) + "'");
}
const CEOption& Scenario::option(std::string_view id) const {
  if (const auto* o = find_option(id)) return *o;
  throw ModelError("unknown option '" + std::string(id) + "'");
}

std::vector<const DisassemblyEdge*> Scenario::edges_on(std::string_view component) const {
  std::vector<const DisassemblyEdge*> out;
  for (const auto& e : edges) {
    if (e.applies_to == component) out.push_back(&e);
  }
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  return out;
}

std::string Action::to_string() const { return (is_edge() ? "edge " : "commit ") + id; }

ValidationError::ValidationError(ValidationReport report)
    : std::runtime_error([&] {
        std::ostringstream msg;
        msg << "scenario failed validation (" << report.size() << " violation" << (report.size() == 1 ? "" : "s")
            << ")";
        for (const auto& v : report) msg << "\n  [" << v.code << "] " << v.subject << ": " << v.message;
        return msg.str();
      }()),
      report_(std::move(report)) {}

ValidationReport validate_scenario(const Scenario& s) {
  Collector out;

  if (s.roots.empty()) out.add("no-roots", "", "scenario has no root components");
  check_duplicates(s.components, "component", out);
  check_duplicates(s.edges, "edge", out);
  check_duplicates(s.options, "option", out);

  std::map<Id, int> root_seen;
  for (const auto& root : s.roots) {
    if (++root_seen[root] == 2) out.add("duplicate-id", root, "root '" + root + "' listed more than once");
    if (!s.find_component(root)) out.add("unknown-reference", root, "root names unknown component");
  }

  for (const auto& c : s.components) {
    for (const auto& opt : c.option_ids) {
      if (!s.find_option(opt)) out.add("unknown-reference", c.id, "option_ids names unknown option '" + opt + "'");
    }
    if (!(c.safety_score >= 0.0)) out.add("negative-value", c.id, "safety_score must be >= 0");
    check_edge_refs(s, c.id, c.health_reveal_edges, "health_reveal_edges", out);
    if (c.aggregator) {
      const auto& agg = *c.aggregator;
      if (agg.children.empty()) out.add("aggregator-weights", c.id, "aggregator has no children");
      double weight_sum = 0.0;
      for (const auto& child : agg.children) {
        if (!s.find_component(child.component)) {
          out.add("unknown-reference", c.id, "aggregator names unknown component '" + child.component + "'");
        }
        if (!(child.weight >= 0.0)) out.add("negative-value", c.id, "aggregator weight must be >= 0");
        weight_sum += child.weight;
      }
      if (agg.kind == AggregatorKind::Mean && !agg.children.empty() && !(weight_sum > 0.0)) {
        out.add("aggregator-weights", c.id, "mean aggregator weights are all zero");
      }
    }
  }

  for (const auto& e : s.edges) {
    if (!s.find_component(e.applies_to)) {
      out.add("unknown-reference", e.id, "applies_to names unknown component '" + e.applies_to + "'");
    }
    check_edge_refs(s, e.id, e.prerequisites, "requires", out);
    if (e.time < Quantity{}) out.add("negative-value", e.id, "time must be >= 0");
    if (e.cost < Money{}) out.add("negative-value", e.id, "cost must be >= 0");
    for (const auto& [resource, amount] : e.resources) {
      if (amount < Quantity{}) out.add("negative-value", e.id, "resource '" + resource + "' amount must be >= 0");
    }
    for (const auto& spawn : e.spawns) {
      if (!s.find_component(spawn)) out.add("unknown-reference", e.id, "spawns unknown component '" + spawn + "'");
      if (spawn == e.applies_to) out.add("self-spawn", e.id, "edge spawns its own source component");
    }
  }

  for (const auto& o : s.options) {
    check_edge_refs(s, o.id, o.gate_requires, "gate_requires", out);
    check_edge_refs(s, o.id, o.gate_forbids, "gate_forbids", out);
    if (o.proc_cost < Money{}) out.add("negative-value", o.id, "proc_cost must be >= 0");
    if (o.min_health && !(*o.min_health >= 0.0 && *o.min_health <= 1.0)) {
      out.add("range", o.id, "min_health must lie in [0,1]");
    }
    if (const auto* scaled = std::get_if<HealthScaledRevenue>(&o.revenue)) {
      if (!(scaled->rvr_lo < scaled->rvr_hi)) out.add("rvr-bounds", o.id, "rvr_lo must be below rvr_hi");
    }
    if (o.kind == OptionKind::Null) {
      const auto* fixed = std::get_if<FixedRevenue>(&o.revenue);
      if (!fixed || fixed->amount != Money{} || o.proc_cost != Money{}) {
        out.add("null-economics", o.id, "null option must have fixed revenue 0 and proc_cost 0");
      }
    }
  }

  if (s.budgets.time_max && *s.budgets.time_max < Quantity{}) {
    out.add("negative-value", "time_max", "time budget must be >= 0");
  }
  for (const auto& [resource, cap] : s.budgets.resource_caps) {
    if (cap < Quantity{}) out.add("negative-value", resource, "resource cap must be >= 0");
  }

  // Precedence among edges must be a partial order.
  Graph precedence;
  for (const auto& e : s.edges) {
    auto& succ = precedence[e.id];
    for (const auto& req : e.prerequisites) {
      if (s.find_edge(req)) succ.insert(req);
    }
  }
  for (const auto& group : cyclic_groups(precedence)) {
    out.add("cyclic-precedence", group.front(), "precedence cycle through edges {" + join(group) + "}");
  }

  // Component graph: spawning plus cross-component precedence.
  Graph components;
  for (const auto& c : s.components) components[c.id];
  for (const auto& e : s.edges) {
    if (!s.find_component(e.applies_to)) continue;
    for (const auto& spawn : e.spawns) {
      if (s.find_component(spawn) && spawn != e.applies_to) components[e.applies_to].insert(spawn);
    }
    for (const auto& req : e.prerequisites) {
      const auto* pre = s.find_edge(req);
      if (pre && pre->applies_to != e.applies_to && s.find_component(pre->applies_to)) {
        components[pre->applies_to].insert(e.applies_to);
      }
    }
  }
  for (const auto& group : cyclic_groups(components)) {
    out.add("cyclic-graph", group.front(), "component graph cycle through {" + join(group) + "}");
  }

  Graph aggregation;
  for (const auto& c : s.components) {
    auto& deps = aggregation[c.id];
    if (!c.aggregator) continue;
    for (const auto& child : c.aggregator->children) {
      if (s.find_component(child.component)) deps.insert(child.component);
    }
  }
  for (const auto& group : cyclic_groups(aggregation)) {
    out.add("aggregator-cycle", group.front(), "health aggregation cycle through {" + join(group) + "}");
  }

  return out.finish();
}

ValidationReport validate_observations(const Scenario& s, const Observations& obs) {
  Collector out;
  for (const auto& [id, health] : obs.health) {
    if (!s.find_component(id)) out.add("unknown-reference", id, "observation for unknown component");
    if (!(health >= 0.0 && health <= 1.0)) out.add("range", id, "health must lie in [0,1]");
  }
  return out.finish();
}

void require_valid(const Scenario& scenario, const Observations* obs) {
  auto report = validate_scenario(scenario);
  if (obs) {
    auto more = validate_observations(scenario, *obs);
    report.insert(report.end(), more.begin(), more.end());
  }
  if (!report.empty()) throw ValidationError(std::move(report));
}

std::string_view to_string(OptionKind kind) {
  switch (kind) {
    case OptionKind::Reuse: return "reuse";
    case OptionKind::Repurpose: return "repurpose";
    case OptionKind::Recycle: return "recycle";
    case OptionKind::Disposal: return "disposal";
    case OptionKind::Null: return "null";
  }
  return "?";
}

std::optional<OptionKind> parse_option_kind(std::string_view text) {
  for (auto kind : {OptionKind::Reuse, OptionKind::Repurpose, OptionKind::Recycle, OptionKind::Disposal,
                    OptionKind::Null}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

std::string_view to_string(AccountingMode mode) {
  return mode == AccountingMode::Incremental ? "incremental" : "path";
}

std::optional<AccountingMode> parse_accounting_mode(std::string_view text) {
  if (text == "incremental") return AccountingMode::Incremental;
  if (text == "path" || text == "path-attribution") return AccountingMode::PathAttribution;
  return std::nullopt;
}

std::string_view to_string(AggregatorKind kind) { return kind == AggregatorKind::Mean ? "mean" : "min"; }

}  // namespace triage
