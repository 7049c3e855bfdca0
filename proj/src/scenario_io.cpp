#include "triage/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "triage/admissibility.hpp"
#include "triage/augmentation.hpp"

namespace triage {

using nlohmann::json;

namespace {

// Typed access to a JSON object that reports failures with their pointer.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ParseError(path_, "expected an object");
  }

  bool has(const char* key) const { return node_.contains(key) && !node_.at(key).is_null(); }
  std::string at(const char* key) const { return path_ + "/" + key; }

  const json& field(const char* key) const {
    if (!node_.contains(key)) throw ParseError(at(key), "missing required field");
    return node_.at(key);
  }

  std::string string(const char* key) const {
    const auto& v = field(key);
    if (!v.is_string()) throw ParseError(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string_or(const char* key, std::string fallback) const { return has(key) ? string(key) : fallback; }

  double number(const char* key) const { return as_number(field(key), at(key)); }
  double number_or(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

  bool boolean_or(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = node_.at(key);
    if (!v.is_boolean()) throw ParseError(at(key), "expected a boolean");
    return v.get<bool>();
  }

  std::vector<std::string> strings_or_empty(const char* key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const auto& v = node_.at(key);
    if (!v.is_array()) throw ParseError(at(key), "expected an array of strings");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) throw ParseError(at(key) + "/" + std::to_string(i), "expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  IdSet set_or_empty(const char* key) const {
    auto list = strings_or_empty(key);
    return IdSet(list.begin(), list.end());
  }

  const json& array(const char* key) const {
    const auto& v = field(key);
    if (!v.is_array()) throw ParseError(at(key), "expected an array");
    return v;
  }

  static double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ParseError(where, "expected a number");
    return v.get<double>();
  }

 private:
  const json& node_;
  std::string path_;
};

std::map<std::string, Quantity> parse_amounts(const json& node, const std::string& path) {
  std::map<std::string, Quantity> out;
  if (node.is_null()) return out;
  if (!node.is_object()) throw ParseError(path, "expected an object of amounts");
  for (const auto& [name, value] : node.items()) {
    out[name] = Quantity::from_double(Reader::as_number(value, path + "/" + name));
  }
  return out;
}

json amounts_to_json(const std::map<std::string, Quantity>& amounts) {
  json out = json::object();
  for (const auto& [name, q] : amounts) out[name] = q.to_double();
  return out;
}

json ids_to_json(const IdSet& ids) { return json(std::vector<std::string>(ids.begin(), ids.end())); }

Component parse_component(const json& node, const std::string& path) {
  Reader r(node, path);
  Component c;
  c.id = r.string("id");
  c.name = r.string_or("name", c.id);
  c.option_ids = r.strings_or_empty("option_ids");
  c.safety_score = r.number_or("safety_score", 0.0);
  c.health_reveal_edges = r.set_or_empty("health_reveal_edges");
  c.negligible = r.boolean_or("negligible", false);
  if (r.has("aggregator")) {
    Reader a(r.field("aggregator"), r.at("aggregator"));
    HealthAggregator agg;
    auto kind = a.string("kind");
    if (kind == "mean") {
      agg.kind = AggregatorKind::Mean;
    } else if (kind == "min") {
      agg.kind = AggregatorKind::Min;
    } else {
      throw ParseError(a.at("kind"), "unknown aggregator kind '" + kind + "'");
    }
    const auto& children = a.array("children");
    for (std::size_t i = 0; i < children.size(); ++i) {
      Reader ch(children[i], a.at("children") + "/" + std::to_string(i));
      agg.children.push_back({ch.string("id"), ch.number_or("weight", 1.0)});
    }
    c.aggregator = std::move(agg);
  }
  return c;
}

DisassemblyEdge parse_edge(const json& node, const std::string& path) {
  Reader r(node, path);
  DisassemblyEdge e;
  e.id = r.string("id");
  e.applies_to = r.string("applies_to");
  e.prerequisites = r.set_or_empty("requires");
  e.time = Quantity::from_double(r.number_or("time", 0.0));
  e.cost = Money::from_double(r.number_or("cost", 0.0));
  if (r.has("resources")) e.resources = parse_amounts(r.field("resources"), r.at("resources"));
  e.spawns = r.strings_or_empty("spawns");
  e.consumes_source = r.boolean_or("consumes_source", false);
  return e;
}

RevenueModel parse_revenue(const json& node, const std::string& path) {
  Reader r(node, path);
  auto model = r.string("model");
  if (model == "fixed") return FixedRevenue{Money::from_double(r.number("amount"))};
  if (model == "override") return OverrideRevenue{Money::from_double(r.number("amount"))};
  if (model == "health_scaled") {
    return HealthScaledRevenue{Money::from_double(r.number("baseline")), r.number("rvr_lo"), r.number("rvr_hi")};
  }
  throw ParseError(r.at("model"), "unknown revenue model '" + model + "'");
}

json revenue_to_json(const RevenueModel& revenue) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, FixedRevenue>) {
          return {{"model", "fixed"}, {"amount", m.amount.to_double()}};
        } else if constexpr (std::is_same_v<T, OverrideRevenue>) {
          return {{"model", "override"}, {"amount", m.amount.to_double()}};
        } else {
          return {{"model", "health_scaled"},
                  {"baseline", m.baseline.to_double()},
                  {"rvr_lo", m.rvr_lo},
                  {"rvr_hi", m.rvr_hi}};
        }
      },
      revenue);
}

CEOption parse_option(const json& node, const std::string& path) {
  Reader r(node, path);
  CEOption o;
  o.id = r.string("id");
  auto kind = r.string("kind");
  auto parsed = parse_option_kind(kind);
  if (!parsed) throw ParseError(r.at("kind"), "unknown option kind '" + kind + "'");
  o.kind = *parsed;
  o.revenue = parse_revenue(r.field("revenue"), r.at("revenue"));
  o.proc_cost = Money::from_double(r.number_or("proc_cost", 0.0));
  o.gate_requires = r.set_or_empty("gate_requires");
  o.gate_forbids = r.set_or_empty("gate_forbids");
  if (r.has("min_health")) o.min_health = r.number("min_health");
  o.safety_max = r.number_or("safety_max", std::numeric_limits<double>::infinity());
  return o;
}

template <class T, class F>
std::vector<T> parse_list(const Reader& r, const char* key, F parse_one) {
  std::vector<T> out;
  const auto& list = r.array(key);
  for (std::size_t i = 0; i < list.size(); ++i) out.push_back(parse_one(list[i], r.at(key) + "/" + std::to_string(i)));
  return out;
}

}  // namespace

Observations parse_observations(const json& doc) {
  if (!doc.is_object()) throw ParseError("", "observations must be an object of component -> health");
  Observations obs;
  for (const auto& [id, value] : doc.items()) obs.health[id] = Reader::as_number(value, "/" + id);
  return obs;
}

json to_json(const Observations& obs) {
  json out = json::object();
  for (const auto& [id, h] : obs.health) out[id] = h;
  return out;
}

Observations parse_observation_list(const std::string& text) {
  Observations obs;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError("", "expected component=health, got '" + item + "'");
    try {
      std::size_t used = 0;
      double value = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing characters");
      obs.health[item.substr(0, eq)] = value;
    } catch (const std::exception&) {
      throw ParseError("", "invalid health value in '" + item + "'");
    }
  }
  return obs;
}

ScenarioDocument parse_scenario(const json& doc) {
  Reader r(doc, "");
  if (!r.has("format_version")) throw ParseError("/format_version", "missing required field");
  const auto& version = r.field("format_version");
  if (!version.is_number_integer() || version.get<int>() != kFormatVersion) {
    throw ParseError("/format_version", "unsupported format version (expected " + std::to_string(kFormatVersion) + ")");
  }

  ScenarioDocument out;
  auto& s = out.scenario;
  s.name = r.string_or("name", "");
  auto mode = r.string_or("accounting", "incremental");
  auto parsed_mode = parse_accounting_mode(mode);
  if (!parsed_mode) throw ParseError("/accounting", "unknown accounting mode '" + mode + "'");
  s.accounting = *parsed_mode;
  s.roots = r.strings_or_empty("roots");
  s.components = parse_list<Component>(r, "components", parse_component);
  s.edges = parse_list<DisassemblyEdge>(r, "edges", parse_edge);
  s.options = parse_list<CEOption>(r, "options", parse_option);

  if (r.has("budgets")) {
    Reader b(r.field("budgets"), "/budgets");
    if (b.has("time_max")) s.budgets.time_max = Quantity::from_double(b.number("time_max"));
    if (b.has("resource_caps")) s.budgets.resource_caps = parse_amounts(b.field("resource_caps"), b.at("resource_caps"));
  }

  if (r.has("observations")) {
    const auto& sets = r.field("observations");
    if (!sets.is_object()) throw ParseError("/observations", "expected an object of named observation sets");
    for (const auto& [name, set] : sets.items()) {
      try {
        out.observation_sets[name] = parse_observations(set);
      } catch (const ParseError& e) {
        throw ParseError("/observations/" + name + e.location(), "expected a number");
      }
    }
  }
  return out;
}

ScenarioDocument load_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Report where the text stopped making sense as line:column.
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(column),
                     std::string("malformed JSON: ") + e.what());
  }
  auto out = parse_scenario(doc);
  auto report = validate_scenario(out.scenario);
  for (const auto& [name, obs] : out.observation_sets) {
    for (auto v : validate_observations(out.scenario, obs)) {
      v.message = "observation set '" + name + "': " + v.message;
      report.push_back(std::move(v));
    }
  }
  if (!report.empty()) throw ValidationError(std::move(report));
  return out;
}

ScenarioDocument load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_scenario(buffer.str());
}

json to_json(const ScenarioDocument& doc) {
  const auto& s = doc.scenario;
  json out;
  out["format_version"] = kFormatVersion;
  out["name"] = s.name;
  out["accounting"] = std::string(to_string(s.accounting));
  out["roots"] = s.roots;

  json budgets = json::object();
  budgets["time_max"] = s.budgets.time_max ? json(s.budgets.time_max->to_double()) : json(nullptr);
  budgets["resource_caps"] = amounts_to_json(s.budgets.resource_caps);
  out["budgets"] = budgets;

  out["components"] = json::array();
  for (const auto& c : s.components) {
    json jc = {{"id", c.id},
               {"name", c.name},
               {"option_ids", c.option_ids},
               {"safety_score", c.safety_score},
               {"health_reveal_edges", ids_to_json(c.health_reveal_edges)},
               {"negligible", c.negligible}};
    if (c.aggregator) {
      json children = json::array();
      for (const auto& ch : c.aggregator->children) children.push_back({{"id", ch.component}, {"weight", ch.weight}});
      jc["aggregator"] = {{"kind", std::string(to_string(c.aggregator->kind))}, {"children", children}};
    } else {
      jc["aggregator"] = nullptr;
    }
    out["components"].push_back(std::move(jc));
  }

  out["edges"] = json::array();
  for (const auto& e : s.edges) {
    out["edges"].push_back({{"id", e.id},
                            {"applies_to", e.applies_to},
                            {"requires", ids_to_json(e.prerequisites)},
                            {"time", e.time.to_double()},
                            {"cost", e.cost.to_double()},
                            {"resources", amounts_to_json(e.resources)},
                            {"spawns", e.spawns},
                            {"consumes_source", e.consumes_source}});
  }

  out["options"] = json::array();
  for (const auto& o : s.options) {
    out["options"].push_back(
        {{"id", o.id},
         {"kind", std::string(to_string(o.kind))},
         {"revenue", revenue_to_json(o.revenue)},
         {"proc_cost", o.proc_cost.to_double()},
         {"gate_requires", ids_to_json(o.gate_requires)},
         {"gate_forbids", ids_to_json(o.gate_forbids)},
         {"min_health", o.min_health ? json(*o.min_health) : json(nullptr)},
         {"safety_max", std::isinf(o.safety_max) ? json(nullptr) : json(o.safety_max)}});
  }

  json sets = json::object();
  for (const auto& [name, obs] : doc.observation_sets) sets[name] = to_json(obs);
  out["observations"] = sets;
  return out;
}

std::string save_scenario(const ScenarioDocument& doc) { return to_json(doc).dump(2) + "\n"; }

json to_json(const Action& action) {
  return action.is_edge() ? json{{"edge", action.id}} : json{{"commit", action.id}};
}

Action parse_action(const json& doc, const std::string& location) {
  Reader r(doc, location);
  bool edge = r.has("edge");
  bool commit = r.has("commit");
  if (edge == commit) throw ParseError(location, "action needs exactly one of 'edge' or 'commit'");
  return edge ? Action::edge(r.string("edge")) : Action::commit(r.string("commit"));
}

Policy parse_policy(const json& doc) {
  Reader r(doc, "");
  Policy policy;
  const auto& rules = r.array("rules");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const std::string path = "/rules/" + std::to_string(i);
    Reader rule(rules[i], path);
    auto trajectory = rule.set_or_empty("trajectory");
    StateSignature sig{rule.string("component"), std::vector<Id>(trajectory.begin(), trajectory.end())};
    if (rule.has("action") == rule.has("distribution")) {
      throw ParseError(path, "rule needs exactly one of 'action' or 'distribution'");
    }
    if (rule.has("action")) {
      policy.set(sig, parse_action(rule.field("action"), rule.at("action")));
      continue;
    }
    std::vector<PolicyChoice> choices;
    const auto& dist = rule.array("distribution");
    for (std::size_t j = 0; j < dist.size(); ++j) {
      const std::string cpath = rule.at("distribution") + "/" + std::to_string(j);
      Reader choice(dist[j], cpath);
      choices.push_back({parse_action(choice.field("action"), choice.at("action")), choice.number("p")});
    }
    try {
      policy.set_distribution(sig, std::move(choices));
    } catch (const PolicyError& e) {
      throw ParseError(path, e.what());
    }
  }
  return policy;
}

json to_json(const Policy& policy) {
  json rules = json::array();
  for (const auto& [sig, choices] : policy.rules()) {
    json rule = {{"component", sig.component}, {"trajectory", sig.edges}};
    if (choices.size() == 1 && choices.front().probability == 1.0) {
      rule["action"] = to_json(choices.front().action);
    } else {
      json dist = json::array();
      for (const auto& c : choices) dist.push_back({{"action", to_json(c.action)}, {"p", c.probability}});
      rule["distribution"] = dist;
    }
    rules.push_back(std::move(rule));
  }
  return {{"rules", rules}};
}

std::optional<BatteryCase> parse_battery_case(std::string_view text) {
  if (text == "A" || text == "a") return BatteryCase::A;
  if (text == "B" || text == "b") return BatteryCase::B;
  if (text == "C" || text == "c") return BatteryCase::C;
  return std::nullopt;
}

namespace {

DisassemblyEdge battery_edge(Id id, Id on, IdSet requires_edges, int time, int cost, int labour, int fixture,
                             int bench, std::vector<Id> spawns = {}) {
  DisassemblyEdge e;
  e.id = std::move(id);
  e.applies_to = std::move(on);
  e.prerequisites = std::move(requires_edges);
  e.time = Quantity::whole(time);
  e.cost = Money::whole(cost);
  e.resources = {{"labour_min", Quantity::whole(labour)},
                 {"fixture", Quantity::whole(fixture)},
                 {"bench", Quantity::whole(bench)}};
  e.spawns = std::move(spawns);
  return e;
}

CEOption battery_option(Id id, OptionKind kind, RevenueModel revenue, int proc, IdSet requires_edges,
                        IdSet forbids = {}, std::optional<double> min_health = std::nullopt) {
  CEOption o;
  o.id = std::move(id);
  o.kind = kind;
  o.revenue = std::move(revenue);
  o.proc_cost = Money::whole(proc);
  o.gate_requires = std::move(requires_edges);
  o.gate_forbids = std::move(forbids);
  o.min_health = min_health;
  return o;
}

Scenario battery_scenario() {
  Scenario s;
  s.name = "ev-battery";
  s.roots = {"P"};

  Component pack;
  pack.id = "P";
  pack.name = "Battery pack";
  pack.option_ids = {"P_reuse", "P_repurpose", "P_recycle", "P_null"};
  pack.aggregator = HealthAggregator{AggregatorKind::Mean, {{"M1", 1.0}, {"M2", 1.0}}};
  s.components.push_back(pack);
  for (const char* m : {"M1", "M2"}) {
    Component module;
    module.id = m;
    module.name = std::string("Module ") + m;
    module.option_ids = {std::string(m) + "_reuse", std::string(m) + "_recycle", std::string(m) + "_disposal"};
    module.health_reveal_edges = {std::string("e_diag_") + m};
    s.components.push_back(module);
  }

  s.edges = {
      battery_edge("e_iso", "P", {}, 10, 10, 10, 0, 0),
      battery_edge("e_cov", "P", {"e_iso"}, 25, 25, 25, 1, 0),
      battery_edge("e_shield", "P", {"e_cov"}, 12, 18, 12, 0, 0),
      battery_edge("e_M1", "P", {"e_cov"}, 20, 30, 20, 0, 0, {"M1"}),
      battery_edge("e_M2", "P", {"e_cov"}, 20, 30, 20, 0, 0, {"M2"}),
      battery_edge("e_diag_M1", "M1", {"e_M1"}, 10, 10, 0, 0, 10),
      battery_edge("e_diag_M2", "M2", {"e_M2"}, 10, 10, 0, 0, 10),
  };

  const IdSet module_removed{"e_M1", "e_M2"};
  s.options = {
      battery_option("P_reuse", OptionKind::Reuse, HealthScaledRevenue{Money::whole(600), 0.85, 1.0}, 60, {"e_iso"},
                     module_removed, 0.9),
      battery_option("P_repurpose", OptionKind::Repurpose, HealthScaledRevenue{Money::whole(250), 0.60, 0.90}, 40,
                     {"e_iso", "e_cov", "e_shield"}, module_removed, 0.7),
      battery_option("P_recycle", OptionKind::Recycle, FixedRevenue{Money::whole(50)}, 10, {"e_iso"}, module_removed),
      battery_option("P_null", OptionKind::Null, FixedRevenue{}, 0, {"e_iso"}),
  };
  for (const char* m : {"M1", "M2"}) {
    const Id extract = std::string("e_") + m;
    s.options.push_back(battery_option(std::string(m) + "_reuse", OptionKind::Reuse,
                                       HealthScaledRevenue{Money::whole(200), 0.85, 1.0}, 60, {extract}, {}, 0.8));
    s.options.push_back(battery_option(std::string(m) + "_recycle", OptionKind::Recycle,
                                       FixedRevenue{Money::whole(60)}, 10, {extract}));
    s.options.push_back(battery_option(std::string(m) + "_disposal", OptionKind::Disposal,
                                       FixedRevenue{Money::whole(-10)}, 5, {extract}));
  }
  return s;
}

Observations battery_observations(BatteryCase which) {
  switch (which) {
    case BatteryCase::A: return {{{"P", 0.92}}};
    case BatteryCase::B: return {{{"P", 0.82}, {"M1", 0.92}, {"M2", 0.72}}};
    case BatteryCase::C: return {{{"P", 0.30}, {"M1", 0.16}, {"M2", 0.54}}};
  }
  return {};
}

}  // namespace

BatteryScenario builtin_battery_case(BatteryCase which, bool paper_figures) {
  BatteryScenario out{battery_scenario(), battery_observations(which)};
  const char* names[] = {"battery-case-A", "battery-case-B", "battery-case-C"};
  out.scenario.name = names[static_cast<int>(which)];
  if (paper_figures) {
    out.scenario.accounting = AccountingMode::PathAttribution;
    out.scenario.name += "-paper-figures";
    if (which == BatteryCase::B) {
      for (auto& o : out.scenario.options) {
        if (o.id == "M1_reuse") o.revenue = OverrideRevenue{Money::whole(250)};
        if (o.id == "P_repurpose") o.revenue = OverrideRevenue{Money::whole(183)};
      }
    }
  }
  return out;
}

ScenarioDocument battery_document() {
  ScenarioDocument doc{battery_scenario(), {}};
  doc.observation_sets["A"] = battery_observations(BatteryCase::A);
  doc.observation_sets["B"] = battery_observations(BatteryCase::B);
  doc.observation_sets["C"] = battery_observations(BatteryCase::C);
  return doc;
}

namespace {

std::string quoted(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string export_dot(const Scenario& scenario, DotMode mode, const Observations* obs, std::size_t cap) {
  std::ostringstream out;
  if (mode == DotMode::Physical) {
    out << "digraph G {\n  rankdir=TB;\n  node [shape=circle];\n";
    std::vector<Id> ids;
    for (const auto& c : scenario.components) ids.push_back(c.id);
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids) out << "  " << quoted(id) << " [label=" << quoted(id) << "];\n";
    std::vector<const DisassemblyEdge*> edges;
    for (const auto& e : scenario.edges) edges.push_back(&e);
    std::sort(edges.begin(), edges.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
    for (const auto* e : edges) {
      if (e->spawns.empty()) {
        out << "  " << quoted(e->applies_to) << " -> " << quoted(e->applies_to) << " [label=" << quoted(e->id)
            << "];\n";
      }
      for (const auto& spawn : e->spawns) {
        out << "  " << quoted(e->applies_to) << " -> " << quoted(spawn) << " [label=" << quoted(e->id) << "];\n";
      }
    }
    out << "}\n";
    return out.str();
  }

  ExpansionOptions options;
  options.cap = cap;
  auto expansion = expand(scenario, options);
  Observations none;
  const Observations& health = obs ? *obs : none;

  std::map<StateSignature, std::string> names;
  for (std::size_t i = 0; i < expansion.states.size(); ++i) {
    names[state_signature(expansion.states[i])] = "s" + std::to_string(i);
  }

  out << "digraph G_aug {\n  rankdir=TB;\n  node [shape=box];\n";
  for (const auto& state : expansion.states) {
    auto sig = state_signature(state);
    out << "  " << names[sig] << " [label=" << quoted(sig.to_string()) << "];\n";
  }
  for (const auto& t : expansion.transitions) {
    out << "  " << names[t.from] << " -> " << names[t.to] << " [label=" << quoted(t.edge) << "];\n";
  }
  for (const auto& state : expansion.states) {
    auto set = admissible_actions(state, scenario, health, BudgetUsage{});
    if (set.commits.empty()) continue;
    const auto& from = names[state_signature(state)];
    std::string label;
    for (const auto& id : set.commits) label += (label.empty() ? "" : ",") + id;
    out << "  ce_" << from << " [shape=diamond,label=" << quoted(label) << "];\n";
    out << "  " << from << " -> ce_" << from << " [style=dashed];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace triage
