#include <doctest.h>

#include <algorithm>
#include <random>

#include "random_scenario.hpp"
#include "triage/admissibility.hpp"
#include "triage/augmentation.hpp"
#include "triage/scenario_io.hpp"

using namespace triage;

namespace {

bool contains(const std::vector<Id>& ids, const Id& id) { return std::find(ids.begin(), ids.end(), id) != ids.end(); }

std::optional<ReasonCode> reason_for(const ActionSet& set, const Id& id) {
  for (const auto& r : set.rejections) {
    if (r.action.id == id) return r.reason;
  }
  return std::nullopt;
}

BudgetUsage usage_after(const Scenario& s, const EdgeSet& edges) {
  BudgetUsage used;
  for (const auto& id : edges) used.add(s.edge(id));
  return used;
}

}  // namespace

TEST_CASE("untouched pack: only isolation") {
  auto b = builtin_battery_case(BatteryCase::A);
  auto set = admissible_actions({"P", {}, {}}, b.scenario, b.observations, {});
  CHECK(set.commits.empty());
  CHECK(set.edges == std::vector<Id>{"e_iso"});
  CHECK(reason_for(set, "P_recycle") == ReasonCode::AccessGate);
}

TEST_CASE("isolated healthy pack may be reused or recycled but not repurposed") {
  auto b = builtin_battery_case(BatteryCase::A);
  auto set = admissible_actions({"P", {"e_iso"}, {}}, b.scenario, b.observations, usage_after(b.scenario, {"e_iso"}));
  CHECK(contains(set.commits, "P_reuse"));
  CHECK(contains(set.commits, "P_recycle"));
  CHECK(reason_for(set, "P_repurpose") == ReasonCode::AccessGate);
}

TEST_CASE("moderate pack health blocks reuse") {
  auto b = builtin_battery_case(BatteryCase::B);
  auto set = admissible_actions({"P", {"e_iso"}, {}}, b.scenario, b.observations, {});
  CHECK(reason_for(set, "P_reuse") == ReasonCode::HealthThreshold);
}

TEST_CASE("labour cap blocks cover removal") {
  auto b = builtin_battery_case(BatteryCase::A);
  b.scenario.budgets.resource_caps["labour_min"] = Quantity::whole(30);
  auto used = usage_after(b.scenario, {"e_iso"});
  CHECK(used.resources["labour_min"] == Quantity::whole(10));
  auto set = admissible_actions({"P", {"e_iso"}, {}}, b.scenario, b.observations, used);
  CHECK(reason_for(set, "e_cov") == ReasonCode::ResourceBudget);
}

TEST_CASE("undiagnosed module: reuse unknown, recycle and disposal allowed") {
  auto b = builtin_battery_case(BatteryCase::B);
  AugmentedState m1{"M1", {"e_iso", "e_cov", "e_M1"}, {}};
  auto set = admissible_actions(m1, b.scenario, b.observations, {});
  CHECK(reason_for(set, "M1_reuse") == ReasonCode::HealthUnknown);
  CHECK(contains(set.commits, "M1_recycle"));
  CHECK(contains(set.commits, "M1_disposal"));
  CHECK(set.edges == std::vector<Id>{"e_diag_M1"});
}

TEST_CASE("extracting a module forbids whole-pack routes") {
  auto b = builtin_battery_case(BatteryCase::A);
  auto set = admissible_actions({"P", {"e_iso", "e_cov", "e_M1"}, {}}, b.scenario, b.observations, {});
  CHECK(reason_for(set, "P_recycle") == ReasonCode::GateForbid);
  CHECK(contains(set.commits, "P_null"));
}

TEST_CASE("reasons are checked in a fixed order") {
  Scenario s;
  s.roots = {"a"};
  Component a;
  a.id = "a";
  a.safety_score = 5;
  a.option_ids = {"k"};
  s.components = {a};
  DisassemblyEdge first, second;
  first.id = "first";
  first.applies_to = "a";
  first.time = Quantity::whole(50);
  second.id = "second";
  second.applies_to = "a";
  second.prerequisites = {"first"};
  second.time = Quantity::whole(50);
  s.edges = {first, second};
  s.budgets.time_max = Quantity::whole(10);
  CEOption k;
  k.id = "k";
  k.gate_requires = {"first"};
  k.gate_forbids = {"second"};
  k.safety_max = 1;
  k.min_health = 0.5;
  s.options = {k};
  Observations obs{{{"a", 0.1}}};

  CHECK(edge_rejection({"a", {}, {}}, s.edge("second"), s, {}) == ReasonCode::Precedence);
  CHECK(edge_rejection({"a", {}, {}}, s.edge("first"), s, {}) == ReasonCode::TimeBudget);
  CHECK(option_rejection({"a", {}, {}}, k, s, obs) == ReasonCode::AccessGate);
  CHECK(option_rejection({"a", {"first", "second"}, {}}, k, s, obs) == ReasonCode::GateForbid);
  CHECK(option_rejection({"a", {"first"}, {}}, k, s, obs) == ReasonCode::Safety);
  s.components[0].safety_score = 1;
  CHECK(option_rejection({"a", {"first"}, {}}, k, s, obs) == ReasonCode::HealthThreshold);
  CHECK(option_rejection({"a", {"first"}, {}}, k, s, {}) == ReasonCode::HealthUnknown);
  CHECK_FALSE(option_rejection({"a", {"first"}, {}}, k, s, {{{"a", 0.5}}}).has_value());
}

TEST_CASE("reason codes round-trip through their names") {
  for (auto code : {ReasonCode::Precedence, ReasonCode::AccessGate, ReasonCode::GateForbid, ReasonCode::Safety,
                    ReasonCode::HealthThreshold, ReasonCode::HealthUnknown, ReasonCode::TimeBudget,
                    ReasonCode::ResourceBudget}) {
    CHECK(parse_reason_code(to_string(code)) == code);
  }
  CHECK(to_string(ReasonCode::HealthThreshold) == "health-threshold");
}

TEST_CASE("misuse is a caller error, not a rejection") {
  auto b = builtin_battery_case(BatteryCase::A);
  CHECK_THROWS_AS(edge_rejection({"P", {}, {}}, b.scenario.edge("e_diag_M1"), b.scenario, {}), ModelError);
  CHECK_THROWS_AS(edge_rejection({"P", {"e_iso"}, {}}, b.scenario.edge("e_iso"), b.scenario, {}), ModelError);
  CHECK_THROWS_AS(option_rejection({"P", {}, {}}, b.scenario.option("M1_reuse"), b.scenario, {}), ModelError);
}

TEST_CASE("every candidate is either admitted or rejected exactly once") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto c = testing::random_case(seed);
    for (const auto& st : expand(c.scenario).states) {
      auto set = admissible_actions(st, c.scenario, c.obs, usage_after(c.scenario, st.trajectory));
      std::size_t candidates = c.scenario.component(st.component).option_ids.size();
      for (const auto* e : c.scenario.edges_on(st.component)) candidates += st.trajectory.contains(e->id) ? 0 : 1;
      CHECK(set.edges.size() + set.commits.size() + set.rejections.size() == candidates);
    }
  }
}

// Adding an edge to tau keeps precedence and gate_requires admissibility;
// only gate_forbids can take an option away.
TEST_CASE("gate monotonicity and asymmetry") {
  std::mt19937_64 rng(21);
  int trials = 0;
  int forbids_seen = 0;
  for (std::uint64_t seed = 0; trials < 400; ++seed) {
    auto c = testing::random_case(seed, {.max_components = 6, .max_edges = 10});
    auto states = expand(c.scenario).states;
    if (c.scenario.edges.empty()) continue;
    const auto& st = states[rng() % states.size()];
    const auto& extra = c.scenario.edges[rng() % c.scenario.edges.size()];
    if (st.trajectory.contains(extra.id)) continue;
    AugmentedState bigger = st;
    bigger.trajectory.insert(extra.id);
    ++trials;

    for (const auto* e : c.scenario.edges_on(st.component)) {
      if (bigger.trajectory.contains(e->id)) continue;
      bool before = edge_rejection(st, *e, c.scenario, {}) != ReasonCode::Precedence;
      bool after = edge_rejection(bigger, *e, c.scenario, {}) != ReasonCode::Precedence;
      if (before) CHECK(after);
    }
    for (const auto& id : c.scenario.component(st.component).option_ids) {
      const auto& option = c.scenario.option(id);
      auto before = option_rejection(st, option, c.scenario, c.obs);
      auto after = option_rejection(bigger, option, c.scenario, c.obs);
      if (before != ReasonCode::AccessGate) CHECK(after != ReasonCode::AccessGate);
      bool lost = !before && after;
      if (lost) {
        // Only the new edge being forbidden, or health becoming visible
        // below threshold, can take an admitted option away.
        bool forbidden = option.gate_forbids.contains(extra.id);
        bool revealed = after == ReasonCode::HealthThreshold;
        CHECK((forbidden || revealed));
        if (forbidden) {
          CHECK(after == ReasonCode::GateForbid);
          ++forbids_seen;
        }
      }
      if (option.gate_forbids.contains(extra.id) && !before) {
        CHECK(after == ReasonCode::GateForbid);
      }
    }
  }
  CHECK(trials >= 200);
  CHECK(forbids_seen > 0);
}

TEST_CASE("tightening a budget never enlarges the admissible set") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 250; ++trial) {
    auto c = testing::random_case(1000 + trial);
    auto states = expand(c.scenario).states;
    const auto& st = states[rng() % states.size()];
    auto used = usage_after(c.scenario, st.trajectory);
    auto loose = admissible_actions(st, c.scenario, c.obs, used);

    auto tight = c.scenario;
    tight.budgets.time_max = Quantity::whole(static_cast<std::int64_t>(rng() % 30));
    tight.budgets.resource_caps["r1"] = Quantity::whole(static_cast<std::int64_t>(rng() % 10));
    if (c.scenario.budgets.time_max && *c.scenario.budgets.time_max < *tight.budgets.time_max) {
      tight.budgets.time_max = c.scenario.budgets.time_max;
    }
    if (auto it = c.scenario.budgets.resource_caps.find("r1");
        it != c.scenario.budgets.resource_caps.end() && it->second < tight.budgets.resource_caps["r1"]) {
      tight.budgets.resource_caps["r1"] = it->second;
    }
    auto strict = admissible_actions(st, tight, c.obs, used);
    for (const auto& id : strict.edges) CHECK(contains(loose.edges, id));
    CHECK(strict.commits == loose.commits);
  }
}

TEST_CASE("with no gates, budgets or thresholds everything structural is admissible") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto c = testing::random_case(seed, {.budgets = false, .gates = false, .health_scaled = false,
                                         .reveal_edges = false});
    for (const auto& st : expand(c.scenario).states) {
      auto set = admissible_actions(st, c.scenario, c.obs, usage_after(c.scenario, st.trajectory));
      CHECK(set.rejections.empty());
    }
  }
}
