#include <doctest.h>

#include <algorithm>

#include "random_scenario.hpp"
#include "triage/model.hpp"
#include "triage/scenario_io.hpp"

using namespace triage;

namespace {

Scenario one_component() {
  Scenario s;
  s.roots = {"a"};
  Component a;
  a.id = "a";
  a.option_ids = {"keep"};
  s.components = {a};
  CEOption keep;
  keep.id = "keep";
  keep.kind = OptionKind::Reuse;
  keep.revenue = FixedRevenue{Money::whole(5)};
  keep.proc_cost = Money::whole(2);
  s.options = {keep};
  return s;
}

bool has_code(const ValidationReport& report, const std::string& code, const std::string& subject) {
  return std::any_of(report.begin(), report.end(),
                     [&](const Violation& v) { return v.code == code && v.subject == subject; });
}

}  // namespace

TEST_CASE("fixed-point money is exact for decimal inputs") {
  CHECK((Money::from_double(0.1) + Money::from_double(0.2)) == Money::from_double(0.3));
  CHECK(Money::whole(280).to_string() == "280");
  CHECK(Money::from_double(-25.5).to_string() == "-25.5");
  CHECK(Money::from_double(90.3333333333).to_string() == "90.333333");
  CHECK(Money::from_double(-0.000001).to_string() == "-0.000001");
  CHECK(Money::whole(3) > Money::whole(-3));
  CHECK(-Money::whole(10) == Money::whole(-10));
}

TEST_CASE("bundled battery scenario validates cleanly") {
  auto doc = battery_document();
  CHECK(validate_scenario(doc.scenario).empty());
  for (const auto& [name, obs] : doc.observation_sets) CHECK(validate_observations(doc.scenario, obs).empty());
}

TEST_CASE("an edge requiring itself is one cyclic-precedence violation") {
  auto s = one_component();
  DisassemblyEdge e;
  e.id = "loop";
  e.applies_to = "a";
  e.prerequisites = {"loop"};
  s.edges = {e};
  auto report = validate_scenario(s);
  REQUIRE(report.size() == 1);
  CHECK(report[0].code == "cyclic-precedence");
  CHECK(report[0].subject == "loop");
}

TEST_CASE("min_health outside [0,1] is one range violation") {
  auto s = one_component();
  s.options[0].min_health = 1.5;
  auto report = validate_scenario(s);
  REQUIRE(report.size() == 1);
  CHECK(report[0].code == "range");
  CHECK(report[0].subject == "keep");
}

TEST_CASE("structural violations are each reported with their subject") {
  auto s = one_component();
  s.components[0].option_ids.push_back("ghost");
  s.components[0].safety_score = -1;
  DisassemblyEdge self;
  self.id = "split";
  self.applies_to = "a";
  self.spawns = {"a"};
  self.cost = Money::whole(-1);
  s.edges = {self};
  CEOption null_option;
  null_option.id = "bad_null";
  null_option.kind = OptionKind::Null;
  null_option.proc_cost = Money::whole(1);
  CEOption scaled;
  scaled.id = "scaled";
  scaled.revenue = HealthScaledRevenue{Money::whole(10), 0.9, 0.5};
  s.options.push_back(null_option);
  s.options.push_back(scaled);
  s.options.push_back(scaled);

  auto report = validate_scenario(s);
  CHECK(has_code(report, "unknown-reference", "a"));
  CHECK(has_code(report, "negative-value", "a"));
  CHECK(has_code(report, "self-spawn", "split"));
  CHECK(has_code(report, "negative-value", "split"));
  CHECK(has_code(report, "null-economics", "bad_null"));
  CHECK(has_code(report, "rvr-bounds", "scaled"));
  CHECK(has_code(report, "duplicate-id", "scaled"));
  CHECK(std::is_sorted(report.begin(), report.end(),
                       [](const Violation& x, const Violation& y) { return x.subject < y.subject; }));
}

TEST_CASE("component graph cycles and missing roots are rejected") {
  auto s = one_component();
  Component b;
  b.id = "b";
  s.components.push_back(b);
  DisassemblyEdge ab;
  ab.id = "ab";
  ab.applies_to = "a";
  ab.spawns = {"b"};
  DisassemblyEdge ba;
  ba.id = "ba";
  ba.applies_to = "b";
  ba.spawns = {"a"};
  s.edges = {ab, ba};
  CHECK(has_code(validate_scenario(s), "cyclic-graph", "a"));

  s.roots.clear();
  CHECK(has_code(validate_scenario(s), "no-roots", ""));
}

TEST_CASE("aggregator problems are reported") {
  auto s = one_component();
  Component b;
  b.id = "b";
  b.aggregator = HealthAggregator{AggregatorKind::Mean, {{"a", 0.0}}};
  s.components.push_back(b);
  s.components[0].aggregator = HealthAggregator{AggregatorKind::Min, {{"b", 1.0}}};
  auto report = validate_scenario(s);
  CHECK(has_code(report, "aggregator-weights", "b"));
  CHECK(has_code(report, "aggregator-cycle", "a"));
}

TEST_CASE("validation is deterministic") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto c = testing::random_case(seed);
    c.scenario.options[0].min_health = 2.0;
    c.scenario.edges.push_back(c.scenario.edges.empty() ? DisassemblyEdge{} : c.scenario.edges[0]);
    CHECK(validate_scenario(c.scenario) == validate_scenario(c.scenario));
  }
}

TEST_CASE("random generator only produces valid scenarios") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    auto c = testing::random_case(seed, {.max_components = 10, .max_edges = 12});
    INFO("seed " << seed);
    CHECK(validate_scenario(c.scenario).empty());
    CHECK(validate_observations(c.scenario, c.obs).empty());
    CHECK(c.scenario.components.size() <= 10);
    CHECK(c.scenario.edges.size() <= 12);
  }
}

TEST_CASE("observations are range-checked and must name components") {
  auto s = one_component();
  Observations obs{{{"a", 1.2}, {"zz", 0.5}}};
  auto report = validate_observations(s, obs);
  CHECK(has_code(report, "range", "a"));
  CHECK(has_code(report, "unknown-reference", "zz"));
  CHECK_THROWS_AS(require_valid(s, &obs), ValidationError);
}

TEST_CASE("lookups throw on unknown ids") {
  auto s = one_component();
  CHECK(s.find_edge("nope") == nullptr);
  CHECK_THROWS_AS(s.edge("nope"), ModelError);
  CHECK_THROWS_AS(s.component("nope"), ModelError);
  CHECK(s.option("keep").proc_cost == Money::whole(2));
}

TEST_CASE("enum names round-trip") {
  for (auto kind : {OptionKind::Reuse, OptionKind::Repurpose, OptionKind::Recycle, OptionKind::Disposal,
                    OptionKind::Null}) {
    CHECK(parse_option_kind(to_string(kind)) == kind);
  }
  CHECK(parse_accounting_mode("path") == AccountingMode::PathAttribution);
  CHECK(parse_accounting_mode("incremental") == AccountingMode::Incremental);
  CHECK_FALSE(parse_accounting_mode("both").has_value());
}
