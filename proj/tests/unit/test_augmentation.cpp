#include <doctest.h>

#include <algorithm>

#include "random_scenario.hpp"
#include "triage/augmentation.hpp"
#include "triage/scenario_io.hpp"

using namespace triage;

namespace {

const Successor* find_successor(const std::vector<Successor>& list, const std::string& edge) {
  auto it = std::find_if(list.begin(), list.end(), [&](const Successor& s) { return s.edge == edge; });
  return it == list.end() ? nullptr : &*it;
}

}  // namespace

TEST_CASE("battery scenario starts from the pack alone") {
  auto s = battery_document().scenario;
  auto init = initial_states(s);
  REQUIRE(init.size() == 1);
  CHECK(init[0].component == "P");
  CHECK(init[0].trajectory.empty());
}

TEST_CASE("two roots give two empty-trajectory states") {
  auto s = battery_document().scenario;
  s.roots = {"P", "M1"};
  auto init = initial_states(s);
  REQUIRE(init.size() == 2);
  for (const auto& st : init) CHECK(st.trajectory.empty());
}

TEST_CASE("only isolation is possible on an untouched pack") {
  auto s = battery_document().scenario;
  auto next = successors({"P", {}, {}}, s);
  REQUIRE(next.size() == 1);
  CHECK(next[0].edge == "e_iso");
  REQUIRE(next[0].states.size() == 1);
  CHECK(state_signature(next[0].states[0]).to_string() == "(P, {e_iso})");
}

TEST_CASE("cover removal follows isolation") {
  auto s = battery_document().scenario;
  auto next = successors({"P", {"e_iso"}, {}}, s);
  CHECK(find_successor(next, "e_cov") != nullptr);
  CHECK(find_successor(next, "e_M1") == nullptr);
}

TEST_CASE("module extraction keeps the pack and spawns the module") {
  auto s = battery_document().scenario;
  auto next = successors({"P", {"e_iso", "e_cov"}, {}}, s);
  const auto* m1 = find_successor(next, "e_M1");
  REQUIRE(m1 != nullptr);
  REQUIRE(m1->states.size() == 2);
  CHECK(m1->states[0].component == "P");
  CHECK(m1->states[0].trajectory == EdgeSet{"e_iso", "e_cov", "e_M1"});
  CHECK(m1->states[1].component == "M1");
  CHECK(m1->states[1].trajectory == EdgeSet{"e_iso", "e_cov", "e_M1"});
}

TEST_CASE("a child does not inherit the edges that extracted its siblings") {
  auto s = battery_document().scenario;
  AugmentedState pack{"P", {"e_iso", "e_cov", "e_M1"}, {}};
  auto next = successors(pack, s);
  const auto* m2 = find_successor(next, "e_M2");
  REQUIRE(m2 != nullptr);
  CHECK(m2->states[0].trajectory == EdgeSet{"e_iso", "e_cov", "e_M1", "e_M2"});
  CHECK(m2->states[1].component == "M2");
  CHECK(m2->states[1].trajectory == EdgeSet{"e_iso", "e_cov", "e_M2"});
}

TEST_CASE("sibling extraction edges stay when a later edge depends on them") {
  auto s = battery_document().scenario;
  DisassemblyEdge brace;
  brace.id = "e_brace";
  brace.applies_to = "P";
  brace.prerequisites = {"e_M1"};
  s.edges.push_back(brace);
  s.edges[4].prerequisites.insert("e_brace");  // e_M2 now needs the brace off
  REQUIRE(s.edges[4].id == "e_M2");
  auto inherited = child_trajectory(s, {"P", {"e_iso", "e_cov", "e_M1", "e_brace"}, {}}, s.edges[4]);
  CHECK(inherited == EdgeSet{"e_iso", "e_cov", "e_M1", "e_brace", "e_M2"});
}

TEST_CASE("signatures ignore insertion order and separate different histories") {
  AugmentedState a{"v5", {}, {}};
  a.trajectory.insert("e5");
  a.trajectory.insert("e0");
  a.trajectory.insert("e3");
  AugmentedState b{"v5", {"e0", "e3", "e5"}, {}};
  CHECK(state_signature(a) == state_signature(b));
  AugmentedState c{"v5", {"e0", "e1", "e4", "e5"}, {}};
  CHECK(state_signature(a) != state_signature(c));
  CHECK(state_signature({"v", {}, {}}) == state_signature({"v", {}, {}}));
}

TEST_CASE("figure-1 graph unrolls into eight states") {
  auto s = testing::figure1_scenario();
  REQUIRE(validate_scenario(s).empty());
  auto ex = expand(s);
  REQUIRE(ex.states.size() == 8);

  std::vector<std::string> labels;
  for (const auto& st : ex.states) labels.push_back(state_signature(st).to_string());
  for (const char* expected : {"(v0, {})", "(v1, {e0})", "(v2, {e0,e1})", "(v3, {e0,e1,e2})", "(v4, {e0,e3})",
                               "(v4, {e0,e1,e4})", "(v5, {e0,e3,e5})", "(v5, {e0,e1,e4,e5})"}) {
    CHECK(std::find(labels.begin(), labels.end(), expected) != labels.end());
  }
  CHECK(ex.transitions.size() == 7);
}

TEST_CASE("successors never repeat an executed edge") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto c = testing::random_case(seed, {.max_components = 8, .max_edges = 10});
    auto ex = expand(c.scenario);
    for (const auto& st : ex.states) {
      for (const auto& succ : successors(st, c.scenario)) {
        CHECK_FALSE(st.trajectory.contains(succ.edge));
        for (const auto& produced : succ.states) CHECK(produced.trajectory.contains(succ.edge));
      }
      for (const auto& id : st.trajectory) {
        for (const auto& pre : c.scenario.edge(id).prerequisites) CHECK(st.trajectory.contains(pre));
      }
    }
  }
}

TEST_CASE("expansion respects its cap") {
  auto s = battery_document().scenario;
  ExpansionOptions options;
  options.cap = 3;
  CHECK_THROWS_AS(expand(s, options), ExpansionCapExceeded);
}

TEST_CASE("pruned states are kept but not expanded") {
  auto s = testing::figure1_scenario();
  ExpansionOptions options;
  options.prune = [](const AugmentedState& st) { return st.component == "v1"; };
  auto ex = expand(s, options);
  CHECK(ex.states.size() == 2);
}

TEST_CASE("unknown component is an error") {
  auto s = battery_document().scenario;
  CHECK_THROWS_AS(successors({"nope", {}, {}}, s), ModelError);
}
