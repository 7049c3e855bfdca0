#include <doctest.h>

#include <random>

#include "random_scenario.hpp"
#include "triage/scenario_io.hpp"
#include "triage/solver.hpp"
#include "triage/valuation.hpp"

using namespace triage;

namespace {

const double kTol = 1e-9;

Scenario battery(AccountingMode mode = AccountingMode::Incremental) {
  auto s = battery_document().scenario;
  s.accounting = mode;
  return s;
}

Observations all_healthy() { return {{{"P", 0.92}, {"M1", 0.92}, {"M2", 0.72}}}; }

}  // namespace

TEST_CASE("residual value ratio") {
  CHECK(rvr(0.85, 1.0, 0.92) == doctest::Approx(0.07 / 0.15).epsilon(kTol));
  CHECK(rvr(0.60, 0.90, 0.92) == 1.0);
  CHECK(rvr(0.60, 0.90, 0.60) == 0.0);
  CHECK(rvr(0.60, 0.90, 0.10) == 0.0);
  CHECK_THROWS_AS(rvr(0.9, 0.9, 0.5), ValuationError);
}

TEST_CASE("rvr stays in [0,1] and never decreases with health") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    double lo = u(rng) * 0.9;
    double hi = lo + 0.01 + u(rng) * (1.0 - lo - 0.01);
    double h1 = u(rng), h2 = u(rng);
    double r1 = rvr(lo, hi, h1), r2 = rvr(lo, hi, h2);
    CHECK(r1 >= 0.0);
    CHECK(r1 <= 1.0);
    if (h1 <= h2) CHECK(r1 <= r2);
  }
}

TEST_CASE("health aggregation") {
  std::vector<WeightedHealth> modules{{0.92, 1.0}, {0.72, 1.0}};
  CHECK(aggregate_health(modules, AggregatorKind::Mean) == doctest::Approx(0.82).epsilon(kTol));
  CHECK(aggregate_health(modules, AggregatorKind::Min) == 0.72);
  std::vector<WeightedHealth> single{{0.5, 3.0}};
  CHECK(aggregate_health(single, AggregatorKind::Mean) == 0.5);
  CHECK_THROWS_AS(aggregate_health(std::vector<WeightedHealth>{}, AggregatorKind::Min), ValuationError);
}

TEST_CASE("pack health falls back to the module average") {
  auto s = battery();
  Observations obs{{{"M1", 0.92}, {"M2", 0.72}}};
  auto h = resolve_health(s, obs, "P");
  REQUIRE(h.has_value());
  CHECK(*h == doctest::Approx(0.82).epsilon(kTol));
  CHECK_FALSE(resolve_health(s, Observations{}, "P").has_value());
}

TEST_CASE("module health is hidden until its diagnostic edge has run") {
  auto s = battery();
  auto obs = all_healthy();
  CHECK_FALSE(visible_health(s, obs, {"M1", {"e_iso", "e_cov", "e_M1"}, {}}).has_value());
  CHECK(visible_health(s, obs, {"M1", {"e_iso", "e_cov", "e_M1", "e_diag_M1"}, {}}) == 0.92);
  CHECK(visible_health(s, obs, {"P", {}, {}}) == 0.92);
}

TEST_CASE("revenue table") {
  auto s = battery();
  CHECK(option_revenue(s.option("P_recycle"), std::nullopt) == Money::whole(50));
  CHECK(option_revenue(s.option("M1_disposal"), std::nullopt) == Money::whole(-10));
  CHECK(option_revenue(s.option("P_reuse"), 0.92) == Money::whole(280));
  CHECK(option_revenue(s.option("P_repurpose"), 0.92) == Money::whole(250));
  CHECK_THROWS_AS(option_revenue(s.option("P_reuse"), std::nullopt), ValuationError);
  CEOption fixed_override;
  fixed_override.revenue = OverrideRevenue{Money::whole(183)};
  CHECK(option_revenue(fixed_override, std::nullopt) == Money::whole(183));
}

TEST_CASE("path-attributed option utilities") {
  auto s = battery(AccountingMode::PathAttribution);
  auto obs = all_healthy();
  const auto path = AccountingMode::PathAttribution;

  auto reuse = option_utility({"P", {"e_iso"}, {}}, s.option("P_reuse"), obs, s, path);
  CHECK(reuse.revenue == Money::whole(280));
  CHECK(reuse.path_cost == Money::whole(10));
  CHECK(reuse.proc_cost == Money::whole(60));
  CHECK(reuse.utility == Money::whole(210));

  CHECK(option_utility({"P", {"e_iso"}, {}}, s.option("P_recycle"), obs, s, path).utility == Money::whole(30));

  EdgeSet extracted{"e_iso", "e_cov", "e_M1"};
  CHECK(option_utility({"M1", extracted, {}}, s.option("M1_recycle"), obs, s, path).utility == Money::whole(-15));
  CHECK(option_utility({"M1", extracted, {}}, s.option("M1_disposal"), obs, s, path).utility == Money::whole(-80));
  extracted.insert("e_diag_M1");
  CHECK(option_utility({"M1", extracted, {}}, s.option("M1_recycle"), obs, s, path).utility == Money::whole(-25));
  CHECK(option_utility({"M1", extracted, {}}, s.option("M1_disposal"), obs, s, path).utility == Money::whole(-90));
}

TEST_CASE("incremental option utilities carry no path cost") {
  auto s = battery();
  auto u = option_utility({"P", {"e_iso"}, {}}, s.option("P_recycle"), all_healthy(), s, AccountingMode::Incremental);
  CHECK(u.path_cost == Money{});
  CHECK(u.utility == Money::whole(40));
  CHECK(u.utility == u.revenue - u.path_cost - u.proc_cost);
}

TEST_CASE("inadmissible option utilities are refused") {
  auto s = battery();
  CHECK_THROWS_AS(option_utility({"P", {}, {}}, s.option("P_recycle"), all_healthy(), s, AccountingMode::Incremental),
                  InadmissibleAction);
}

TEST_CASE("stage rewards") {
  auto s = battery();
  auto obs = all_healthy();
  BudgetUsage none;
  CHECK(stage_reward({"P", {}, {}}, Action::edge("e_iso"), obs, s, AccountingMode::Incremental, none) ==
        Money::whole(-10));
  CHECK(stage_reward({"P", {}, {}}, Action::edge("e_iso"), obs, s, AccountingMode::PathAttribution, none) == Money{});
  CHECK(stage_reward({"P", {"e_iso"}, {}}, Action::commit("P_recycle"), obs, s, AccountingMode::Incremental, none) ==
        Money::whole(40));
}

TEST_CASE("null commit under path attribution pays only unattributed edges") {
  auto s = battery(AccountingMode::PathAttribution);
  auto obs = all_healthy();
  AugmentedState shell{"P", {"e_iso", "e_cov", "e_M1"}, {}};
  CHECK(option_utility(shell, s.option("P_null"), obs, s, AccountingMode::PathAttribution).utility ==
        Money::whole(-65));
  CHECK(option_utility(shell, s.option("P_null"), obs, s, AccountingMode::PathAttribution, {"e_iso", "e_cov"})
            .utility == Money::whole(-30));
}

TEST_CASE("health-scaled utility never decreases with health") {
  auto s = battery(AccountingMode::PathAttribution);
  Money previous = Money::whole(-1'000'000);
  for (int i = 90; i <= 100; ++i) {
    Observations obs{{{"P", i / 100.0}}};
    auto u = option_utility({"P", {"e_iso"}, {}}, s.option("P_reuse"), obs, s, AccountingMode::PathAttribution);
    CHECK(u.utility >= previous);
    previous = u.utility;
  }
}

namespace {

// Run totals of every complete routing reachable by always taking the
// first admissible action of some component, for a handful of orders.
Money run_total(Scenario s, const Observations& obs, const std::vector<std::size_t>& choices) {
  auto frontier = initial_frontier(s);
  std::size_t i = 0;
  while (!frontier.complete()) {
    auto actions = frontier_actions(frontier, s, obs);
    if (actions.empty()) return Money::whole(-999'999);
    auto pick = actions[choices[i++ % choices.size()] % actions.size()];
    frontier = apply_action(frontier, pick, s, obs).next;
  }
  return frontier.realized;
}

}  // namespace

TEST_CASE("single-component routings total the same in both modes") {
  std::mt19937_64 rng(11);
  int compared = 0;
  for (std::uint64_t seed = 0; seed < 400 && compared < 200; ++seed) {
    auto c = testing::random_case(seed, {.max_components = 1, .max_edges = 5});
    std::vector<std::size_t> choices(12);
    for (auto& ch : choices) ch = rng() % 5;
    auto incremental = c.scenario;
    incremental.accounting = AccountingMode::Incremental;
    auto path = c.scenario;
    path.accounting = AccountingMode::PathAttribution;
    auto a = run_total(incremental, c.obs, choices);
    auto b = run_total(path, c.obs, choices);
    if (a == Money::whole(-999'999)) continue;
    CHECK(a == b);
    ++compared;
  }
  CHECK(compared >= 200);
}

TEST_CASE("path attribution never totals more than incremental for the same routing") {
  std::mt19937_64 rng(12);
  int compared = 0;
  for (std::uint64_t seed = 0; seed < 600 && compared < 200; ++seed) {
    auto c = testing::random_case(seed, {.max_components = 6, .max_edges = 9});
    std::vector<std::size_t> choices(30);
    for (auto& ch : choices) ch = rng() % 7;
    auto incremental = c.scenario;
    incremental.accounting = AccountingMode::Incremental;
    auto path = c.scenario;
    path.accounting = AccountingMode::PathAttribution;
    auto a = run_total(incremental, c.obs, choices);
    auto b = run_total(path, c.obs, choices);
    if (a == Money::whole(-999'999)) continue;
    CHECK(b <= a);
    ++compared;
  }
  CHECK(compared >= 200);
}
