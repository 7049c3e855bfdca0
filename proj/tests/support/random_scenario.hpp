#pragma once

#include <cstdint>
#include <random>

#include "triage/model.hpp"

namespace triage::testing {

struct RandomScenarioOptions {
  int max_components = 6;  // hard limit 10
  int max_edges = 9;       // hard limit 12
  AccountingMode accounting = AccountingMode::Incremental;
  bool budgets = true;
  bool gates = true;
  bool health_scaled = true;
  bool reveal_edges = true;
  bool negligible = true;
  bool aggregators = true;
  bool null_options = true;
};

struct RandomCase {
  Scenario scenario;
  Observations obs;
};

// Always valid. Component c0 is the root, an optional second root is c1
// (when nothing spawns it). Children get higher ids than their parents, so
// the component graph is acyclic; prerequisites only point at earlier edges.
RandomCase random_case(std::uint64_t seed, const RandomScenarioOptions& options = {});

// Physical graph of the figure used to motivate state augmentation:
// v0 -e0-> v1, v1 -e1-> v2, v2 -e2-> v3, v1 -e3-> v4, v2 -e4-> v4,
// v4 -e5-> v5. Every edge consumes its source.
Scenario figure1_scenario();

}  // namespace triage::testing
