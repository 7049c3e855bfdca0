#pragma once

#include <cstddef>
#include <stdexcept>

#include "triage/model.hpp"
#include "triage/solver.hpp"

namespace triage {

class OracleCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleOptions {
  std::size_t cap = 1'000'000;  // enumeration nodes visited before giving up
};

// Independent exhaustive check of the solver. Enumerates every admissible
// routing tree: each component either commits to an option or executes one
// of its edges, children inherit the parent's trajectory, and budgets are
// checked on the routing's total usage. Routing totals are computed from
// scratch at each leaf.
//
// Shares nothing with the solver beyond the model and valuation modules:
// gating, precedence, budgets and reward accounting are re-derived here.
Solution brute_force_oracle(const Scenario& scenario, const Observations& obs, const OracleOptions& options = {});

}  // namespace triage
