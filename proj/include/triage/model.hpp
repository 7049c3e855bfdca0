#pragma once

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "triage/units.hpp"

namespace triage {

using Id = std::string;
using IdSet = std::set<Id>;
// Executed disassembly edges. Histories are sets: ordering is recoverable
// from precedence when it is needed for display.
using EdgeSet = std::set<Id>;

enum class AggregatorKind { Mean, Min };

struct AggregatorChild {
  Id component;
  double weight = 1.0;
  bool operator==(const AggregatorChild&) const = default;
};

// How a composite derives its health from its parts when it has no direct
// observation. Both variants are monotone and permutation-invariant.
struct HealthAggregator {
  AggregatorKind kind = AggregatorKind::Mean;
  std::vector<AggregatorChild> children;
  bool operator==(const HealthAggregator&) const = default;
};

struct Component {
  Id id;
  std::string name;
  std::vector<Id> option_ids;
  double safety_score = 0.0;
  // The health observation is usable only once all of these are executed.
  IdSet health_reveal_edges;
  std::optional<HealthAggregator> aggregator;
  // Auto-terminates with utility 0 as soon as it is produced.
  bool negligible = false;
  bool operator==(const Component&) const = default;
};

struct DisassemblyEdge {
  Id id;
  Id applies_to;
  IdSet prerequisites;  // edges that must already be in the trajectory
  Quantity time;
  Money cost;
  std::map<std::string, Quantity> resources;
  std::vector<Id> spawns;
  bool consumes_source = false;

  // The source leaves the frontier only if something replaces it.
  bool removes_source() const { return consumes_source && !spawns.empty(); }
  bool operator==(const DisassemblyEdge&) const = default;
};

enum class OptionKind { Reuse, Repurpose, Recycle, Disposal, Null };

struct FixedRevenue {
  Money amount;
  bool operator==(const FixedRevenue&) const = default;
};
struct HealthScaledRevenue {
  Money baseline;
  double rvr_lo = 0.0;
  double rvr_hi = 1.0;
  bool operator==(const HealthScaledRevenue&) const = default;
};
// A directly stated revenue, used to reproduce published hand calculations.
struct OverrideRevenue {
  Money amount;
  bool operator==(const OverrideRevenue&) const = default;
};
using RevenueModel = std::variant<FixedRevenue, HealthScaledRevenue, OverrideRevenue>;

struct CEOption {
  Id id;
  OptionKind kind = OptionKind::Recycle;
  RevenueModel revenue = FixedRevenue{};
  Money proc_cost;
  IdSet gate_requires;
  IdSet gate_forbids;
  std::optional<double> min_health;
  double safety_max = std::numeric_limits<double>::infinity();
  bool operator==(const CEOption&) const = default;
};

struct Budgets {
  std::optional<Quantity> time_max;
  std::map<std::string, Quantity> resource_caps;
  bool operator==(const Budgets&) const = default;
};

enum class AccountingMode { Incremental, PathAttribution };

struct Scenario {
  std::string name;
  std::vector<Component> components;
  std::vector<DisassemblyEdge> edges;
  std::vector<CEOption> options;
  std::vector<Id> roots;
  Budgets budgets;
  AccountingMode accounting = AccountingMode::Incremental;

  const Component* find_component(std::string_view id) const;
  const DisassemblyEdge* find_edge(std::string_view id) const;
  const CEOption* find_option(std::string_view id) const;
  const Component& component(std::string_view id) const;  // throws ModelError
  const DisassemblyEdge& edge(std::string_view id) const;
  const CEOption& option(std::string_view id) const;
  // Edges whose source is `component`, sorted by id.
  std::vector<const DisassemblyEdge*> edges_on(std::string_view component) const;

  bool operator==(const Scenario&) const = default;
};

struct Observations {
  std::map<Id, double> health;
  bool operator==(const Observations&) const = default;
};

enum class ActionKind { Edge, Commit };

// Either a disassembly edge or a commitment to a CE option.
struct Action {
  ActionKind kind = ActionKind::Edge;
  Id id;

  static Action edge(Id id) { return {ActionKind::Edge, std::move(id)}; }
  static Action commit(Id id) { return {ActionKind::Commit, std::move(id)}; }
  bool is_edge() const { return kind == ActionKind::Edge; }
  std::string to_string() const;
  auto operator<=>(const Action&) const = default;
};

struct Violation {
  std::string code;
  Id subject;
  std::string message;
  auto operator<=>(const Violation&) const = default;
};
using ValidationReport = std::vector<Violation>;

// Reports every violated structural invariant, sorted by subject id.
ValidationReport validate_scenario(const Scenario& scenario);
ValidationReport validate_observations(const Scenario& scenario, const Observations& obs);

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

// Throws ValidationError when either report is non-empty.
void require_valid(const Scenario& scenario, const Observations* obs = nullptr);

std::string_view to_string(OptionKind kind);
std::optional<OptionKind> parse_option_kind(std::string_view text);
std::string_view to_string(AccountingMode mode);
std::optional<AccountingMode> parse_accounting_mode(std::string_view text);
std::string_view to_string(AggregatorKind kind);

}  // namespace triage
