#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "triage/solver.hpp"

namespace triage {

class SessionError : public std::runtime_error {
 public:
  SessionError(std::string code, const std::string& message) : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct SessionEvent {
  enum class Kind { Observation, Action };
  Kind kind = Kind::Observation;
  Id component;
  double health = 0.0;  // observations
  Action action;        // actions
  Money reward;         // realized stage reward of an action
  bool operator==(const SessionEvent&) const = default;
};

nlohmann::json to_json(const SessionEvent& event);
SessionEvent parse_session_event(const nlohmann::json& doc);

// One live triage run. Not synchronised; SessionStore serialises access.
class Session {
 public:
  // Throws ValidationError for an invalid scenario or observations.
  Session(std::string id, Scenario scenario, Observations initial);
  // Rebuilds a session by replaying `history` from the initial state.
  Session(std::string id, Scenario scenario, Observations initial, const std::vector<SessionEvent>& history);

  const std::string& id() const { return id_; }
  const Scenario& scenario() const { return scenario_; }
  const Observations& initial_observations() const { return initial_; }
  const Observations& observations() const { return obs_; }
  const FrontierState& frontier() const { return frontier_; }
  const std::vector<SessionEvent>& history() const { return history_; }

  // Throws ValidationError for an unknown component or out-of-range health.
  void observe(const Id& component, double health);
  // Throws InadmissibleAction or ModelError; the session is unchanged then.
  Money act(const FrontierAction& action);
  // Throws SessionError("empty-history").
  void undo();

  // Explanation of the current frontier. `overrides` replace individual
  // health readings for this query only.
  Explanation recommendations(const Observations& overrides = {}) const;

 private:
  void apply(const SessionEvent& event);
  void rebuild();

  struct CachedSolver {
    explicit CachedSolver(Solver s) : solver(std::move(s)) {}
    std::mutex mutex;
    Solver solver;
  };
  std::shared_ptr<CachedSolver> solver_for(const Observations& obs) const;

  std::string id_;
  Scenario scenario_;
  Observations initial_;
  Observations obs_;
  FrontierState frontier_;
  std::vector<SessionEvent> history_;

  mutable std::mutex cache_mutex_;
  mutable std::map<std::string, std::shared_ptr<CachedSolver>> solvers_;
};

// Snapshot form: scenario, initial observations and history.
nlohmann::json session_snapshot(const Session& session);
std::unique_ptr<Session> restore_session(const nlohmann::json& snapshot);

// Thread-safe registry. Operations on one session are linearised by its
// lock; reads share it. Distinct sessions never contend beyond the map
// lookup.
class SessionStore {
 public:
  explicit SessionStore(std::optional<std::filesystem::path> snapshot_dir = std::nullopt);

  // Returns the new session id.
  std::string create(Scenario scenario, Observations initial);

  // Throw SessionError("not-found") for unknown ids.
  template <class F>
  auto read(const std::string& id, F&& f) {
    auto entry = find(id);
    std::shared_lock lock(entry->mutex);
    return f(static_cast<const Session&>(*entry->session));
  }

  template <class F>
  auto write(const std::string& id, F&& f) {
    auto entry = find(id);
    std::unique_lock lock(entry->mutex);
    if constexpr (std::is_void_v<decltype(f(*entry->session))>) {
      f(*entry->session);
      persist(*entry->session);
    } else {
      auto result = f(*entry->session);
      persist(*entry->session);
      return result;
    }
  }

  std::size_t size() const;
  // Number of sessions restored from the snapshot directory at startup.
  std::size_t restored() const { return restored_; }

 private:
  struct Entry {
    std::shared_mutex mutex;
    std::unique_ptr<Session> session;
  };
  std::shared_ptr<Entry> find(const std::string& id) const;
  void persist(const Session& session) const;
  std::string fresh_id();

  std::optional<std::filesystem::path> snapshot_dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::size_t restored_ = 0;
  std::mutex rng_mutex_;
  std::uint64_t rng_state_;
};

}  // namespace triage
