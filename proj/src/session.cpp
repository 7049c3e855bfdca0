#include "triage/session.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "triage/scenario_io.hpp"

namespace triage {

using nlohmann::json;

namespace {

constexpr std::size_t kSolverCacheLimit = 16;

std::string digest(const Observations& obs) {
  std::string out;
  char buf[40];
  for (const auto& [id, h] : obs.health) {
    std::snprintf(buf, sizeof buf, "%.17g", h);
    out += id + "=" + buf + ";";
  }
  return out;
}

}  // namespace

json to_json(const SessionEvent& event) {
  if (event.kind == SessionEvent::Kind::Observation) {
    return {{"type", "observation"}, {"component", event.component}, {"health", event.health}};
  }
  return {{"type", "action"},
          {"component", event.component},
          {"action", to_json(event.action)},
          {"reward", event.reward.to_double()}};
}

SessionEvent parse_session_event(const json& doc) {
  if (!doc.is_object() || !doc.contains("type") || !doc.contains("component")) {
    throw ParseError("", "event needs 'type' and 'component'");
  }
  SessionEvent e;
  e.component = doc.at("component").get<std::string>();
  auto type = doc.at("type").get<std::string>();
  if (type == "observation") {
    e.kind = SessionEvent::Kind::Observation;
    e.health = doc.at("health").get<double>();
  } else if (type == "action") {
    e.kind = SessionEvent::Kind::Action;
    e.action = parse_action(doc.at("action"), "/action");
    e.reward = Money::from_double(doc.value("reward", 0.0));
  } else {
    throw ParseError("/type", "unknown event type '" + type + "'");
  }
  return e;
}

Session::Session(std::string id, Scenario scenario, Observations initial)
    : id_(std::move(id)), scenario_(std::move(scenario)), initial_(std::move(initial)) {
  require_valid(scenario_, &initial_);
  rebuild();
}

Session::Session(std::string id, Scenario scenario, Observations initial, const std::vector<SessionEvent>& history)
    : Session(std::move(id), std::move(scenario), std::move(initial)) {
  for (const auto& event : history) apply(event);
}

void Session::observe(const Id& component, double health) {
  apply({SessionEvent::Kind::Observation, component, health, {}, {}});
}

Money Session::act(const FrontierAction& action) {
  apply({SessionEvent::Kind::Action, action.component, 0.0, action.action, {}});
  return history_.back().reward;
}

void Session::undo() {
  if (history_.empty()) throw SessionError("empty-history", "nothing to undo");
  history_.pop_back();
  rebuild();
}

void Session::apply(const SessionEvent& event) {
  if (event.kind == SessionEvent::Kind::Observation) {
    Observations single{{{event.component, event.health}}};
    auto report = validate_observations(scenario_, single);
    if (!report.empty()) throw ValidationError(std::move(report));
    obs_.health[event.component] = event.health;
    history_.push_back(event);
    return;
  }
  auto t = apply_action(frontier_, {event.component, event.action}, scenario_, obs_);
  frontier_ = std::move(t.next);
  SessionEvent recorded = event;
  recorded.reward = t.reward;
  history_.push_back(std::move(recorded));
}

void Session::rebuild() {
  auto events = std::move(history_);
  history_.clear();
  obs_ = initial_;
  frontier_ = initial_frontier(scenario_);
  for (const auto& event : events) apply(event);
}

std::shared_ptr<Session::CachedSolver> Session::solver_for(const Observations& obs) const {
  auto key = digest(obs);
  std::lock_guard lock(cache_mutex_);
  if (auto it = solvers_.find(key); it != solvers_.end()) return it->second;
  if (solvers_.size() >= kSolverCacheLimit) solvers_.clear();
  auto cached = std::make_shared<CachedSolver>(Solver(scenario_, obs));
  solvers_.emplace(key, cached);
  return cached;
}

Explanation Session::recommendations(const Observations& overrides) const {
  Observations effective = obs_;
  if (!overrides.health.empty()) {
    auto report = validate_observations(scenario_, overrides);
    if (!report.empty()) throw ValidationError(std::move(report));
    for (const auto& [id, h] : overrides.health) effective.health[id] = h;
  }
  auto cached = solver_for(effective);
  std::lock_guard lock(cached->mutex);
  return explain(cached->solver, frontier_);
}

json session_snapshot(const Session& session) {
  json history = json::array();
  for (const auto& e : session.history()) history.push_back(to_json(e));
  return {{"id", session.id()},
          {"scenario", to_json(ScenarioDocument{session.scenario(), {}})},
          {"initial_observations", to_json(session.initial_observations())},
          {"history", history}};
}

std::unique_ptr<Session> restore_session(const json& snapshot) {
  auto doc = parse_scenario(snapshot.at("scenario"));
  auto initial = parse_observations(snapshot.at("initial_observations"));
  std::vector<SessionEvent> history;
  for (const auto& e : snapshot.at("history")) history.push_back(parse_session_event(e));
  return std::make_unique<Session>(snapshot.at("id").get<std::string>(), std::move(doc.scenario), std::move(initial),
                                   history);
}

SessionStore::SessionStore(std::optional<std::filesystem::path> snapshot_dir)
    : snapshot_dir_(std::move(snapshot_dir)),
      rng_state_(std::random_device{}() ^
                 static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count())) {
  if (!snapshot_dir_) return;
  std::filesystem::create_directories(*snapshot_dir_);
  for (const auto& file : std::filesystem::directory_iterator(*snapshot_dir_)) {
    if (file.path().extension() != ".json") continue;
    try {
      std::ifstream in(file.path());
      auto session = restore_session(json::parse(in));
      auto entry = std::make_shared<Entry>();
      auto id = session->id();
      entry->session = std::move(session);
      sessions_.emplace(id, std::move(entry));
      ++restored_;
    } catch (const std::exception& e) {
      spdlog::warn("skipping snapshot {}: {}", file.path().string(), e.what());
    }
  }
}

std::string SessionStore::fresh_id() {
  std::lock_guard lock(rng_mutex_);
  std::mt19937_64 rng(rng_state_);
  rng_state_ = rng();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng_state_));
  return buf;
}

std::string SessionStore::create(Scenario scenario, Observations initial) {
  auto entry = std::make_shared<Entry>();
  std::string id;
  {
    std::unique_lock lock(mutex_);
    do {
      id = fresh_id();
    } while (sessions_.contains(id));
    entry->session = std::make_unique<Session>(id, std::move(scenario), std::move(initial));
    sessions_.emplace(id, entry);
  }
  persist(*entry->session);
  return id;
}

std::size_t SessionStore::size() const {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw SessionError("not-found", "unknown session '" + id + "'");
  return it->second;
}

void SessionStore::persist(const Session& session) const {
  if (!snapshot_dir_) return;
  auto target = *snapshot_dir_ / (session.id() + ".json");
  auto partial = target;
  partial += ".tmp";
  try {
    {
      std::ofstream out(partial);
      out << session_snapshot(session).dump();
    }
    std::filesystem::rename(partial, target);
  } catch (const std::exception& e) {
    spdlog::warn("could not write snapshot for {}: {}", session.id(), e.what());
  }
}

}  // namespace triage
