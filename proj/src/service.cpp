#include "triage/service.hpp"

#include <sstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "triage/report.hpp"
#include "triage/scenario_io.hpp"

namespace triage {

using nlohmann::json;

namespace {

struct HttpError {
  int status;
  std::string code;
  std::string message;
  std::optional<std::string> reason_code;
  json extra = json::object();
};

json session_view(const Session& s) {
  return {{"id", s.id()},
          {"scenario", {{"name", s.scenario().name},
                        {"accounting", std::string(to_string(s.scenario().accounting))},
                        {"roots", s.scenario().roots}}},
          {"observations", to_json(s.observations())},
          {"frontier", frontier_json(s.scenario(), s.observations(), s.frontier())},
          {"history_length", s.history().size()}};
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw HttpError{400, "bad-request", std::string("malformed JSON body: ") + e.what(), std::nullopt};
  }
}

Observations parse_overrides(const httplib::Request& req) {
  Observations out;
  auto count = req.get_param_value_count("override");
  for (std::size_t i = 0; i < count; ++i) {
    std::stringstream in(req.get_param_value("override", i));
    std::string item;
    while (std::getline(in, item, ',')) {
      auto colon = item.rfind(':');
      if (colon == std::string::npos || colon == 0) {
        throw HttpError{400, "bad-request", "override must look like component:health, got '" + item + "'",
                        std::nullopt};
      }
      try {
        std::size_t used = 0;
        auto text = item.substr(colon + 1);
        double h = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        out.health[item.substr(0, colon)] = h;
      } catch (const std::logic_error&) {
        throw HttpError{400, "bad-request", "invalid health in override '" + item + "'", std::nullopt};
      }
    }
  }
  return out;
}

std::pair<Scenario, Observations> scenario_from_request(const json& body) {
  Scenario scenario;
  Observations obs;
  if (body.contains("builtin")) {
    auto which = body.at("builtin").is_string() ? parse_battery_case(body.at("builtin").get<std::string>()) : std::nullopt;
    if (!which) throw HttpError{400, "bad-request", "builtin must be \"A\", \"B\" or \"C\"", std::nullopt};
    auto battery = builtin_battery_case(*which, body.value("paper_figures", false));
    scenario = std::move(battery.scenario);
    obs = std::move(battery.observations);
  } else if (body.contains("scenario")) {
    auto doc = parse_scenario(body.at("scenario"));
    scenario = std::move(doc.scenario);
    if (body.contains("observation_set")) {
      auto name = body.at("observation_set").get<std::string>();
      auto it = doc.observation_sets.find(name);
      if (it == doc.observation_sets.end()) {
        throw HttpError{422, "validation", "no observation set named '" + name + "'", std::nullopt};
      }
      obs = it->second;
    }
  } else {
    throw HttpError{400, "bad-request", "body needs 'builtin' or 'scenario'", std::nullopt};
  }
  if (body.contains("observations")) {
    for (const auto& [id, h] : parse_observations(body.at("observations")).health) obs.health[id] = h;
  }
  if (body.contains("accounting")) {
    auto mode = parse_accounting_mode(body.at("accounting").get<std::string>());
    if (!mode) throw HttpError{400, "bad-request", "accounting must be \"incremental\" or \"path\"", std::nullopt};
    scenario.accounting = *mode;
  }
  return {std::move(scenario), std::move(obs)};
}

}  // namespace

struct Service::Impl {
  explicit Impl(ServiceOptions opts) : options(std::move(opts)), store(options.snapshot_dir) { routes(); }

  ServiceOptions options;
  SessionStore store;
  httplib::Server server;
  std::thread thread;

  void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  // Runs a handler and turns every failure into the error body.
  template <class F>
  httplib::Server::Handler wrap(F f) {
    return [this, f](const httplib::Request& req, httplib::Response& res) {
      HttpError err{500, "internal", "", std::nullopt};
      try {
        f(req, res);
        return;
      } catch (const HttpError& e) {
        err = e;
      } catch (const SessionError& e) {
        err = {e.code() == "not-found" ? 404 : 409, e.code(), e.what(), std::nullopt};
      } catch (const ValidationError& e) {
        json violations = json::array();
        for (const auto& v : e.report()) {
          violations.push_back({{"code", v.code}, {"subject", v.subject}, {"message", v.message}});
        }
        err = {422, "validation", e.what(), std::nullopt, {{"violations", violations}}};
      } catch (const InadmissibleAction& e) {
        std::optional<std::string> reason;
        if (e.reason()) reason = std::string(to_string(*e.reason()));
        err = {409, "inadmissible", e.what(), reason};
      } catch (const ParseError& e) {
        err = {400, "bad-request", e.what(), std::nullopt};
      } catch (const ModelError& e) {
        err = {422, "unknown-reference", e.what(), std::nullopt};
      } catch (const json::exception& e) {
        err = {400, "bad-request", e.what(), std::nullopt};
      } catch (const std::exception& e) {
        err = {500, "internal", e.what(), std::nullopt};
      }
      json body = {{"code", err.code}, {"message", err.message}};
      if (err.reason_code) body["reason_code"] = *err.reason_code;
      body.update(err.extra);
      spdlog::debug("{} {} -> {} {}", req.method, req.path, err.status, err.message);
      send(res, err.status, body);
    };
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
      spdlog::info("{} {} {}", req.method, req.path, res.status);
    });

    server.Get("/v1/health", wrap([this](const httplib::Request&, httplib::Response& res) {
                 send(res, 200, {{"status", "ok"}, {"sessions", store.size()}});
               }));

    server.Post("/v1/sessions", wrap([this](const httplib::Request& req, httplib::Response& res) {
                  auto [scenario, obs] = scenario_from_request(parse_body(req));
                  auto id = store.create(std::move(scenario), std::move(obs));
                  send(res, 201, store.read(id, [](const Session& s) { return session_view(s); }));
                }));

    server.Get("/v1/sessions/:id", wrap([this](const httplib::Request& req, httplib::Response& res) {
                 send(res, 200, store.read(req.path_params.at("id"), [](const Session& s) { return session_view(s); }));
               }));

    server.Post("/v1/sessions/:id/observations",
                wrap([this](const httplib::Request& req, httplib::Response& res) {
                  auto body = parse_body(req);
                  if (!body.contains("component") || !body.contains("health") || !body.at("health").is_number()) {
                    throw HttpError{400, "bad-request", "body needs 'component' and numeric 'health'", std::nullopt};
                  }
                  auto component = body.at("component").get<std::string>();
                  double health = body.at("health").get<double>();
                  send(res, 200, store.write(req.path_params.at("id"), [&](Session& s) {
                         s.observe(component, health);
                         return session_view(s);
                       }));
                }));

    server.Get("/v1/sessions/:id/recommendations",
               wrap([this](const httplib::Request& req, httplib::Response& res) {
                 auto overrides = parse_overrides(req);
                 send(res, 200, store.read(req.path_params.at("id"), [&](const Session& s) {
                        auto body = to_json(s.recommendations(overrides));
                        body["session"] = s.id();
                        body["overrides"] = to_json(overrides);
                        return body;
                      }));
               }));

    server.Post("/v1/sessions/:id/actions", wrap([this](const httplib::Request& req, httplib::Response& res) {
                  auto body = parse_body(req);
                  if (!body.contains("component") || !body.contains("action")) {
                    throw HttpError{400, "bad-request", "body needs 'component' and 'action'", std::nullopt};
                  }
                  FrontierAction action{body.at("component").get<std::string>(),
                                        parse_action(body.at("action"), "/action")};
                  send(res, 200, store.write(req.path_params.at("id"), [&](Session& s) {
                         auto reward = s.act(action);
                         return json{{"reward", money_json(reward)}, {"session", session_view(s)}};
                       }));
                }));

    server.Post("/v1/sessions/:id/undo", wrap([this](const httplib::Request& req, httplib::Response& res) {
                  send(res, 200, store.write(req.path_params.at("id"), [](Session& s) {
                         s.undo();
                         return session_view(s);
                       }));
                }));

    server.Get("/v1/sessions/:id/history", wrap([this](const httplib::Request& req, httplib::Response& res) {
                 send(res, 200, store.read(req.path_params.at("id"), [](const Session& s) {
                        json events = json::array();
                        for (const auto& e : s.history()) events.push_back(to_json(e));
                        return json{{"session", s.id()}, {"events", events}};
                      }));
               }));
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() { stop(); }

bool Service::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int Service::start_background(const std::string& host) {
  int port = impl_->server.bind_to_any_port(host);
  if (port < 0) return -1;
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void Service::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

SessionStore& Service::store() { return impl_->store; }

}  // namespace triage
