#include "triage/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "triage/oracle.hpp"
#include "triage/report.hpp"
#include "triage/scenario_io.hpp"
#include "triage/service.hpp"

namespace triage {

using nlohmann::json;

void configure_logging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_color_mt("triage");
    spdlog::set_default_logger(logger);
  });
  const char* env = std::getenv("TRIAGE_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

namespace {

// Failures that map straight to an exit code and a stderr line.
struct CliFailure {
  int code;
  std::string message;
};

struct InputFlags {
  std::string scenario;
  std::string observations;
  std::string obs;
  std::string obs_set;
  std::string accounting;
  std::string output = "table";
};

void add_input_flags(CLI::App* cmd, InputFlags& f, bool scenario_required = true) {
  auto* opt = cmd->add_option("--scenario", f.scenario, "scenario document (JSON)");
  if (scenario_required) opt->required();
  cmd->add_option("--observations", f.observations, "observations file: {\"P\": 0.92, ...}");
  cmd->add_option("--obs", f.obs, "inline observations: P=0.92,M1=0.5");
  cmd->add_option("--obs-set", f.obs_set, "named observation set inside the scenario document");
  cmd->add_option("--accounting", f.accounting, "incremental|path (default: from the scenario)")
      ->check(CLI::IsMember({"incremental", "path"}));
  cmd->add_option("--output", f.output, "json|table")->check(CLI::IsMember({"json", "table"}));
}

std::string read_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw CliFailure{kExitUsage, "file not found: " + path};
  std::ifstream in(path);
  if (!in) throw CliFailure{kExitUsage, "cannot read file: " + path};
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw CliFailure{kExitFailure, path + ": malformed JSON: " + e.what()};
  }
}

void apply_accounting(Scenario& scenario, const std::string& flag) {
  if (flag.empty()) return;
  scenario.accounting = *parse_accounting_mode(flag);
}

struct Inputs {
  Scenario scenario;
  Observations obs;
};

Inputs load_inputs(const InputFlags& f) {
  auto doc = load_scenario(read_file(f.scenario));
  Inputs in{std::move(doc.scenario), {}};
  if (!f.obs_set.empty()) {
    auto it = doc.observation_sets.find(f.obs_set);
    if (it == doc.observation_sets.end()) throw CliFailure{kExitUsage, "no observation set named '" + f.obs_set + "'"};
    in.obs = it->second;
  } else if (doc.observation_sets.size() == 1 && f.observations.empty()) {
    in.obs = doc.observation_sets.begin()->second;
  } else if (doc.observation_sets.size() > 1 && f.observations.empty() && f.obs.empty()) {
    std::string names;
    for (const auto& [name, _] : doc.observation_sets) names += (names.empty() ? "" : ", ") + name;
    throw CliFailure{kExitUsage, "scenario has several observation sets (" + names + "); pick one with --obs-set"};
  }
  if (!f.observations.empty()) {
    for (const auto& [id, h] : parse_observations(read_json(f.observations)).health) in.obs.health[id] = h;
  }
  if (!f.obs.empty()) {
    for (const auto& [id, h] : parse_observation_list(f.obs).health) in.obs.health[id] = h;
  }
  apply_accounting(in.scenario, f.accounting);
  require_valid(in.scenario, &in.obs);
  return in;
}

// Resolves "e_iso,P_reuse" against the frontier: edge ids act on their own
// component, option ids on the live component that offers them.
FrontierState advance(const Scenario& scenario, const Observations& obs, const std::string& list) {
  auto frontier = initial_frontier(scenario);
  std::stringstream in(list);
  std::string id;
  while (std::getline(in, id, ',')) {
    if (id.empty()) continue;
    std::optional<FrontierAction> action;
    if (const auto* edge = scenario.find_edge(id)) {
      action = FrontierAction{edge->applies_to, Action::edge(id)};
    } else if (scenario.find_option(id)) {
      for (const auto& state : frontier.live) {
        const auto& ids = scenario.component(state.component).option_ids;
        if (std::find(ids.begin(), ids.end(), id) != ids.end()) {
          action = FrontierAction{state.component, Action::commit(id)};
          break;
        }
      }
      if (!action) throw CliFailure{kExitFailure, "no live component offers option '" + id + "'"};
    } else {
      throw CliFailure{kExitFailure, "unknown edge or option '" + id + "'"};
    }
    frontier = apply_action(frontier, *action, scenario, obs).next;
  }
  return frontier;
}

int print_solution(const Solution& sol, const std::string& output, std::ostream& out, json extra = json::object()) {
  if (output == "json") {
    auto body = to_json(sol);
    body.update(extra);
    out << body.dump(2) << '\n';
  } else {
    out << solution_table(sol);
  }
  return sol.value.feasible() ? kExitOk : kExitFailure;
}

int print_explanation(const Explanation& ex, const std::string& output, std::ostream& out) {
  if (output == "json") {
    out << to_json(ex).dump(2) << '\n';
  } else {
    out << explanation_table(ex);
  }
  return ex.value.feasible() ? kExitOk : kExitFailure;
}

std::string usage_of(const CLI::App& app) {
  auto text = app.help();
  return text;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging();

  CLI::App app{"Disassembly triage: exact stop-or-continue routing for end-of-life products", "triage"};
  app.require_subcommand(1);

  InputFlags flags;
  std::string policy_path;
  std::string after;
  bool augmented = false;

  auto* solve_cmd = app.add_subcommand("solve", "optimal routing and policy");
  add_input_flags(solve_cmd, flags);
  auto* oracle_cmd = app.add_subcommand("oracle", "exhaustive enumeration (for checking the solver)");
  add_input_flags(oracle_cmd, flags);
  auto* eval_cmd = app.add_subcommand("eval", "expected total of a given policy");
  add_input_flags(eval_cmd, flags);
  eval_cmd->add_option("--policy", policy_path, "policy document (JSON)")->required();
  auto* explain_cmd = app.add_subcommand("explain", "per-action rewards and continuation values");
  add_input_flags(explain_cmd, flags);
  explain_cmd->add_option("--after", after, "actions already taken, e.g. e_iso,e_cov");
  auto* dot_cmd = app.add_subcommand("export-dot", "Graphviz view of the product graph");
  add_input_flags(dot_cmd, flags);
  dot_cmd->add_flag("--augmented", augmented, "draw (component, trajectory) states");
  auto* validate_cmd = app.add_subcommand("validate", "check a scenario document");
  add_input_flags(validate_cmd, flags);

  std::string battery_case;
  bool do_solve = false, do_oracle = false, do_explain = false, paper_figures = false;
  auto* battery_cmd = app.add_subcommand("battery", "the bundled EV battery pack example");
  battery_cmd->add_option("--case", battery_case, "A|B|C")->required()->check(CLI::IsMember({"A", "B", "C"}));
  battery_cmd->add_flag("--solve", do_solve, "solve (default when nothing else is asked)");
  battery_cmd->add_flag("--oracle", do_oracle, "run the exhaustive oracle");
  battery_cmd->add_flag("--explain", do_explain, "explain the frontier");
  battery_cmd->add_flag("--paper-figures", paper_figures, "published revenue overrides with path attribution");
  battery_cmd->add_option("--after", after, "actions already taken before --explain");
  battery_cmd->add_option("--accounting", flags.accounting, "incremental|path")
      ->check(CLI::IsMember({"incremental", "path"}));
  battery_cmd->add_option("--obs", flags.obs, "override readings: M1=0.79");
  battery_cmd->add_option("--output", flags.output, "json|table")->check(CLI::IsMember({"json", "table"}));

  int port = 7878;
  std::string host = "127.0.0.1";
  std::string snapshot_dir;
  std::string cors_origin = "*";
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP session service");
  serve_cmd->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", host, "bind address");
  serve_cmd->add_option("--snapshot-dir", snapshot_dir, "persist sessions here");
  serve_cmd->add_option("--cors-origin", cors_origin, "allowed browser origin");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    err << usage_of(*failing);
    return kExitUsage;
  }

  try {
    if (*solve_cmd) {
      auto in = load_inputs(flags);
      spdlog::debug("solving '{}' ({} accounting)", in.scenario.name, to_string(in.scenario.accounting));
      return print_solution(solve(in.scenario, in.obs), flags.output, out);
    }
    if (*oracle_cmd) {
      auto in = load_inputs(flags);
      return print_solution(brute_force_oracle(in.scenario, in.obs), flags.output, out);
    }
    if (*eval_cmd) {
      auto in = load_inputs(flags);
      auto policy = parse_policy(read_json(policy_path));
      double value = evaluate_policy(in.scenario, in.obs, policy);
      if (flags.output == "json") {
        out << json{{"value", value}, {"accounting", std::string(to_string(in.scenario.accounting))}}.dump(2) << '\n';
      } else {
        out << "expected total: " << Money::from_double(value).to_string() << '\n';
      }
      return kExitOk;
    }
    if (*explain_cmd) {
      auto in = load_inputs(flags);
      return print_explanation(explain(in.scenario, in.obs, advance(in.scenario, in.obs, after)), flags.output, out);
    }
    if (*dot_cmd) {
      auto in = load_inputs(flags);
      out << export_dot(in.scenario, augmented ? DotMode::Augmented : DotMode::Physical, &in.obs);
      return kExitOk;
    }
    if (*validate_cmd) {
      auto doc = parse_scenario(read_json(flags.scenario));
      auto report = validate_scenario(doc.scenario);
      for (const auto& [name, obs] : doc.observation_sets) {
        for (auto v : validate_observations(doc.scenario, obs)) {
          v.message = "observation set '" + name + "': " + v.message;
          report.push_back(std::move(v));
        }
      }
      if (flags.output == "json") {
        json violations = json::array();
        for (const auto& v : report) violations.push_back({{"code", v.code}, {"subject", v.subject}, {"message", v.message}});
        out << json{{"valid", report.empty()}, {"violations", violations}}.dump(2) << '\n';
      } else if (report.empty()) {
        out << "valid: " << doc.scenario.components.size() << " components, " << doc.scenario.edges.size()
            << " edges, " << doc.scenario.options.size() << " options\n";
      } else {
        for (const auto& v : report) out << v.code << "  " << v.subject << "  " << v.message << '\n';
      }
      return report.empty() ? kExitOk : kExitFailure;
    }
    if (*battery_cmd) {
      auto battery = builtin_battery_case(*parse_battery_case(battery_case), paper_figures);
      apply_accounting(battery.scenario, flags.accounting);
      if (!flags.obs.empty()) {
        for (const auto& [id, h] : parse_observation_list(flags.obs).health) battery.observations.health[id] = h;
      }
      const auto& s = battery.scenario;
      const auto& obs = battery.observations;
      if (!do_oracle && !do_explain) do_solve = true;

      if (flags.output == "json") {
        json body = {{"case", battery_case}, {"scenario", s.name}, {"observations", to_json(obs)}};
        int code = kExitOk;
        if (do_solve || do_oracle) {
          auto sol = do_solve ? solve(s, obs) : brute_force_oracle(s, obs);
          body.update(to_json(sol));
          if (!sol.value.feasible()) code = kExitFailure;
          if (do_solve && do_oracle) body["oracle"] = to_json(brute_force_oracle(s, obs));
        }
        if (do_explain) body["explanation"] = to_json(explain(s, obs, advance(s, obs, after)));
        out << body.dump(2) << '\n';
        return code;
      }
      out << "battery case " << battery_case << (paper_figures ? " (paper figures)" : "") << '\n';
      int code = kExitOk;
      if (do_solve) {
        out << "-- solve\n";
        code = std::max(code, print_solution(solve(s, obs), "table", out));
      }
      if (do_oracle) {
        out << "-- oracle\n";
        code = std::max(code, print_solution(brute_force_oracle(s, obs), "table", out));
      }
      if (do_explain) {
        out << "-- explain\n";
        code = std::max(code, print_explanation(explain(s, obs, advance(s, obs, after)), "table", out));
      }
      return code;
    }
    if (*serve_cmd) {
      ServiceOptions options;
      options.cors_origin = cors_origin;
      if (!snapshot_dir.empty()) options.snapshot_dir = snapshot_dir;
      Service service(options);
      err << "listening on http://" << host << ":" << port << '\n';
      if (service.store().restored()) err << "restored " << service.store().restored() << " sessions\n";
      if (!service.listen(host, port)) {
        err << "error: cannot listen on " << host << ":" << port << '\n';
        return kExitFailure;
      }
      return kExitOk;
    }
  } catch (const CliFailure& f) {
    err << "error: " << f.message << '\n';
    return f.code;
  } catch (const ValidationError& e) {
    err << "error: invalid input\n";
    for (const auto& v : e.report()) err << "  " << v.code << "  " << v.subject << "  " << v.message << '\n';
    return kExitFailure;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace triage
