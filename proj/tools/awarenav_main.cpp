#include <CLI11.hpp>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <numeric>

#include "awarenav/bridge_server.hpp"
#include "awarenav/error.hpp"
#include "awarenav/harness.hpp"
#include "awarenav/live_session.hpp"
#include "awarenav/mdp_planner.hpp"
#include "awarenav/scenario.hpp"
#include "awarenav/simulator.hpp"

using namespace awarenav;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Options {
  std::string config;
  std::string seeds;
  int n = -1;
  std::string out;
  std::string format = "json";
  int budget_ms = -1;
  int k_scenarios = -1;
  int k_particles = -1;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  std::uint16_t port = 8765;
  bool trace = false;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ScenarioConfig load(const Options& o) {
  ScenarioConfig c;
  try {
    c = load_scenario(o.config);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (o.budget_ms >= 0) c.solver.time_budget_ms = o.budget_ms;
  if (o.k_scenarios >= 0) c.solver.k_scenarios = o.k_scenarios;
  if (o.k_particles >= 0) c.belief.k_particles = o.k_particles;
  try {
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

// "3", "0..24" or "1,5,9".
std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  try {
    if (const auto dots = s.find(".."); dots != std::string::npos) {
      const std::uint64_t a = std::stoull(s.substr(0, dots));
      const std::uint64_t b = std::stoull(s.substr(dots + 2));
      if (b < a) throw ConfigError("seed range is reversed: " + s);
      for (std::uint64_t x = a; x <= b; ++x) out.push_back(x);
      return out;
    }
    std::size_t pos = 0;
    while (pos <= s.size()) {
      const auto comma = s.find(',', pos);
      out.push_back(std::stoull(s.substr(pos, comma - pos)));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse --seeds '" + s + "'");
  }
  return out;
}

void write_out(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::Io, "cannot write " + path);
  f << text;
}

int cmd_plan(const Options& o) {
  const ScenarioConfig c = load(o);
  const GlobalPath p = plan_path(c.grid, c.start, c.goal, c.mdp);
  json wp = json::array();
  for (GridIndex g : p.waypoints) wp.push_back({g.i, g.j});
  const json j = {{"scenario", c.name}, {"hops", p.hops()}, {"resolution", p.resolution}, {"waypoints", wp}};
  write_out(o.out, j.dump(2) + "\n");
  return 0;
}

int cmd_episode(const Options& o) {
  const ScenarioConfig c = load(o);
  const EpisodeLog log = run_episode(c, o.seed);
  if (o.trace) {
    write_out(o.out, to_json_lines(log));
  } else {
    const BatchReport rep = aggregate(c.name, o.seed, {log});
    write_out(o.out, render_report(rep, ReportFormat::Json));
  }
  return 0;
}

int cmd_batch(const Options& o) {
  const ScenarioConfig c = load(o);
  const auto fmt = parse_report_format(o.format);
  if (!fmt) throw ConfigError("unknown --format '" + o.format + "' (json, csv, plotdata)");
  std::vector<std::uint64_t> seeds;
  if (!o.seeds.empty()) {
    seeds = parse_seeds(o.seeds);
  } else if (!c.seeds.empty()) {
    seeds = c.seeds;
  } else {
    seeds.resize(25);
    std::iota(seeds.begin(), seeds.end(), std::uint64_t{0});
  }
  // A single seed with --n is a seed base.
  if (o.n >= 0) {
    if (seeds.size() == 1) {
      const std::uint64_t base = seeds[0];
      seeds.resize(static_cast<std::size_t>(o.n));
      std::iota(seeds.begin(), seeds.end(), base);
    } else if (static_cast<std::size_t>(o.n) < seeds.size()) {
      seeds.resize(static_cast<std::size_t>(o.n));
    }
  }
  const BatchReport rep = aggregate(c.name, seeds.empty() ? 0 : seeds.front(), run_episodes(c, seeds, o.threads));
  write_out(o.out, render_report(rep, *fmt));
  return 0;
}

BridgeServer* g_server = nullptr;

int cmd_serve(const Options& o) {
  const ScenarioConfig c = load(o);
  LiveSession session(c, o.seed);
  BridgeServer server(session, o.port);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::fprintf(stderr, "serving %s (seed %llu) on ws://127.0.0.1:%u\n", c.name.c_str(),
               static_cast<unsigned long long>(o.seed), static_cast<unsigned>(server.port()));
  server.run();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"awarenav: grid navigation among pedestrians"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "Scenario JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output file (default stdout)");
    sub->add_option("--budget-ms", o.budget_ms, "Solver time budget per tick")->check(CLI::NonNegativeNumber);
    sub->add_option("--k-scenarios", o.k_scenarios, "DESPOT scenario count")->check(CLI::PositiveNumber);
    sub->add_option("--k-particles", o.k_particles, "Belief particle count")->check(CLI::PositiveNumber);
  };

  auto* plan = app.add_subcommand("plan", "Print the global MDP path");
  common(plan);
  auto* episode = app.add_subcommand("episode", "Run one episode");
  common(episode);
  episode->add_option("--seed", o.seed, "Episode seed");
  episode->add_flag("--trace", o.trace, "Write per-tick records as JSON lines");
  auto* batch = app.add_subcommand("batch", "Run a multi-seed batch and report");
  common(batch);
  batch->add_option("--seeds", o.seeds, "Seed list: N, A..B or a,b,c (with --n, a single N is a base)");
  batch->add_option("--n", o.n, "Episode count")->check(CLI::NonNegativeNumber);
  batch->add_option("--format", o.format, "json, csv or plotdata");
  batch->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  auto* serve = app.add_subcommand("serve", "Serve a live episode over WebSocket");
  common(serve);
  serve->add_option("--seed", o.seed, "Episode seed");
  serve->add_option("--port", o.port, "TCP port (0 = any free port)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*plan) return cmd_plan(o);
    if (*episode) return cmd_episode(o);
    if (*batch) return cmd_batch(o);
    if (*serve) return cmd_serve(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
