#pragma once

// Command-line front end: solve, sweep, evaluate, simulate and envelope.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sigpick/argcav.hpp"
#include "sigpick/builtin.hpp"
#include "sigpick/common.hpp"
#include "sigpick/evaluator.hpp"
#include "sigpick/game.hpp"
#include "sigpick/io.hpp"
#include "sigpick/solver.hpp"

namespace sigpick {

struct RunConfig {
  std::string command;
  std::optional<std::string> input;
  std::optional<std::string> builtin;
  BuiltinParams params;
  std::optional<std::string> out;
  std::uint64_t seed = 1;
  std::size_t trajectories = 100000;
  std::size_t depth = 13;
  Tolerances tol;
  std::size_t node_cap = 1000000;
  unsigned threads = 1;
};

/// Parses argv into a RunConfig. Throws CLI::ParseError (including for
/// --help); use CLI::App::exit to report.
inline RunConfig parse_args(CLI::App& app, int argc, const char* const* argv) {
  RunConfig cfg;
  app.require_subcommand(1);
  std::vector<double> prior;
  double p = 0.0, c = 0.0;
  std::size_t horizon = 0;
  auto common = [&](CLI::App* sub, bool game_input) {
    if (game_input) {
      auto* in = sub->add_option("--input", cfg.input, "game specification (JSON)");
      auto* bi = sub->add_option("--builtin", cfg.builtin, "quickest_detection or detector");
      in->excludes(bi);
      sub->add_option("--p", p, "builtin jump/flip probability");
      sub->add_option("--c", c, "builtin waiting cost");
      sub->add_option("--horizon", horizon, "builtin horizon")->check(CLI::PositiveNumber);
      sub->add_option("--prior", prior, "builtin prior (one probability per state)")->delimiter(',');
      sub->add_option("--eps-geom", cfg.tol.geom, "geometric tolerance")->check(CLI::PositiveNumber);
      sub->add_option("--eps-tie", cfg.tol.tie, "argmax tie tolerance")->check(CLI::PositiveNumber);
    } else {
      sub->add_option("--input", cfg.input, "piecewise objective (JSON)")->required();
      sub->add_option("--eps-geom", cfg.tol.geom, "geometric tolerance")->check(CLI::PositiveNumber);
      sub->add_option("--eps-tie", cfg.tol.tie, "argmax tie tolerance")->check(CLI::PositiveNumber);
    }
    sub->add_option("--out", cfg.out, "output path");
  };
  auto* solve = app.add_subcommand("solve", "solve a game and write the solution JSON");
  common(solve, true);
  auto* sweep = app.add_subcommand("sweep", "write per-stage vertex and q-value CSV tables");
  common(sweep, true);
  sweep->add_option("--depth", cfg.depth, "stages below the horizon to export");
  auto* evaluate = app.add_subcommand("evaluate", "exact evaluation and deviation checks");
  common(evaluate, true);
  evaluate->add_option("--seed", cfg.seed, "seed for deviation probes");
  evaluate->add_option("--node-cap", cfg.node_cap, "belief tree size limit")->check(CLI::PositiveNumber);
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo play of the equilibrium");
  common(simulate, true);
  simulate->add_option("--seed", cfg.seed, "master seed");
  simulate->add_option("--trajectories", cfg.trajectories, "number of trajectories")->check(CLI::PositiveNumber);
  simulate->add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
  auto* envelope = app.add_subcommand("envelope", "concave envelope of a piecewise objective");
  common(envelope, false);

  app.parse(argc, argv);
  cfg.command = app.get_subcommands().front()->get_name();
  auto* sub = app.get_subcommands().front();
  if (cfg.command == "envelope") return cfg;
  if (sub->count("--p")) cfg.params.p = p;
  if (sub->count("--c")) cfg.params.c = c;
  if (sub->count("--horizon")) cfg.params.horizon = horizon;
  if (!prior.empty()) cfg.params.prior = prior;
  if (!cfg.input && !cfg.builtin) throw CLI::RequiredError("--input or --builtin");
  return cfg;
}

namespace detail {

inline PiecewiseLinear piece_from_json(const Json& j, std::size_t n) {
  if (j.contains("weights")) {
    AffineFunctional f{get_as<Vec>(j.at("weights"), "weights"), j.value("offset", 0.0)};
    if (f.weights.size() != n) throw ParseError("affine piece has the wrong number of weights");
    return PiecewiseLinear(f);
  }
  std::vector<SimplexPoint> verts;
  for (const auto& v : field(j, "vertices")) verts.emplace_back(get_as<Vec>(v, "vertices"));
  auto simplices = get_as<std::vector<std::vector<std::size_t>>>(field(j, "simplices"), "simplices");
  auto tri = std::make_shared<const Triangulation>(std::move(verts), std::move(simplices));
  if (tri->n_states() != n) throw ParseError("interpolant has the wrong dimension");
  if (auto rep = validate_triangulation(*tri); !rep) throw ParseError("invalid triangulation: " + rep.reason);
  auto f = std::make_shared<const VertexInterpolant>(tri, get_as<Vec>(field(j, "values"), "values"));
  return pullback_affine(f, AffineMap::identity(n));
}

}  // namespace detail

/// {"states": n, "pieces": [{"select": F, "value": F}, ...], "breaks": [F...]}
/// where F is {"weights": [...], "offset": x} or an interpolant
/// {"vertices": [...], "simplices": [...], "values": [...]}.
inline ArgmaxObjective parse_envelope(const Json& j, double tie, std::vector<AffineFunctional>* breaks) {
  const std::size_t n = detail::get_as<std::size_t>(detail::field(j, "states"), "states");
  if (n == 0) throw ParseError("field 'states' must be positive");
  ArgmaxObjective obj;
  obj.tie = tie;
  for (const auto& piece : detail::field(j, "pieces")) {
    obj.select.push_back(detail::piece_from_json(detail::field(piece, "select"), n));
    obj.value.push_back(detail::piece_from_json(detail::field(piece, "value"), n));
  }
  if (obj.select.empty()) throw ParseError("field 'pieces' is empty");
  if (breaks && j.contains("breaks"))
    for (const auto& b : j.at("breaks"))
      breaks->push_back({detail::get_as<Vec>(detail::field(b, "weights"), "weights"), b.value("offset", 0.0)});
  return obj;
}

namespace detail {

inline GameSpec load_game(const RunConfig& cfg) {
  if (cfg.input) return load_spec(*cfg.input);
  return builtin_example(*cfg.builtin, cfg.params);
}

inline void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (!cfg.out || *cfg.out == "-") {
    out << text;
    return;
  }
  std::ofstream f(*cfg.out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + *cfg.out + "'");
  f << text;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace detail

/// Runs one command; returns the process exit status. Results go to
/// cfg.out (or `out`), diagnostics to `err`.
inline int run(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    if (!(cfg.tol.geom > 0.0) || !(cfg.tol.tie > 0.0)) throw std::invalid_argument("tolerances must be positive");
    if (cfg.command == "envelope") {
      std::vector<AffineFunctional> breaks;
      const auto obj = parse_envelope(parse_json_text(read_file(*cfg.input)), cfg.tol.tie, &breaks);
      const auto env = argcav(obj, obj.arrangement(breaks), cfg.tol);
      Json j;
      j["format"] = "sigpick-envelope/1";
      Json verts = Json::array();
      for (std::size_t i = 0; i < env.triangulation->vertices().size(); ++i)
        verts.push_back({{"belief", env.triangulation->vertices()[i].coords()}, {"value", env.values.values[i]}});
      j["vertices"] = verts;
      j["simplices"] = env.triangulation->simplices();
      detail::emit(cfg, detail::dump(j), out);
      return 0;
    }

    const GameSpec g = detail::load_game(cfg);
    const EquilibriumSolution sol = solve(g, cfg.tol);

    if (cfg.command == "solve") {
      detail::emit(cfg, detail::dump(solution_to_json(sol)), out);
      return 0;
    }
    if (cfg.command == "sweep") {
      if (cfg.depth > g.horizon) throw std::invalid_argument("--depth exceeds the horizon");
      const std::filesystem::path dir = cfg.out ? *cfg.out : ".";
      std::filesystem::create_directories(dir);
      std::ofstream v(dir / "vertices.csv", std::ios::binary), q(dir / "q_values.csv", std::ios::binary);
      if (!v || !q) throw std::runtime_error("cannot write into '" + dir.string() + "'");
      write_sweep_vertices(v, sol, cfg.depth);
      write_sweep_q(q, sol, cfg.depth);
      out << "wrote " << sweep_stages(g.horizon, cfg.depth).size() << " stage tables to " << dir.string() << "\n";
      return 0;
    }
    if (cfg.command == "evaluate") {
      const auto [ja, jb] = exact_value(sol, cfg.node_cap);
      ProbeSpec probes;
      probes.seed = cfg.seed;
      const auto rep = one_shot_deviation_check(sol, probes, cfg.node_cap);
      Json j;
      j["format"] = "sigpick-evaluation/1";
      j["dp_value"] = {sol.value_A, sol.value_B};
      j["exact_value"] = {ja, jb};
      j["gap"] = std::max(std::abs(ja - sol.value_A), std::abs(jb - sol.value_B));
      j["receiver_checks"] = rep.receiver_checks;
      j["principal_checks"] = rep.principal_checks;
      Json vs = Json::array();
      for (const auto& v : rep.violations)
        vs.push_back({{"player", v.player == Violation::Player::principal ? "principal" : "receiver"},
                      {"stage", v.stage + 1},
                      {"belief", v.belief},
                      {"magnitude", v.magnitude},
                      {"detail", v.detail}});
      j["violations"] = vs;
      detail::emit(cfg, detail::dump(j), out);
      return rep.clean() ? 0 : 3;
    }
    if (cfg.command == "simulate") {
      const auto r = simulate(sol, cfg.seed, cfg.trajectories, cfg.threads);
      Json j;
      j["format"] = "sigpick-simulation/1";
      j["seed"] = r.seed;
      j["trajectories"] = r.trajectories;
      j["mean"] = {r.mean_A, r.mean_B};
      j["standard_error"] = {r.se_A, r.se_B};
      j["dp_value"] = {sol.value_A, sol.value_B};
      detail::emit(cfg, detail::dump(j), out);
      return 0;
    }
    err << "unknown command '" << cfg.command << "'\n";
    return 2;
  } catch (const ValidationError& e) {
    err << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const ResourceError& e) {
    err << "resource limit: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace sigpick
