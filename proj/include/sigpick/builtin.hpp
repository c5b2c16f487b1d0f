#pragma once

// Built-in games: quickest change detection with an absorbing change state,
// and a detector facing a symmetric flipping state.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sigpick/common.hpp"
#include "sigpick/game.hpp"

namespace sigpick {

struct BuiltinParams {
  std::optional<double> p, c;
  std::size_t horizon = 14;
  std::optional<Vec> prior;
};

namespace detail {

inline void check_unit_open(const char* name, double v) {
  if (!(v > 0.0 && v < 1.0)) throw ParameterError(std::string(name) + " must lie in (0, 1), got " + std::to_string(v));
}

inline GameSpec repeat_stage(const StageData& s, std::size_t horizon, Vec prior) {
  if (horizon == 0) throw ParameterError("horizon must be positive");
  GameSpec g;
  g.horizon = horizon;
  g.stages.assign(horizon, s);
  g.prior = std::move(prior);
  return g;
}

}  // namespace detail

/// States {1, 2} with 2 absorbing and a jump 1 -> 2 with probability p. The
/// receiver declares a state; declaring 2 ends the game. False alarms cost 1,
/// each period of missed change costs c; the principal earns 1 per period the
/// receiver keeps declaring 1.
inline GameSpec quickest_detection(double p, double c, std::size_t horizon, std::optional<Vec> prior = std::nullopt) {
  detail::check_unit_open("p", p);
  detail::check_unit_open("c", c);
  StageData s;
  s.states = {"1", "2"};
  s.actions = {"declare-1", "declare-2"};
  s.terminating = {false, true};
  s.kernel = {{{1.0 - p, p}, {1.0 - p, p}}, {{0.0, 1.0}, {0.0, 1.0}}};
  s.reward_B = {{0.0, -1.0}, {-c, 0.0}};
  s.reward_A = {{1.0, 0.0}, {1.0, 0.0}};
  return detail::repeat_stage(s, horizon, prior.value_or(Vec{1.0, 0.0}));
}

/// States {-1, 1} flipping with probability p. The receiver declares -1 or 1
/// (ending the game, reward 1 if correct) or waits at cost c; the principal
/// earns 1 per wait.
inline GameSpec detector(double p, double c, std::size_t horizon, std::optional<Vec> prior = std::nullopt) {
  detail::check_unit_open("p", p);
  detail::check_unit_open("c", c);
  StageData s;
  s.states = {"-1", "1"};
  s.actions = {"-1", "0", "1"};
  s.terminating = {true, false, true};
  const Vec stay_neg{1.0 - p, p}, stay_pos{p, 1.0 - p};
  s.kernel = {{stay_neg, stay_neg, stay_neg}, {stay_pos, stay_pos, stay_pos}};
  s.reward_B = {{1.0, -c, 0.0}, {0.0, -c, 1.0}};
  s.reward_A = {{0.0, 1.0, 0.0}, {0.0, 1.0, 0.0}};
  return detail::repeat_stage(s, horizon, prior.value_or(Vec{0.5, 0.5}));
}

inline std::vector<std::string> builtin_names() { return {"quickest_detection", "detector"}; }

/// Generator by name; unset p and c default to the values used in the
/// examples (p = 0.2, c = 0.1 and p = 0.2, c = 0.15 respectively).
inline GameSpec builtin_example(const std::string& name, const BuiltinParams& params) {
  if (name == "quickest_detection")
    return quickest_detection(params.p.value_or(0.2), params.c.value_or(0.1), params.horizon, params.prior);
  if (name == "detector")
    return detector(params.p.value_or(0.2), params.c.value_or(0.15), params.horizon, params.prior);
  throw ParameterError("unknown builtin '" + name + "' (expected quickest_detection or detector)");
}

}  // namespace sigpick
