#pragma once

// JSON game specifications, solution export and the sweep CSV tables.
//
// Game file fields: horizon, states, actions, terminating, kernels,
// rewards_A, rewards_B, prior. Each of the per-stage fields may be given once
// (reused for every stage) or as an array with one entry per stage:
//
//   states       ["a", "b"]                       or [["a", "b"], ...]
//   actions      ["go", "stop"]                   or [[...], ...]
//   terminating  ["stop"]                         or [[...], ...]
//   kernels      {"go": [[...], [...]], ...}      or [{...}, ...]
//   rewards_A    [[r(a,go), r(a,stop)], [...]]    or [[[...]], ...]
//
// kernels[action][state] is the next-stage distribution. Terminating actions
// and the last stage need no kernel.

#include <cstddef>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sigpick/common.hpp"
#include "sigpick/game.hpp"
#include "sigpick/solver.hpp"

namespace sigpick {

using Json = nlohmann::ordered_json;

/// Malformed input; `line` and `column` are 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg
                                : msg),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_, column_;
};

inline Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    if (auto pos = what.find("parse error"); pos != std::string::npos) what = what.substr(pos);
    throw ParseError(what, line, col);
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline const Json& field(const Json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  return obj.at(key);
}

template <class T>
T get_as(const Json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError("field '" + where + "' has the wrong type");
  }
}

// Expands a stage-constant value into one entry per stage. `is_per_stage`
// decides whether the value already lists stages.
template <class F>
std::vector<Json> per_stage(const Json& j, std::size_t horizon, const std::string& name, F&& is_per_stage,
                            bool last_optional = false) {
  if (!is_per_stage(j)) return std::vector<Json>(horizon, j);
  std::vector<Json> out(j.begin(), j.end());
  if (last_optional && out.size() + 1 == horizon) out.push_back(Json::object());
  if (out.size() != horizon)
    throw ParseError("field '" + name + "' lists " + std::to_string(out.size()) + " stages, expected " +
                     std::to_string(horizon));
  return out;
}

inline bool nested_array(const Json& j, int depth) {
  const Json* cur = &j;
  for (int k = 0; k < depth; ++k) {
    if (!cur->is_array() || cur->empty()) return false;
    cur = &(*cur)[0];
  }
  return cur->is_array();
}

inline std::size_t index_of(const std::vector<std::string>& v, const std::string& s, const std::string& where) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] == s) return i;
  throw ParseError(where + ": unknown label '" + s + "'");
}

}  // namespace detail

inline GameSpec spec_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("game specification must be a JSON object");
  GameSpec g;
  const long long horizon = detail::get_as<long long>(detail::field(j, "horizon"), "horizon");
  if (horizon <= 0) throw ParseError("field 'horizon' must be positive");
  g.horizon = static_cast<std::size_t>(horizon);
  const std::size_t T = g.horizon;

  auto labels = [](const Json& x) { return x.is_array() && !x.empty() && x[0].is_array(); };
  auto states = detail::per_stage(detail::field(j, "states"), T, "states", labels);
  auto actions = detail::per_stage(detail::field(j, "actions"), T, "actions", labels);
  auto term = detail::per_stage(j.contains("terminating") ? j.at("terminating") : Json::array(), T, "terminating", labels);
  auto kernels = detail::per_stage(detail::field(j, "kernels"), T, "kernels",
                                   [](const Json& x) { return x.is_array(); }, true);
  auto mat3 = [](const Json& x) { return detail::nested_array(x, 2); };
  auto rA = detail::per_stage(detail::field(j, "rewards_A"), T, "rewards_A", mat3);
  auto rB = detail::per_stage(detail::field(j, "rewards_B"), T, "rewards_B", mat3);

  g.stages.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const std::string at = "stage " + std::to_string(t + 1);
    auto& s = g.stages[t];
    s.states = detail::get_as<std::vector<std::string>>(states[t], "states");
    s.actions = detail::get_as<std::vector<std::string>>(actions[t], "actions");
    s.terminating.assign(s.actions.size(), false);
    for (const auto& name : detail::get_as<std::vector<std::string>>(term[t], "terminating"))
      s.terminating[detail::index_of(s.actions, name, at + " terminating")] = true;
    s.reward_A = detail::get_as<std::vector<Vec>>(rA[t], "rewards_A");
    s.reward_B = detail::get_as<std::vector<Vec>>(rB[t], "rewards_B");
    s.kernel.assign(s.states.size(), std::vector<Vec>(s.actions.size()));
    if (!kernels[t].is_object()) throw ParseError("field 'kernels' for " + at + " must map actions to tables");
    for (const auto& [name, table] : kernels[t].items()) {
      const std::size_t u = detail::index_of(s.actions, name, at + " kernels");
      const auto rows = detail::get_as<std::vector<Vec>>(table, "kernels");
      if (rows.size() != s.states.size())
        throw ParseError(at + ": kernel for '" + name + "' has " + std::to_string(rows.size()) + " rows, expected " +
                         std::to_string(s.states.size()));
      for (std::size_t x = 0; x < rows.size(); ++x) s.kernel[x][u] = rows[x];
    }
  }
  g.prior = detail::get_as<Vec>(detail::field(j, "prior"), "prior");
  return g;
}

inline GameSpec parse_spec(const std::string& text) { return spec_from_json(parse_json_text(text)); }

inline GameSpec load_spec(const std::string& path) { return parse_spec(read_file(path)); }

/// Explicit per-stage form.
inline Json spec_to_json(const GameSpec& g) {
  Json j;
  j["horizon"] = g.horizon;
  Json states = Json::array(), actions = Json::array(), term = Json::array(), kernels = Json::array(),
       rA = Json::array(), rB = Json::array();
  for (const auto& s : g.stages) {
    states.push_back(s.states);
    actions.push_back(s.actions);
    Json tn = Json::array();
    for (std::size_t u = 0; u < s.actions.size(); ++u)
      if (s.terminating[u]) tn.push_back(s.actions[u]);
    term.push_back(tn);
    Json k = Json::object();
    for (std::size_t u = 0; u < s.actions.size(); ++u) {
      bool present = !s.kernel.empty();
      for (const auto& row : s.kernel) present = present && u < row.size() && !row[u].empty();
      if (!present) continue;
      Json table = Json::array();
      for (const auto& row : s.kernel) table.push_back(row[u]);
      k[s.actions[u]] = table;
    }
    kernels.push_back(k);
    rA.push_back(s.reward_A);
    rB.push_back(s.reward_B);
  }
  j["states"] = states;
  j["actions"] = actions;
  j["terminating"] = term;
  j["kernels"] = kernels;
  j["rewards_A"] = rA;
  j["rewards_B"] = rB;
  j["prior"] = g.prior;
  return j;
}

inline Json solution_to_json(const EquilibriumSolution& sol) {
  Json j;
  j["format"] = "sigpick-solution/1";
  j["horizon"] = sol.spec.horizon;
  j["value_A"] = sol.value_A;
  j["value_B"] = sol.value_B;
  Json stages = Json::array();
  for (const auto& st : sol.stages) {
    const auto& sd = sol.spec.stage(st.stage);
    Json s;
    s["stage"] = st.stage + 1;
    s["states"] = sd.states;
    Json verts = Json::array();
    for (std::size_t i = 0; i < st.vertices().size(); ++i) {
      Json v;
      v["belief"] = st.vertices()[i].coords();
      v["V_A"] = st.valuesA[i];
      v["V_B"] = st.valuesB[i];
      v["action"] = sd.actions[st.receiver_action[i]];
      verts.push_back(v);
    }
    s["vertices"] = verts;
    s["simplices"] = st.triangulation->simplices();
    stages.push_back(s);
  }
  j["stages"] = stages;
  return j;
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  std::string s = os.str();
  for (int prec = 1; prec < 17; ++prec) {
    std::ostringstream o;
    o << std::setprecision(prec) << v;
    if (std::stod(o.str()) == v) return o.str();
  }
  return s;
}

inline const char* kSweepHeader = "# sigpick-sweep/1";

/// Stages to export for a sweep of `depth` stages below the horizon, last
/// stage first (0-based).
inline std::vector<std::size_t> sweep_stages(std::size_t horizon, std::size_t depth) {
  if (depth > horizon) throw std::invalid_argument("sweep depth exceeds the horizon");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k <= depth && k < horizon; ++k) out.push_back(horizon - 1 - k);
  return out;
}

namespace detail {

// Belief columns: the first coordinate for two-state stages, all otherwise.
inline std::vector<std::string> belief_columns(const StageData& s) {
  if (s.n_states() == 2) return {"pi_" + s.states[0]};
  std::vector<std::string> out;
  for (const auto& x : s.states) out.push_back("pi_" + x);
  return out;
}

inline void write_belief(std::ostream& os, const SimplexPoint& p) {
  if (p.size() == 2) {
    os << format_number(p[0]);
    return;
  }
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << format_number(p[i]);
}

inline std::vector<SimplexPoint> grid_points(std::size_t n, std::size_t steps) {
  std::vector<SimplexPoint> out;
  std::vector<std::size_t> c(n, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t k, std::size_t left) {
    if (k + 1 == n) {
      c[k] = left;
      Vec v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(c[i]) / static_cast<double>(steps);
      out.push_back(SimplexPoint::clamped(std::move(v)));
      return;
    }
    for (std::size_t a = left + 1; a-- > 0;) {
      c[k] = a;
      rec(k + 1, left - a);
    }
  };
  rec(0, steps);
  return out;
}

}  // namespace detail

/// Vertex tables: one row per triangulation vertex of each exported stage.
inline void write_sweep_vertices(std::ostream& os, const EquilibriumSolution& sol, std::size_t depth) {
  os << kSweepHeader << " vertices: stage,<belief>,V_A,V_B,action\n";
  bool header = false;
  for (std::size_t t : sweep_stages(sol.spec.horizon, depth)) {
    const auto& st = sol.stages[t];
    const auto& sd = sol.spec.stage(t);
    if (!header) {
      os << "stage";
      for (const auto& c : detail::belief_columns(sd)) os << "," << c;
      os << ",V_A,V_B,action\n";
      header = true;
    }
    for (std::size_t i = 0; i < st.vertices().size(); ++i) {
      os << t + 1 << ",";
      detail::write_belief(os, st.vertices()[i]);
      os << "," << format_number(st.valuesA[i]) << "," << format_number(st.valuesB[i]) << ","
         << sd.actions[st.receiver_action[i]] << "\n";
    }
  }
}

/// Per-action q values on a belief grid (`steps` subdivisions per axis).
inline void write_sweep_q(std::ostream& os, const EquilibriumSolution& sol, std::size_t depth, std::size_t steps = 200) {
  os << kSweepHeader << " q-values: stage,<belief>,action,q_A,q_B\n";
  bool header = false;
  for (std::size_t t : sweep_stages(sol.spec.horizon, depth)) {
    const auto& st = sol.stages[t];
    const auto& sd = sol.spec.stage(t);
    if (!header) {
      os << "stage";
      for (const auto& c : detail::belief_columns(sd)) os << "," << c;
      os << ",action,q_A,q_B\n";
      header = true;
    }
    const std::size_t per_axis = sd.n_states() == 2 ? steps : std::max<std::size_t>(1, steps / 10);
    for (const auto& p : detail::grid_points(sd.n_states(), per_axis)) {
      const QValues q = evaluate(st.objective, p);
      for (std::size_t u = 0; u < sd.n_actions(); ++u) {
        os << t + 1 << ",";
        detail::write_belief(os, p);
        os << "," << sd.actions[u] << "," << format_number(q.A[u]) << "," << format_number(q.B[u]) << "\n";
      }
    }
  }
}

}  // namespace sigpick
