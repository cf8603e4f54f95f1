#include "dccm/equilibrium.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "dccm/novel_metrics.hpp"
#include "json.hpp"

namespace dccm::equilibrium {

namespace {

double coefficient(const ParametricSurface& s, const char* name) {
  auto it = s.coefficients.find(name);
  if (it == s.coefficients.end()) {
    throw ArgumentError("family '" + s.family + "' needs coefficient '" + name + "'");
  }
  return it->second;
}

double parametric_value(const ParametricSurface& s, double r, double c) {
  if (s.family == "saturating_linear") {
    const double a = coefficient(s, "a");
    const double b = coefficient(s, "b");
    const double cc = coefficient(s, "c");
    const double q = a * r / (r + b) - cc * c;
    if (!std::isfinite(q)) throw ArgumentError("saturating_linear is not finite at this grid point");
    return q;
  }
  throw ArgumentError("unknown QoS family '" + s.family + "'");
}

// Q at grid cell (i, j).
double cell(const EquilibriumProblem& p, std::size_t i, std::size_t j) {
  if (const auto* t = std::get_if<TabulatedSurface>(&p.surface)) return t->q[i * p.c_axis.size() + j];
  return parametric_value(std::get<ParametricSurface>(p.surface), p.r_axis[i], p.c_axis[j]);
}

void check_axis(const std::vector<double>& axis, const char* name) {
  if (axis.empty()) throw ArgumentError(std::string(name) + " must be non-empty");
  for (std::size_t i = 0; i < axis.size(); ++i) {
    if (!std::isfinite(axis[i])) throw ArgumentError(std::string(name) + " values must be finite");
    if (i > 0 && !(axis[i] > axis[i - 1])) throw ArgumentError(std::string(name) + " must be strictly increasing");
  }
}

std::optional<std::size_t> find_exact(const std::vector<double>& axis, double v) {
  for (std::size_t i = 0; i < axis.size(); ++i)
    if (axis[i] == v) return i;
  return std::nullopt;
}

std::vector<double> number_array(const nlohmann::json& j, const char* name) {
  if (!j.contains(name) || !j[name].is_array()) throw ArgumentError(std::string("problem needs array '") + name + "'");
  std::vector<double> out;
  for (const auto& v : j[name]) {
    if (!v.is_number()) throw ArgumentError(std::string(name) + " entries must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

void validate_problem(const EquilibriumProblem& problem) {
  check_axis(problem.r_axis, "r_axis");
  check_axis(problem.c_axis, "c_axis");
  if (!std::isfinite(problem.c_max) || !std::isfinite(problem.r_min)) {
    throw ArgumentError("c_max and r_min must be finite");
  }
  if (const auto* t = std::get_if<TabulatedSurface>(&problem.surface)) {
    if (t->q.size() != problem.r_axis.size() * problem.c_axis.size()) {
      throw ArgumentError("Q table has " + std::to_string(t->q.size()) + " values, expected " +
                          std::to_string(problem.r_axis.size() * problem.c_axis.size()));
    }
    for (double q : t->q)
      if (!std::isfinite(q)) throw ArgumentError("Q table values must be finite");
  } else {
    const auto& s = std::get<ParametricSurface>(problem.surface);
    parametric_value(s, problem.r_axis.front(), problem.c_axis.front());
  }
}

EquilibriumProblem load_problem(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(1, e.what());
  }
  EquilibriumProblem p;
  p.r_axis = number_array(j, "r_axis");
  p.c_axis = number_array(j, "c_axis");
  if (!j.contains("c_max") || !j["c_max"].is_number()) throw ArgumentError("problem needs numeric c_max");
  if (!j.contains("r_min") || !j["r_min"].is_number()) throw ArgumentError("problem needs numeric r_min");
  p.c_max = j["c_max"].get<double>();
  p.r_min = j["r_min"].get<double>();
  if (!j.contains("surface")) throw ArgumentError("problem needs a 'surface'");
  const auto& s = j["surface"];
  if (s.is_array()) {
    TabulatedSurface t;
    for (const auto& row : s) {
      if (row.is_array()) {
        if (row.size() != p.c_axis.size()) throw ArgumentError("Q table row length must equal c_axis length");
        for (const auto& v : row) t.q.push_back(v.get<double>());
      } else {
        t.q.push_back(row.get<double>());
      }
    }
    p.surface = std::move(t);
  } else if (s.is_object()) {
    ParametricSurface ps;
    ps.family = s.value("family", "");
    if (s.contains("coefficients")) {
      for (const auto& [k, v] : s["coefficients"].items()) ps.coefficients[k] = v.get<double>();
    }
    p.surface = std::move(ps);
  } else {
    throw ArgumentError("surface must be a Q table (array) or a {family, coefficients} object");
  }
  validate_problem(p);
  return p;
}

EquilibriumProblem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open problem file '" + path + "'");
  return load_problem(in);
}

double evaluate_qos(const EquilibriumProblem& problem, double r, double c) {
  if (const auto* t = std::get_if<TabulatedSurface>(&problem.surface)) {
    const auto i = find_exact(problem.r_axis, r);
    const auto j = find_exact(problem.c_axis, c);
    if (!i || !j) throw ArgumentError("(r, c) is not a grid point of the tabulated surface");
    return t->q[*i * problem.c_axis.size() + *j];
  }
  if (r < problem.r_axis.front() || r > problem.r_axis.back() || c < problem.c_axis.front() ||
      c > problem.c_axis.back()) {
    throw ArgumentError("(r, c) outside the axis bounds");
  }
  return parametric_value(std::get<ParametricSurface>(problem.surface), r, c);
}

Solution solve_equilibrium(const EquilibriumProblem& problem) {
  validate_problem(problem);
  const bool cost_ok = problem.c_axis.front() <= problem.c_max;
  const bool resource_ok = problem.r_axis.back() >= problem.r_min;
  if (!cost_ok || !resource_ok) {
    std::string which;
    if (!cost_ok) which = "C <= C_max";
    if (!resource_ok) which += std::string(which.empty() ? "" : " and ") + "R >= R_min";
    throw InfeasibleError("no feasible grid point: constraint " + which + " excludes every point");
  }
  Solution best;
  bool found = false;
  for (std::size_t j = 0; j < problem.c_axis.size(); ++j) {
    if (problem.c_axis[j] > problem.c_max) continue;
    for (std::size_t i = 0; i < problem.r_axis.size(); ++i) {
      if (problem.r_axis[i] < problem.r_min) continue;
      ++best.feasible_count;
      const double q = cell(problem, i, j);
      if (!found || q > best.q_star) {
        found = true;
        best.q_star = q;
        best.r_index = i;
        best.c_index = j;
      }
    }
  }
  best.r_star = problem.r_axis[best.r_index];
  best.c_star = problem.c_axis[best.c_index];
  return best;
}

Marginals grid_marginals(const EquilibriumProblem& problem, std::size_t i, std::size_t j) {
  if (i >= problem.r_axis.size() || j >= problem.c_axis.size()) throw ArgumentError("grid cell out of range");
  Marginals m;
  const double here = cell(problem, i, j);
  if (i + 1 < problem.r_axis.size()) m.r_forward = cell(problem, i + 1, j) - here;
  if (i > 0) m.r_backward = here - cell(problem, i - 1, j);
  if (j + 1 < problem.c_axis.size()) m.c_forward = cell(problem, i, j + 1) - here;
  if (j > 0) m.c_backward = here - cell(problem, i, j - 1);
  return m;
}

EquilibriumReport equilibrium_report(const EquilibriumProblem& problem, const Solution& solution,
                                     std::optional<double> amdahl_fraction) {
  EquilibriumReport rep;
  rep.solution = solution;
  const std::size_t i = solution.r_index;
  const std::size_t j = solution.c_index;
  rep.cost_binding = j + 1 < problem.c_axis.size() && problem.c_axis[j + 1] > problem.c_max;
  rep.resource_binding = i > 0 && problem.r_axis[i - 1] < problem.r_min;
  rep.marginals = grid_marginals(problem, i, j);
  rep.r_one_sided = !(rep.marginals.r_forward && rep.marginals.r_backward);
  rep.c_one_sided = !(rep.marginals.c_forward && rep.marginals.c_backward);
  if (rep.marginals.r_forward && rep.marginals.r_backward) {
    rep.diminishing_returns = *rep.marginals.r_forward < *rep.marginals.r_backward;
  }
  if (amdahl_fraction && problem.r_axis.front() > 0.0) {
    const double scale = solution.r_star / problem.r_axis.front();
    rep.amdahl_fraction = *amdahl_fraction;
    rep.amdahl_scale = scale;
    rep.amdahl_speedup = novel::amdahl_speedup(*amdahl_fraction, scale);
    if (*amdahl_fraction < 1.0) rep.amdahl_limit = 1.0 / (1.0 - *amdahl_fraction);
  }
  return rep;
}

}  // namespace dccm::equilibrium
