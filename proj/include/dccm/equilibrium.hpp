#pragma once

// Cost / resource / QoS trade-off: maximise Q(R, C) over a grid subject to
// C <= c_max and R >= r_min.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dccm/common.hpp"

namespace dccm::equilibrium {

// q[i * c_count + j] = Q(r_axis[i], c_axis[j]).
struct TabulatedSurface {
  std::vector<double> q;
};

// Built-in family "saturating_linear": Q = a * R / (R + b) - c * C.
struct ParametricSurface {
  std::string family;
  std::map<std::string, double> coefficients;
};

struct EquilibriumProblem {
  std::vector<double> r_axis;
  std::vector<double> c_axis;
  double c_max = 0.0;
  double r_min = 0.0;
  std::variant<TabulatedSurface, ParametricSurface> surface;
};

// Throws ArgumentError on non-increasing axes, table size mismatch,
// non-finite table values or an unknown family.
void validate_problem(const EquilibriumProblem& problem);

EquilibriumProblem load_problem(std::istream& in);
EquilibriumProblem load_problem_file(const std::string& path);

// Tabulated: (r, c) must be an exact grid point. Parametric: within axis bounds.
double evaluate_qos(const EquilibriumProblem& problem, double r, double c);

struct Solution {
  double r_star = 0.0;
  double c_star = 0.0;
  double q_star = 0.0;
  std::size_t r_index = 0;
  std::size_t c_index = 0;
  std::size_t feasible_count = 0;
};

// Exhaustive scan of feasible grid points; ties go to the smallest c, then
// the smallest r. Throws InfeasibleError naming the binding constraint.
Solution solve_equilibrium(const EquilibriumProblem& problem);

// Grid finite differences of Q around a cell. Missing neighbours (grid
// boundary) leave the corresponding side empty.
struct Marginals {
  std::optional<double> r_forward;   // Q(i+1, j) - Q(i, j)
  std::optional<double> r_backward;  // Q(i, j) - Q(i-1, j)
  std::optional<double> c_forward;
  std::optional<double> c_backward;
};

Marginals grid_marginals(const EquilibriumProblem& problem, std::size_t r_index, std::size_t c_index);

struct EquilibriumReport {
  Solution solution;
  bool cost_binding = false;      // a costlier grid point exists but exceeds c_max
  bool resource_binding = false;  // a smaller-resource grid point exists but is below r_min
  Marginals marginals;
  bool r_one_sided = false;
  bool c_one_sided = false;
  // Marginal QoS per R step shrinks across the optimum.
  std::optional<bool> diminishing_returns;
  // Amdahl annotation when a parallel fraction is supplied: the resource
  // scale-up r_star / r_axis[0] used as the enhancement factor.
  std::optional<double> amdahl_fraction;
  std::optional<double> amdahl_scale;
  std::optional<double> amdahl_speedup;
  std::optional<double> amdahl_limit;
};

EquilibriumReport equilibrium_report(const EquilibriumProblem& problem, const Solution& solution,
                                     std::optional<double> amdahl_fraction = std::nullopt);

}  // namespace dccm::equilibrium
