#pragma once

// Pairwise Granger-style influence between node time series and the
// observability score built from it.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dccm/common.hpp"
#include "dccm/telemetry.hpp"

namespace dccm::causality {

constexpr int kDefaultLag = 2;

// n x n, non-negative, zero diagonal. entry(i, j) is the influence of node i on node j.
class CausalMatrix {
 public:
  CausalMatrix() = default;
  explicit CausalMatrix(std::size_t n) : n_(n), entries_(n * n, 0.0) {}

  std::size_t n() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  // Throws ArgumentError on a negative/non-finite value or a diagonal write.
  void set(std::size_t i, std::size_t j, double value);

  // Row-major copy of the entries.
  const std::vector<double>& entries() const { return entries_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> entries_;
};

// Fraction of y's residual variance explained by x's history:
// max(0, 1 - RSS_full / RSS_restricted), where the restricted least-squares
// model regresses y_t on an intercept and y's own `lag` lags and the full
// model adds x's `lag` lags. Lies in [0, 1).
double granger_influence(std::span<const double> x, std::span<const double> y, int lag);

// Extracts the per-sample value of a signal; nullopt skips the sample.
struct Signal {
  std::string name;
  std::function<std::optional<double>(const NodeSample&)> extract;

  static Signal cpu_util();
  static Signal energy_j();
  static Signal by_name(std::string_view name);  // cpu_util, mem_util, energy_j, temperature_c, busy_s
};

struct CausalMatrixResult {
  std::vector<std::string> node_ids;  // row/column order
  CausalMatrix matrix;
  std::vector<bool> undefined;  // per node; rows/columns left at 0
  std::vector<std::string> warnings;
  double grid_step = 0.0;
  std::size_t grid_points = 0;
};

// Resamples every node's signal onto a shared uniform grid (linear
// interpolation; step = median inter-sample gap; range = overlap of the
// node spans) and fills C_ij = granger_influence(series_i, series_j, lag).
// Nodes whose series violate the estimator's preconditions are flagged
// undefined. Pairs are evaluated on up to `threads` workers; the result does
// not depend on scheduling.
CausalMatrixResult build_causal_matrix(const Trace& trace, const Signal& signal, int lag = kDefaultLag,
                                       unsigned threads = 0);

struct ExplainabilityVector {
  std::vector<double> e_local;  // each in [0,1]
  std::vector<double> weights;  // each > 0
};

// Defaults of 1.0 for both e_local and gamma.
ExplainabilityVector default_explainability(std::size_t n);

// Reads JSONL lines {"node_id", "e_local", "gamma"}; nodes absent from the
// file keep the defaults. Unknown node ids are a DataError.
ExplainabilityVector load_explainability(std::istream& in, const std::vector<std::string>& node_ids);

struct ObservabilityScore {
  double explainability = 0.0;        // sum(gamma_i * e_i) / N
  std::optional<double> asymmetry_penalty;  // sum_{i != j} |C_ij - C_ji| / sum_{i,j} C_ij
  double raw = 0.0;                   // explainability * (1 - penalty), may be negative
  double clamped = 0.0;               // raw clamped to [0, explainability]
  std::vector<std::string> warnings;
};

ObservabilityScore observability_score(const ExplainabilityVector& ev, const CausalMatrix& cm);

}  // namespace dccm::causality
