#include "dccm/causality.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <thread>
#include <unordered_map>

#include "json.hpp"

namespace dccm::causality {

namespace {

double residual_ss(const Eigen::MatrixXd& design, const Eigen::VectorXd& target) {
  const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(target);
  return (target - design * beta).squaredNorm();
}

bool constant(std::span<const double> v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

struct NodeSeries {
  std::vector<double> t;
  std::vector<double> v;
};

double interpolate(const NodeSeries& s, double t) {
  auto it = std::lower_bound(s.t.begin(), s.t.end(), t);
  if (it == s.t.end()) return s.v.back();
  const auto hi = static_cast<std::size_t>(it - s.t.begin());
  if (*it == t || hi == 0) return s.v[hi];
  const std::size_t lo = hi - 1;
  const double w = (t - s.t[lo]) / (s.t[hi] - s.t[lo]);
  return s.v[lo] + w * (s.v[hi] - s.v[lo]);
}

}  // namespace

void CausalMatrix::set(std::size_t i, std::size_t j, double value) {
  if (i >= n_ || j >= n_) throw ArgumentError("causal matrix index out of range");
  if (i == j && value != 0.0) throw ArgumentError("causal matrix diagonal is fixed at 0");
  if (!(value >= 0.0) || !std::isfinite(value)) throw ArgumentError("causal matrix entries must be finite and >= 0");
  entries_[i * n_ + j] = value;
}

double granger_influence(std::span<const double> x, std::span<const double> y, int lag) {
  if (lag < 1) throw ArgumentError("granger lag must be >= 1");
  if (x.size() != y.size()) throw ArgumentError("granger series must be aligned (equal length)");
  const auto p = static_cast<std::size_t>(lag);
  if (y.size() < 10 * p) {
    throw DataError("insufficient data: granger needs length >= 10*lag (" + std::to_string(10 * p) + "), got " +
                    std::to_string(y.size()));
  }
  if (constant(x) || constant(y)) throw DataError("granger series has zero variance");

  const std::size_t rows = y.size() - p;
  Eigen::MatrixXd restricted(rows, 1 + p);
  Eigen::MatrixXd full(rows, 1 + 2 * p);
  Eigen::VectorXd target(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = r + p;
    target(r) = y[t];
    restricted(r, 0) = 1.0;
    full(r, 0) = 1.0;
    for (std::size_t l = 1; l <= p; ++l) {
      restricted(r, l) = y[t - l];
      full(r, l) = y[t - l];
      full(r, p + l) = x[t - l];
    }
  }
  const double rss_restricted = residual_ss(restricted, target);
  if (!(rss_restricted > 0.0)) return 0.0;
  const double rss_full = residual_ss(full, target);
  const double influence = std::max(0.0, 1.0 - rss_full / rss_restricted);
  return std::min(influence, std::nextafter(1.0, 0.0));
}

Signal Signal::cpu_util() {
  return {"cpu_util", [](const NodeSample& s) -> std::optional<double> { return s.cpu_util; }};
}

Signal Signal::energy_j() {
  return {"energy_j", [](const NodeSample& s) -> std::optional<double> { return s.energy_j; }};
}

Signal Signal::by_name(std::string_view name) {
  if (name == "cpu_util") return cpu_util();
  if (name == "energy_j") return energy_j();
  if (name == "mem_util") return {"mem_util", [](const NodeSample& s) -> std::optional<double> { return s.mem_util; }};
  if (name == "busy_s") return {"busy_s", [](const NodeSample& s) -> std::optional<double> { return s.busy_s; }};
  if (name == "temperature_c") {
    return {"temperature_c", [](const NodeSample& s) { return s.temperature_c; }};
  }
  throw ArgumentError("unknown causal signal '" + std::string(name) + "'");
}

CausalMatrixResult build_causal_matrix(const Trace& trace, const Signal& signal, int lag, unsigned threads) {
  if (trace.node_ids.size() < 2) throw ArgumentError("causal matrix needs at least 2 nodes");
  if (lag < 1) throw ArgumentError("granger lag must be >= 1");

  const std::size_t n = trace.node_ids.size();
  CausalMatrixResult out;
  out.node_ids = trace.node_ids;
  out.matrix = CausalMatrix(n);
  out.undefined.assign(n, false);

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[trace.node_ids[i]] = i;
  std::vector<NodeSeries> raw(n);
  for (const auto& s : trace.node_samples) {
    auto it = index.find(s.node_id);
    if (it == index.end()) continue;
    if (auto v = signal.extract(s)) {
      raw[it->second].t.push_back(s.timestamp);
      raw[it->second].v.push_back(*v);
    }
  }

  std::vector<double> gaps;
  double start = -std::numeric_limits<double>::infinity();
  double end = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (raw[i].t.size() < 2) {
      out.undefined[i] = true;
      out.warnings.push_back("node '" + trace.node_ids[i] + "' has fewer than 2 " + signal.name + " samples");
      continue;
    }
    for (std::size_t k = 1; k < raw[i].t.size(); ++k) gaps.push_back(raw[i].t[k] - raw[i].t[k - 1]);
    start = std::max(start, raw[i].t.front());
    end = std::min(end, raw[i].t.back());
  }

  std::vector<std::vector<double>> grid_values(n);
  if (!gaps.empty() && end > start) {
    std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
    double step = gaps[gaps.size() / 2];
    if (gaps.size() % 2 == 0) {
      const double lower = *std::max_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2));
      step = 0.5 * (step + lower);
    }
    out.grid_step = step;
    const auto points = static_cast<std::size_t>(std::floor((end - start) / step + 1e-9)) + 1;
    out.grid_points = points;
    for (std::size_t i = 0; i < n; ++i) {
      if (out.undefined[i]) continue;
      grid_values[i].reserve(points);
      for (std::size_t k = 0; k < points; ++k) {
        grid_values[i].push_back(interpolate(raw[i], start + static_cast<double>(k) * step));
      }
    }
  }

  const std::size_t min_len = 10 * static_cast<std::size_t>(lag);
  for (std::size_t i = 0; i < n; ++i) {
    if (out.undefined[i]) continue;
    if (grid_values[i].size() < min_len) {
      out.undefined[i] = true;
      out.warnings.push_back("node '" + trace.node_ids[i] + "': insufficient overlapping samples for lag " +
                             std::to_string(lag));
    } else if (constant(grid_values[i])) {
      out.undefined[i] = true;
      out.warnings.push_back("node '" + trace.node_ids[i] + "': " + signal.name + " has zero variance");
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && !out.undefined[i] && !out.undefined[j]) pairs.emplace_back(i, j);

  std::vector<double> values(pairs.size(), 0.0);
  std::vector<std::string> errors(pairs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < pairs.size(); k = next++) {
      const auto [i, j] = pairs[k];
      try {
        values[k] = granger_influence(grid_values[i], grid_values[j], lag);
      } catch (const Error& e) {
        errors[k] = e.what();
      }
    }
  };
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(1, pairs.size())));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    if (!errors[k].empty()) {
      out.warnings.push_back("pair " + trace.node_ids[i] + "->" + trace.node_ids[j] + ": " + errors[k]);
      continue;
    }
    out.matrix.set(i, j, values[k]);
  }
  return out;
}

ExplainabilityVector default_explainability(std::size_t n) { return {std::vector<double>(n, 1.0), std::vector<double>(n, 1.0)}; }

ExplainabilityVector load_explainability(std::istream& in, const std::vector<std::string>& node_ids) {
  ExplainabilityVector ev = default_explainability(node_ids.size());
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < node_ids.size(); ++i) index[node_ids[i]] = i;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, e.what());
    }
    if (!j.is_object() || !j.contains("node_id") || !j["node_id"].is_string()) {
      throw DataError("explainability line " + std::to_string(line_no) + " lacks a node_id");
    }
    auto it = index.find(j["node_id"].get<std::string>());
    if (it == index.end()) {
      throw DataError("explainability line " + std::to_string(line_no) + " names unknown node '" +
                      j["node_id"].get<std::string>() + "'");
    }
    if (j.contains("e_local")) {
      const double e = j["e_local"].get<double>();
      if (!(e >= 0.0 && e <= 1.0)) throw DataError("e_local out of [0,1] at line " + std::to_string(line_no));
      ev.e_local[it->second] = e;
    }
    if (j.contains("gamma")) {
      const double g = j["gamma"].get<double>();
      if (!(g > 0.0)) throw DataError("gamma must be positive at line " + std::to_string(line_no));
      ev.weights[it->second] = g;
    }
  }
  return ev;
}

ObservabilityScore observability_score(const ExplainabilityVector& ev, const CausalMatrix& cm) {
  const std::size_t n = cm.n();
  if (n == 0) throw ArgumentError("observability needs at least one node");
  if (ev.e_local.size() != n || ev.weights.size() != n) {
    throw ArgumentError("explainability vector length does not match causal matrix size");
  }
  std::vector<double> weighted;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(ev.e_local[i] >= 0.0 && ev.e_local[i] <= 1.0)) throw ArgumentError("e_local must be in [0,1]");
    if (!(ev.weights[i] > 0.0)) throw ArgumentError("gamma must be positive");
    weighted.push_back(ev.weights[i] * ev.e_local[i]);
  }

  ObservabilityScore out;
  out.explainability = ordered_sum(std::move(weighted)) / static_cast<double>(n);

  std::vector<double> asym;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) asym.push_back(std::abs(cm(i, j) - cm(j, i)));
  const double total = ordered_sum(cm.entries());
  if (!(total > 0.0)) {
    out.raw = out.explainability;
    out.clamped = out.explainability;
    out.warnings.push_back("causal matrix is all zero; asymmetry penalty undefined, score is the explainability term only");
    return out;
  }
  const double penalty = ordered_sum(std::move(asym)) / total;
  out.asymmetry_penalty = penalty;
  out.raw = out.explainability * (1.0 - penalty);
  out.clamped = std::clamp(out.raw, 0.0, out.explainability);
  return out;
}

}  // namespace dccm::causality
