#include "dccm/novel_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "dccm/classic_metrics.hpp"

namespace dccm::novel {

namespace {

struct InnerFit {
  double k = 0.0;
  double t0 = 0.0;
  double rms = 0.0;
};

std::string describe_point(std::size_t i, const TemperaturePoint& p) {
  std::ostringstream s;
  s << "point " << i << " (t=" << p.t << ", T=" << p.temperature_c << ")";
  return s.str();
}

// Weighted least squares on ln(T - te) = ln(t0 - te) - k t. Weights of
// (T - te)^2 make a log residual cost about what the matching temperature
// residual would, so points sitting at ambient do not dominate the line.
InnerFit log_linear_fit(std::span<const TemperaturePoint> series, double te) {
  const std::size_t n = series.size();
  std::vector<double> y(n);
  std::vector<double> w(n);
  double sw = 0.0;
  double mean_t = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double excess = series[i].temperature_c - te;
    if (!(excess > 0.0)) {
      throw DataError("temperature not above ambient at " + describe_point(i, series[i]) +
                      "; cannot take log of non-positive excess");
    }
    y[i] = std::log(excess);
    w[i] = excess * excess;
    sw += w[i];
    mean_t += w[i] * series[i].t;
    mean_y += w[i] * y[i];
  }
  mean_t /= sw;
  mean_y /= sw;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = series[i].t - mean_t;
    sxx += w[i] * dt * dt;
    sxy += w[i] * dt * (y[i] - mean_y);
  }
  if (!(sxx > 0.0)) throw DataError("unidentifiable k: no spread in t after weighting");
  const double slope = sxy / sxx;
  InnerFit fit;
  fit.k = -slope;
  fit.t0 = te + std::exp(mean_y - slope * mean_t);
  double sq = 0.0;
  for (const auto& p : series) {
    const double r = te + (fit.t0 - te) * std::exp(-fit.k * p.t) - p.temperature_c;
    sq += r * r;
  }
  fit.rms = std::sqrt(sq / static_cast<double>(n));
  return fit;
}

void require_positive_k(const InnerFit& fit) {
  if (!(fit.k > 0.0)) throw DataError("fitted cooling constant k is not positive (series is not decaying)");
}

}  // namespace

double predict_temperature(const ThermalParams& params, double t) {
  if (!(t >= 0.0)) throw ArgumentError("predict_temperature requires t >= 0");
  if (!(params.k > 0.0)) throw ArgumentError("cooling constant k must be positive");
  return params.te_c + (params.t0_c - params.te_c) * std::exp(-params.k * t);
}

CoolingFit fit_cooling(std::span<const TemperaturePoint> series, std::optional<double> te_known) {
  std::set<double> distinct_t;
  for (const auto& p : series) distinct_t.insert(p.t);
  if (series.size() < 2 || distinct_t.size() < 2) {
    throw ArgumentError("fit_cooling needs at least 2 points with distinct t");
  }
  if (!te_known && series.size() < 3) {
    throw ArgumentError("fit_cooling without known ambient temperature needs at least 3 points");
  }
  const auto [lo_it, hi_it] = std::minmax_element(
      series.begin(), series.end(),
      [](const TemperaturePoint& a, const TemperaturePoint& b) { return a.temperature_c < b.temperature_c; });
  if (lo_it->temperature_c == hi_it->temperature_c) {
    throw DataError("unidentifiable k: temperature series is constant");
  }

  CoolingFit out;
  if (te_known) {
    const InnerFit fit = log_linear_fit(series, *te_known);
    require_positive_k(fit);
    out.params = {fit.t0, *te_known, fit.k};
    out.rms_residual_c = fit.rms;
    return out;
  }

  const double t_min = lo_it->temperature_c;
  auto objective = [&](double te) {
    const InnerFit fit = log_linear_fit(series, te);
    return fit.k > 0.0 ? fit.rms : std::numeric_limits<double>::infinity();
  };
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double lo = t_min - 50.0;
  const double hi = t_min - 1e-9 * std::max(1.0, std::abs(t_min));
  // Coarse scan first so the golden-section bracket holds a single minimum.
  constexpr int kScan = 64;
  int best = 0;
  double best_f = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kScan; ++i) {
    const double f = objective(lo + (hi - lo) * i / kScan);
    if (f < best_f) {
      best_f = f;
      best = i;
    }
  }
  double a = lo + (hi - lo) * std::max(0, best - 1) / kScan;
  double b = lo + (hi - lo) * std::min(kScan, best + 1) / kScan;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  for (int iter = 0; iter < 200 && (b - a) > 1e-13 * std::max(1.0, std::abs(t_min)); ++iter) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = objective(d);
    }
  }
  const double te = fc <= fd ? c : d;
  const InnerFit fit = log_linear_fit(series, te);
  require_positive_k(fit);
  out.params = {fit.t0, te, fit.k};
  out.rms_residual_c = fit.rms;
  out.te_estimated = true;
  return out;
}

std::string_view to_string(FairnessResource r) {
  switch (r) {
    case FairnessResource::cpu:
      return "cpu";
    case FairnessResource::energy:
      return "energy";
    case FairnessResource::bandwidth:
      return "bandwidth";
    case FairnessResource::custom:
      return "custom";
  }
  return "custom";
}

FairnessResource parse_fairness_resource(std::string_view s) {
  if (s == "cpu") return FairnessResource::cpu;
  if (s == "energy") return FairnessResource::energy;
  if (s == "bandwidth") return FairnessResource::bandwidth;
  if (s == "custom") return FairnessResource::custom;
  throw ArgumentError("unknown fairness resource '" + std::string(s) + "'");
}

double jain_fairness(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("jain_fairness needs at least one value");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double x : values) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ArgumentError("jain_fairness values must be finite and >= 0");
    sum += x;
    sum_sq += x * x;
  }
  if (sum == 0.0) throw ArgumentError("jain_fairness undefined for an all-zero vector");
  if (std::adjacent_find(values.begin(), values.end(), std::not_equal_to<>()) == values.end()) return 1.0;
  const double n = static_cast<double>(values.size());
  const double f = (sum * sum) / (n * sum_sq);
  // Rounding can push the ratio a few ulps outside [1/n, 1].
  return std::clamp(f, 1.0 / n, 1.0);
}

double jain_fairness(const FairnessInput& input) { return jain_fairness(input.values); }

FairnessResult fairness_by_resource(const Trace& trace, FairnessResource resource) {
  FairnessResult out;
  out.input.label = resource;
  std::map<std::string, double> per_node;
  switch (resource) {
    case FairnessResource::cpu: {
      for (const auto& nu : classic::utilization(trace.node_samples, classic::Resource::cpu).per_node) {
        if (nu.mean) per_node[nu.node_id] = *nu.mean;
      }
      break;
    }
    case FairnessResource::energy:
      for (const auto& s : trace.node_samples) per_node[s.node_id] += s.energy_j;
      break;
    case FairnessResource::bandwidth:
      if (trace.net_samples.empty()) break;
      for (const auto& id : trace.node_ids) per_node[id] = 0.0;
      for (const auto& s : trace.net_samples) {
        per_node[s.src] += static_cast<double>(s.bytes_delivered);
        per_node[s.dst] += static_cast<double>(s.bytes_delivered);
      }
      break;
    case FairnessResource::custom:
      throw ArgumentError("custom fairness input must be supplied as a FairnessInput");
  }
  for (const auto& id : trace.node_ids) {
    auto it = per_node.find(id);
    if (it == per_node.end()) continue;
    out.node_ids.push_back(id);
    out.input.values.push_back(it->second);
  }
  double sum = 0.0;
  for (double v : out.input.values) sum += v;
  if (!out.input.values.empty() && sum > 0.0) out.index = jain_fairness(out.input);
  return out;
}

double carbon_emissions(double energy_j, const CarbonConfig& config) {
  if (!(energy_j >= 0.0)) throw ArgumentError("carbon_emissions requires energy_j >= 0");
  if (!(config.intensity_g_per_kwh > 0.0)) throw ArgumentError("carbon intensity must be positive");
  return energy_j / 3.6e6 * config.intensity_g_per_kwh;
}

double adaptivity_quotient(std::span<const AdaptationEvent> events) {
  if (events.empty()) throw ArgumentError("adaptivity_quotient needs at least one adaptation event");
  std::vector<double> terms;
  terms.reserve(events.size());
  for (const auto& e : events) {
    if (!(e.p_base > 0.0) || !(e.p_post > 0.0) || !(e.t_adapt_s > 0.0)) {
      throw ArgumentError("adaptation event '" + e.event_id + "' needs positive p_base, p_post, t_adapt_s");
    }
    const double ratio = e.polarity == Polarity::higher_better ? e.p_post / e.p_base : e.p_base / e.p_post;
    terms.push_back(ratio / e.t_adapt_s);
  }
  return ordered_sum(std::move(terms)) / static_cast<double>(events.size());
}

double amdahl_speedup(double f_enhanced, double s_enhanced) {
  if (!(f_enhanced >= 0.0 && f_enhanced <= 1.0)) throw ArgumentError("amdahl fraction must be in [0,1]");
  if (!(s_enhanced > 0.0)) throw ArgumentError("amdahl enhancement speedup must be positive");
  return 1.0 / ((1.0 - f_enhanced) + f_enhanced / s_enhanced);
}

}  // namespace dccm::novel
