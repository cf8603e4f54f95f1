#pragma once

// Carbon, thermal, fairness, adaptivity and Amdahl metrics.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dccm/common.hpp"
#include "dccm/telemetry.hpp"

namespace dccm::novel {

// Newton's law of cooling: T(t) = te + (t0 - te) * exp(-k t).
struct ThermalParams {
  double t0_c = 0.0;
  double te_c = 0.0;
  double k = 1.0;
};

double predict_temperature(const ThermalParams& params, double t);

struct TemperaturePoint {
  double t = 0.0;
  double temperature_c = 0.0;
};

struct CoolingFit {
  ThermalParams params;
  double rms_residual_c = 0.0;
  bool te_estimated = false;
};

// With te_known, a least-squares line through (t, ln(T - te)), weighted by
// (T - te)^2, gives k and t0. Otherwise te is found by a coarse scan and then
// golden-section search over [min observed - 50, min observed), running the
// same inner fit at each candidate and minimising the RMS temperature residual.
CoolingFit fit_cooling(std::span<const TemperaturePoint> series, std::optional<double> te_known = std::nullopt);

enum class FairnessResource { cpu, energy, bandwidth, custom };

std::string_view to_string(FairnessResource r);
FairnessResource parse_fairness_resource(std::string_view s);

struct FairnessInput {
  std::vector<double> values;
  FairnessResource label = FairnessResource::custom;
};

// Jain's index (sum x)^2 / (n * sum x^2), in [1/n, 1].
double jain_fairness(const FairnessInput& input);
double jain_fairness(std::span<const double> values);

struct FairnessResult {
  FairnessInput input;
  std::vector<std::string> node_ids;  // parallel to input.values
  Measure index;
};

// Per-node x_i: time-weighted mean cpu_util, total energy_j, or total bytes
// on incident links. Undefined when the resource has no data.
FairnessResult fairness_by_resource(const Trace& trace, FairnessResource resource);

constexpr double kDefaultCarbonIntensity = 400.0;

struct CarbonConfig {
  double intensity_g_per_kwh = kDefaultCarbonIntensity;
};

// grams CO2e = energy_j / 3.6e6 * intensity.
double carbon_emissions(double energy_j, const CarbonConfig& config);

// Mean over events of (improvement ratio / t_adapt_s), in 1/s. The ratio is
// post/base for higher_better metrics and base/post for lower_better.
double adaptivity_quotient(std::span<const AdaptationEvent> events);

// 1 / ((1 - f) + f / s).
double amdahl_speedup(double f_enhanced, double s_enhanced);

}  // namespace dccm::novel
