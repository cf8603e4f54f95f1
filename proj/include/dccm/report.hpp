#pragma once

// Assembles the full MetricReport document and its JSON / CSV renderings.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dccm/causality.hpp"
#include "dccm/classic_metrics.hpp"
#include "dccm/equilibrium.hpp"
#include "dccm/metric_quality.hpp"
#include "dccm/novel_metrics.hpp"
#include "dccm/simulator.hpp"
#include "dccm/telemetry.hpp"
#include "json.hpp"

namespace dccm::report {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

// Rounds to 12 significant digits. Report numbers pass through this.
double round12(double v);
Json number(double v);
Json measure(const Measure& m);  // number or the string "undefined"

struct AmdahlScenario {
  double f = 0.0;
  double s = 1.0;
};

struct ReportOptions {
  classic::ClassicOptions classic;
  novel::CarbonConfig carbon;
  std::string carbon_source = "default";  // default | env | config | flag
  std::string causal_signal = "cpu_util";
  int causal_lag = causality::kDefaultLag;
  std::optional<causality::ExplainabilityVector> explainability;
  std::optional<double> thermal_te_c;
  std::vector<AmdahlScenario> amdahl;
  std::optional<equilibrium::EquilibriumProblem> equilibrium;
  std::optional<double> equilibrium_amdahl_fraction;
  std::optional<std::vector<std::string>> quality_metrics;  // default: every registry metric
  quality::QualityOptions quality;
  bool include_quality = true;
  std::optional<std::pair<double, double>> window;
  std::optional<sim::SimConfig> ground_truth_config;
  std::string config_digest;
  std::string generated_at;
  unsigned threads = 0;
};

Json build_report(const Trace& trace, const ReportOptions& options);

// Two-space indented JSON with a trailing newline.
std::string to_json_text(const Json& report);

// "key,value" rows for every numeric / undefined leaf reachable through
// objects only (arrays are skipped).
std::string to_csv(const Json& report);

Json to_json(const classic::ClassicReport& rep);
Json to_json(const causality::CausalMatrixResult& cm, const causality::ObservabilityScore& score);
Json to_json(const equilibrium::EquilibriumReport& rep);
Json to_json(const quality::QualityReport& rep);
Json to_json(const sim::GroundTruth& gt);
Json to_json(const ValidationReport& rep);

}  // namespace dccm::report
