#include "dccm/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace dccm::report {

namespace {

Json utilization_json(const classic::UtilizationSummary& u) {
  Json per_node = Json::object();
  for (const auto& n : u.per_node) per_node[n.node_id] = measure(n.mean);
  return Json{{"fleet_mean", measure(u.fleet_mean)}, {"per_node", per_node}};
}

Json thermal_fits(const Trace& trace, const std::optional<double>& te, std::vector<std::string>& warnings) {
  Json fits = Json::array();
  for (const auto& id : trace.node_ids) {
    std::vector<novel::TemperaturePoint> pts;
    for (const auto& s : samples_of(trace, id))
      if (s.temperature_c) pts.push_back({s.timestamp, *s.temperature_c});
    if (pts.empty()) continue;
    Json entry{{"node_id", id}, {"points", pts.size()}};
    try {
      const auto fit = novel::fit_cooling(pts, te);
      entry["t0_c"] = number(fit.params.t0_c);
      entry["te_c"] = number(fit.params.te_c);
      entry["te_estimated"] = fit.te_estimated;
      entry["k"] = number(fit.params.k);
      entry["rms_residual_c"] = number(fit.rms_residual_c);
    } catch (const Error& e) {
      entry["error"] = e.what();
      warnings.push_back("thermal fit for '" + id + "': " + e.what());
    }
    fits.push_back(std::move(entry));
  }
  return fits;
}

void flatten(const Json& j, const std::string& prefix, std::ostringstream& out) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) flatten(value, prefix.empty() ? key : prefix + "." + key, out);
  } else if (j.is_number()) {
    out << prefix << ',' << j.dump() << '\n';
  } else if (j.is_string() && j.get<std::string>() == "undefined") {
    out << prefix << ",undefined\n";
  }
}

}  // namespace

double round12(double v) {
  if (!std::isfinite(v)) throw ArgumentError("report numbers must be finite");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

Json number(double v) { return Json(round12(v)); }

Json measure(const Measure& m) { return m ? number(*m) : Json("undefined"); }

Json to_json(const classic::ClassicReport& rep) {
  Json j;
  j["utilization"] = {{"cpu", utilization_json(rep.cpu)},
                      {"mem", utilization_json(rep.mem)},
                      {"busy", utilization_json(rep.busy)}};
  j["speedup"] = {{"value", measure(rep.speedup)}, {"source", rep.speedup_source}};
  Json eff = Json::object();
  for (const auto& [n, e] : rep.scaling_efficiency) eff[std::to_string(n)] = number(e);
  j["scaling_efficiency"] = eff;
  j["elasticity"] = measure(rep.elasticity);
  j["availability"] = {{"value", measure(rep.availability)}, {"source", rep.availability_source}};
  Json energy_nodes = Json::object();
  for (const auto& n : rep.energy.per_node) {
    energy_nodes[n.node_id] = {{"total_j", number(n.total_j)}, {"mean_power_w", measure(n.mean_power_w)}};
  }
  j["energy"] = {{"total_j", number(rep.energy.total_j)},
                 {"mean_power_w", measure(rep.energy.mean_power_w)},
                 {"per_node", energy_nodes}};
  j["max_concurrency"] = rep.max_concurrency;
  Json links = Json::object();
  for (const auto& l : rep.network.links) {
    links[l.src + "->" + l.dst] = {{"samples", l.samples},
                                   {"mean_latency_ms", number(l.mean_latency_ms)},
                                   {"p95_latency_ms", number(l.p95_latency_ms)},
                                   {"throughput_bps", measure(l.throughput_bps)},
                                   {"bandwidth_util", measure(l.bandwidth_util)},
                                   {"over_capacity", l.over_capacity},
                                   {"net_util", measure(l.net_util)},
                                   {"pdr", measure(l.pdr)},
                                   {"plr", measure(l.plr)}};
  }
  j["network"] = links;
  if (rep.response) {
    const auto& r = *rep.response;
    j["response"] = {{"count", r.count},
                     {"mean_response_s", number(r.mean_response_s)},
                     {"p50_response_s", number(r.p50_response_s)},
                     {"p95_response_s", number(r.p95_response_s)},
                     {"p99_response_s", number(r.p99_response_s)},
                     {"mean_service_s", number(r.mean_service_s)},
                     {"error_rate", number(r.error_rate)},
                     {"accuracy", measure(r.accuracy)},
                     {"total_cost", number(r.total_cost)}};
  } else {
    j["response"] = "undefined";
  }
  return j;
}

Json to_json(const causality::CausalMatrixResult& cm, const causality::ObservabilityScore& score) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < cm.matrix.n(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < cm.matrix.n(); ++j) row.push_back(number(cm.matrix(i, j)));
    rows.push_back(std::move(row));
  }
  Json undefined = Json::array();
  for (std::size_t i = 0; i < cm.undefined.size(); ++i)
    if (cm.undefined[i]) undefined.push_back(cm.node_ids[i]);
  Json j;
  j["node_ids"] = cm.node_ids;
  j["grid_step_s"] = number(cm.grid_step);
  j["grid_points"] = cm.grid_points;
  j["matrix"] = rows;
  j["undefined_nodes"] = undefined;
  j["score"] = {{"explainability", number(score.explainability)},
                {"asymmetry_penalty", measure(score.asymmetry_penalty)},
                {"raw", number(score.raw)},
                {"clamped", number(score.clamped)}};
  return j;
}

Json to_json(const equilibrium::EquilibriumReport& rep) {
  const auto& s = rep.solution;
  Json j;
  j["r_star"] = number(s.r_star);
  j["c_star"] = number(s.c_star);
  j["q_star"] = number(s.q_star);
  j["feasible_count"] = s.feasible_count;
  Json binding = Json::array();
  if (rep.cost_binding) binding.push_back("C <= C_max");
  if (rep.resource_binding) binding.push_back("R >= R_min");
  j["binding_constraints"] = binding;
  j["marginals"] = {{"r_forward", measure(rep.marginals.r_forward)},
                    {"r_backward", measure(rep.marginals.r_backward)},
                    {"c_forward", measure(rep.marginals.c_forward)},
                    {"c_backward", measure(rep.marginals.c_backward)},
                    {"r_one_sided", rep.r_one_sided},
                    {"c_one_sided", rep.c_one_sided}};
  j["diminishing_returns"] = rep.diminishing_returns ? Json(*rep.diminishing_returns) : Json("undefined");
  if (rep.amdahl_fraction) {
    j["amdahl"] = {{"f_enhanced", number(*rep.amdahl_fraction)},
                   {"resource_scale", measure(rep.amdahl_scale)},
                   {"speedup", measure(rep.amdahl_speedup)},
                   {"limit", measure(rep.amdahl_limit)}};
  }
  return j;
}

Json to_json(const quality::QualityReport& rep) {
  Json j;
  j["metric"] = rep.metric;
  j["unit"] = rep.unit;
  j["description"] = rep.description;
  j["fingerprint"] = rep.fingerprint;
  j["value"] = measure(rep.value);
  j["sensitivity"] = {{"value", measure(rep.sensitivity)},
                      {"field", rep.perturbation.field},
                      {"delta", number(rep.perturbation.delta)}};
  j["repeatability"] = {{"cv", measure(rep.repeatability_cv)}, {"repeats", rep.repeats}};
  j["consistency"] = {{"ok", rep.consistency_ok}, {"unit", rep.unit}, {"notes", rep.consistency_notes}};
  j["independence"] = {{"delta", number(rep.independence_delta)},
                       {"fields", rep.independence_fields},
                       {"violations", rep.declaration_violations}};
  j["seed"] = rep.seed;
  return j;
}

Json to_json(const sim::GroundTruth& gt) {
  Json edges = Json::array();
  for (const auto& e : gt.edges) {
    edges.push_back({{"src", e.src}, {"dst", e.dst}, {"coefficient", number(e.coefficient)}, {"lag", e.lag}});
  }
  Json weights = Json::object();
  for (const auto& [id, w] : gt.load_weights) weights[id] = number(w);
  auto thermal = [](const novel::ThermalParams& p) {
    return Json{{"t0_c", number(p.t0_c)}, {"te_c", number(p.te_c)}, {"k", number(p.k)}};
  };
  Json j;
  j["edges"] = edges;
  j["load_skew"] = number(gt.load_skew);
  j["load_weights"] = weights;
  j["thermal"] = {{"cloud", thermal(gt.thermal.cloud)},
                  {"edge", thermal(gt.thermal.edge)},
                  {"iot", thermal(gt.thermal.iot)},
                  {"heat_per_util", number(gt.thermal.heat_per_util)}};
  j["expected_cpu_fairness"] = {number(gt.expected_cpu_fairness_low), number(gt.expected_cpu_fairness_high)};
  return j;
}

Json to_json(const ValidationReport& rep) {
  Json violations = Json::array();
  for (const auto& v : rep.violations) violations.push_back({{"invariant", v.invariant}, {"record", v.record}});
  return Json{{"counts",
               {{"node_ids", rep.node_count},
                {"node_samples", rep.node_sample_count},
                {"net_samples", rep.net_sample_count},
                {"requests", rep.request_count},
                {"adaptations", rep.adaptation_count}}},
              {"violations", violations}};
}

Json build_report(const Trace& trace, const ReportOptions& options) {
  std::vector<std::string> warnings;
  Json report;

  Json meta;
  meta["tool"] = "dccm";
  meta["version"] = kToolVersion;
  meta["generated_at"] = options.generated_at;
  meta["trace_epoch"] = trace.epoch;
  if (options.window) {
    meta["window"] = {number(options.window->first), number(options.window->second)};
  } else {
    meta["window"] = "full";
  }
  meta["config_digest"] = options.config_digest;
  meta["derived_definitions"] = {"speedup", "scaling_efficiency", "elasticity", "availability", "net_util"};
  report["meta"] = meta;

  const auto classic_rep = classic::classic_report(trace, options.classic);
  for (const auto& w : classic_rep.warnings) warnings.push_back(w);
  report["classic"] = to_json(classic_rep);

  Json novel_j;
  Json fairness = Json::object();
  for (auto res : {novel::FairnessResource::cpu, novel::FairnessResource::energy, novel::FairnessResource::bandwidth}) {
    const auto f = novel::fairness_by_resource(trace, res);
    Json values = Json::object();
    for (std::size_t i = 0; i < f.node_ids.size(); ++i) values[f.node_ids[i]] = number(f.input.values[i]);
    fairness[std::string(novel::to_string(res))] = {{"index", measure(f.index)}, {"values", values}};
  }
  novel_j["fairness"] = fairness;
  novel_j["thermal_fits"] = thermal_fits(trace, options.thermal_te_c, warnings);
  novel_j["carbon"] = {{"energy_j", number(classic_rep.energy.total_j)},
                       {"intensity_g_per_kwh", number(options.carbon.intensity_g_per_kwh)},
                       {"intensity_source", options.carbon_source},
                       {"grams_co2e", number(novel::carbon_emissions(classic_rep.energy.total_j, options.carbon))}};
  if (trace.adaptations.empty()) {
    novel_j["adaptivity"] = {{"events", 0}, {"quotient", "undefined"}, {"unit", "1/s"}};
  } else {
    novel_j["adaptivity"] = {{"events", trace.adaptations.size()},
                             {"quotient", number(novel::adaptivity_quotient(trace.adaptations))},
                             {"unit", "1/s"}};
  }
  Json amdahl = Json::array();
  for (const auto& sc : options.amdahl) {
    amdahl.push_back({{"f_enhanced", number(sc.f)},
                      {"s_enhanced", number(sc.s)},
                      {"speedup", number(novel::amdahl_speedup(sc.f, sc.s))},
                      {"limit", sc.f < 1.0 ? number(1.0 / (1.0 - sc.f)) : Json("undefined")}});
  }
  novel_j["amdahl"] = amdahl;
  report["novel"] = novel_j;

  if (trace.node_ids.size() >= 2) {
    const auto cm = causality::build_causal_matrix(trace, causality::Signal::by_name(options.causal_signal),
                                                   options.causal_lag, options.threads);
    for (const auto& w : cm.warnings) warnings.push_back("causality: " + w);
    const auto ev = options.explainability ? *options.explainability
                                           : causality::default_explainability(cm.node_ids.size());
    const auto score = causality::observability_score(ev, cm.matrix);
    for (const auto& w : score.warnings) warnings.push_back("observability: " + w);
    Json obs = to_json(cm, score);
    obs["signal"] = options.causal_signal;
    obs["lag"] = options.causal_lag;
    report["observability"] = obs;
  } else {
    report["observability"] = "undefined";
    warnings.push_back("observability needs at least 2 nodes");
  }

  if (options.equilibrium) {
    const auto sol = equilibrium::solve_equilibrium(*options.equilibrium);
    report["equilibrium"] =
        to_json(equilibrium::equilibrium_report(*options.equilibrium, sol, options.equilibrium_amdahl_fraction));
  }

  if (options.include_quality) {
    const auto registry = quality::default_registry();
    Trace comparison = trace;
    if (auto span = time_span(trace); span && span->second > span->first) {
      comparison = window(trace, span->first, span->first + 0.5 * (span->second - span->first));
    }
    const auto names = options.quality_metrics ? *options.quality_metrics : registry.names();
    Json q = Json::array();
    for (const auto& name : names) {
      quality::MetricHandle handle{name, {}};
      if (name == "carbon_g") handle.params["intensity_g_per_kwh"] = options.carbon.intensity_g_per_kwh;
      if (name == "observability_score") handle.params["lag"] = options.causal_lag;
      if (name == "mean_cooling_k" && options.thermal_te_c) handle.params["te_c"] = *options.thermal_te_c;
      q.push_back(to_json(quality::assess(registry, handle, trace, comparison, options.quality)));
    }
    report["metric_quality"] = q;
  }

  if (options.ground_truth_config) report["ground_truth"] = to_json(sim::describe_ground_truth(*options.ground_truth_config));

  report["warnings"] = warnings;
  return report;
}

std::string to_json_text(const Json& report) { return report.dump(2) + "\n"; }

std::string to_csv(const Json& report) {
  std::ostringstream out;
  out << "metric,value\n";
  flatten(report, "", out);
  return out.str();
}

}  // namespace dccm::report
