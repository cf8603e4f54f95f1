#include "dccm/metric_quality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "dccm/causality.hpp"
#include "dccm/classic_metrics.hpp"
#include "dccm/novel_metrics.hpp"
#include "dccm/random.hpp"

namespace dccm::quality {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double param_or(const MetricParams& p, const char* key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

Measure mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

MetricDefinition def(std::string name, std::string unit, std::string description, std::set<std::string> inputs,
                     std::function<Measure(const Trace&, const MetricParams&)> fn) {
  MetricDefinition d;
  d.name = std::move(name);
  d.unit = std::move(unit);
  d.description = std::move(description);
  d.inputs = std::move(inputs);
  d.compute = [fn = std::move(fn)](const Trace& t, const MetricParams& p, const EvalContext&) { return fn(t, p); };
  return d;
}

// Previous timestamp of each node sample's node, or -inf for a node's first sample.
std::vector<double> previous_timestamps(const Trace& trace) {
  std::vector<double> prev(trace.node_samples.size(), -kInf);
  std::unordered_map<std::string, double> last;
  for (std::size_t i = 0; i < trace.node_samples.size(); ++i) {
    const auto& s = trace.node_samples[i];
    if (auto it = last.find(s.node_id); it != last.end()) prev[i] = it->second;
    last[s.node_id] = s.timestamp;
  }
  return prev;
}

// Visits the field in every record that carries it.
template <class Fn>
void for_each_value(Trace& t, const std::string& field, Fn&& fn) {
  const auto prev = field == "node.busy_s" ? previous_timestamps(t) : std::vector<double>{};
  for (std::size_t i = 0; i < t.node_samples.size(); ++i) {
    auto& s = t.node_samples[i];
    if (field == "node.cpu_util") fn(s.cpu_util, 0.0, 1.0);
    else if (field == "node.mem_util") fn(s.mem_util, 0.0, 1.0);
    else if (field == "node.energy_j") fn(s.energy_j, 0.0, kInf);
    else if (field == "node.temperature_c" && s.temperature_c) fn(*s.temperature_c, -kInf, kInf);
    else if (field == "node.busy_s") fn(s.busy_s, 0.0, prev[i] == -kInf ? kInf : s.timestamp - prev[i]);
  }
  for (auto& s : t.net_samples) {
    if (field == "net.latency_ms") fn(s.latency_ms, 0.0, kInf);
    else if (field == "net.capacity_bps") fn(s.capacity_bps, 1.0, kInf);
  }
  for (auto& r : t.requests)
    if (field == "request.cost_units") fn(r.cost_units, 0.0, kInf);
  for (auto& e : t.adaptations) {
    if (field == "adaptation.p_base") fn(e.p_base, 1e-12, kInf);
    else if (field == "adaptation.p_post") fn(e.p_post, 1e-12, kInf);
    else if (field == "adaptation.t_adapt_s") fn(e.t_adapt_s, 1e-12, kInf);
  }
}

}  // namespace

std::string MetricDefinition::fingerprint() const {
  std::ostringstream s;
  s << name << '|' << unit << '|' << version << '|' << description;
  for (const auto& in : inputs) s << '|' << in;
  return hex64(fnv1a64(s.str()));
}

void MetricRegistry::add(MetricDefinition def) {
  if (def.name.empty() || !def.compute) throw ArgumentError("metric definition needs a name and a computation");
  for (const auto& in : def.inputs) field_info(in);
  defs_.push_back(std::move(def));
}

const MetricDefinition& MetricRegistry::resolve(const std::string& name) const {
  for (auto it = defs_.rbegin(); it != defs_.rend(); ++it)
    if (it->name == name) return *it;
  throw ArgumentError("unknown metric '" + name + "'");
}

std::vector<const MetricDefinition*> MetricRegistry::definitions_named(const std::string& name) const {
  std::vector<const MetricDefinition*> out;
  for (const auto& d : defs_)
    if (d.name == name) out.push_back(&d);
  return out;
}

std::vector<std::string> MetricRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& d : defs_)
    if (std::find(out.begin(), out.end(), d.name) == out.end()) out.push_back(d.name);
  return out;
}

bool MetricRegistry::contains(const std::string& name) const {
  return std::any_of(defs_.begin(), defs_.end(), [&](const auto& d) { return d.name == name; });
}

Measure MetricRegistry::evaluate(const MetricHandle& handle, const Trace& trace, const EvalContext& ctx) const {
  const MetricDefinition& d = resolve(handle.name);
  try {
    Measure m = d.compute(trace, handle.params, ctx);
    if (m && !std::isfinite(*m)) return std::nullopt;
    return m;
  } catch (const Error&) {
    return std::nullopt;
  }
}

MetricRegistry default_registry() {
  using namespace classic;
  MetricRegistry r;
  r.add(def("fleet_mean_cpu_util", "fraction", "Mean over nodes of the time-weighted mean cpu_util.",
            {"node.cpu_util"},
            [](const Trace& t, const MetricParams&) { return utilization(t.node_samples, Resource::cpu).fleet_mean; }));
  r.add(def("fleet_mean_mem_util", "fraction", "Mean over nodes of the time-weighted mean mem_util.",
            {"node.mem_util"},
            [](const Trace& t, const MetricParams&) { return utilization(t.node_samples, Resource::mem).fleet_mean; }));
  r.add(def("fleet_busy_fraction", "fraction", "Mean over nodes of busy time divided by observed span.",
            {"node.busy_s"},
            [](const Trace& t, const MetricParams&) { return utilization(t.node_samples, Resource::busy).fleet_mean; }));
  r.add(def("energy_total_j", "J", "Total energy consumed by all nodes.", {"node.energy_j"},
            [](const Trace& t, const MetricParams&) -> Measure { return energy_summary(t.node_samples).total_j; }));
  r.add(def("mean_power_w", "W", "Fleet energy divided by the observed node-sample span.", {"node.energy_j"},
            [](const Trace& t, const MetricParams&) { return energy_summary(t.node_samples).mean_power_w; }));
  r.add(def("carbon_g", "gCO2e", "Operational emissions: energy in kWh times grid carbon intensity.",
            {"node.energy_j"}, [](const Trace& t, const MetricParams& p) -> Measure {
              const double intensity = param_or(p, "intensity_g_per_kwh", novel::kDefaultCarbonIntensity);
              return novel::carbon_emissions(energy_summary(t.node_samples).total_j, {intensity});
            }));
  r.add(def("availability", "fraction", "Mean per-node sampling coverage of the trace span.", {},
            [](const Trace& t, const MetricParams&) { return coverage_availability(t); }));
  r.add(def("max_concurrency", "requests", "Largest number of simultaneously executing requests.", {},
            [](const Trace& t, const MetricParams&) -> Measure {
              return static_cast<double>(max_concurrency(t.requests));
            }));
  r.add(def("mean_response_s", "s", "Mean of finish_ts - arrival_ts over requests.", {},
            [](const Trace& t, const MetricParams&) -> Measure { return response_stats(t.requests).mean_response_s; }));
  r.add(def("p95_response_s", "s", "Nearest-rank 95th percentile response time.", {},
            [](const Trace& t, const MetricParams&) -> Measure { return response_stats(t.requests).p95_response_s; }));
  r.add(def("mean_service_s", "s", "Mean of finish_ts - start_ts over requests.", {},
            [](const Trace& t, const MetricParams&) -> Measure { return response_stats(t.requests).mean_service_s; }));
  r.add(def("error_rate", "fraction", "Fraction of requests with ok = false.", {},
            [](const Trace& t, const MetricParams&) -> Measure { return response_stats(t.requests).error_rate; }));
  r.add(def("accuracy", "fraction", "Fraction of judged successful requests that were correct.", {},
            [](const Trace& t, const MetricParams&) { return response_stats(t.requests).accuracy; }));
  r.add(def("total_cost", "cost_units", "Sum of request cost_units.", {"request.cost_units"},
            [](const Trace& t, const MetricParams&) -> Measure { return response_stats(t.requests).total_cost; }));
  r.add(def("mean_latency_ms", "ms", "Mean latency over all network samples.", {"net.latency_ms"},
            [](const Trace& t, const MetricParams&) {
              std::vector<double> v;
              for (const auto& s : t.net_samples) v.push_back(s.latency_ms);
              return mean_of(v);
            }));
  auto packet_totals = [](const Trace& t) {
    double sent = 0.0;
    double delivered = 0.0;
    for (const auto& s : t.net_samples) {
      sent += static_cast<double>(s.packets_sent);
      delivered += static_cast<double>(s.packets_delivered);
    }
    return std::pair{sent, delivered};
  };
  r.add(def("network_pdr", "fraction", "Delivered over sent packets across all links.",
            {"net.packets_sent", "net.packets_delivered"}, [packet_totals](const Trace& t, const MetricParams&) {
              const auto [sent, delivered] = packet_totals(t);
              return safe_ratio(delivered, sent);
            }));
  r.add(def("network_plr", "fraction", "One minus the packet delivery rate across all links.",
            {"net.packets_sent", "net.packets_delivered"}, [packet_totals](const Trace& t, const MetricParams&) {
              const auto [sent, delivered] = packet_totals(t);
              const Measure pdr = safe_ratio(delivered, sent);
              return pdr ? Measure(1.0 - *pdr) : std::nullopt;
            }));
  r.add(def("network_throughput_bps", "bit/s", "Sum over links of delivered bits per second.",
            {"net.bytes_delivered"}, [](const Trace& t, const MetricParams&) -> Measure {
              const auto rep = network_kpis(t.net_samples);
              if (rep.links.empty()) return std::nullopt;
              double total = 0.0;
              for (const auto& l : rep.links) {
                if (!l.throughput_bps) return std::nullopt;
                total += *l.throughput_bps;
              }
              return total;
            }));
  r.add(def("mean_bandwidth_util", "fraction", "Mean over links of throughput over mean capacity.",
            {"net.bytes_delivered", "net.capacity_bps"}, [](const Trace& t, const MetricParams&) -> Measure {
              std::vector<double> v;
              for (const auto& l : network_kpis(t.net_samples).links) {
                if (!l.bandwidth_util) return std::nullopt;
                v.push_back(*l.bandwidth_util);
              }
              return mean_of(v);
            }));
  r.add(def("jain_fairness_cpu", "index", "Jain index over per-node mean cpu_util.", {"node.cpu_util"},
            [](const Trace& t, const MetricParams&) {
              return novel::fairness_by_resource(t, novel::FairnessResource::cpu).index;
            }));
  r.add(def("jain_fairness_energy", "index", "Jain index over per-node total energy.", {"node.energy_j"},
            [](const Trace& t, const MetricParams&) {
              return novel::fairness_by_resource(t, novel::FairnessResource::energy).index;
            }));
  r.add(def("jain_fairness_bandwidth", "index", "Jain index over per-node bytes on incident links.",
            {"net.bytes_delivered"}, [](const Trace& t, const MetricParams&) {
              return novel::fairness_by_resource(t, novel::FairnessResource::bandwidth).index;
            }));
  r.add(def("adaptivity_quotient", "1/s", "Mean over adaptation events of improvement ratio per adaptation second.",
            {"adaptation.p_base", "adaptation.p_post", "adaptation.t_adapt_s"},
            [](const Trace& t, const MetricParams&) -> Measure {
              if (t.adaptations.empty()) return std::nullopt;
              return novel::adaptivity_quotient(t.adaptations);
            }));
  r.add(def("observability_score", "score",
            "Clamped observability score over a Granger cpu_util causal matrix with unit explainability.",
            {"node.cpu_util"}, [](const Trace& t, const MetricParams& p) -> Measure {
              const int lag = static_cast<int>(param_or(p, "lag", causality::kDefaultLag));
              const auto cm = causality::build_causal_matrix(t, causality::Signal::cpu_util(), lag, 1);
              const auto score =
                  causality::observability_score(causality::default_explainability(cm.node_ids.size()), cm.matrix);
              return score.clamped;
            }));
  r.add(def("mean_cooling_k", "1/s", "Mean fitted Newton cooling constant over nodes with temperature data.",
            {"node.temperature_c"}, [](const Trace& t, const MetricParams& p) -> Measure {
              std::optional<double> te;
              if (auto it = p.find("te_c"); it != p.end()) te = it->second;
              std::vector<double> ks;
              for (const auto& id : t.node_ids) {
                std::vector<novel::TemperaturePoint> pts;
                for (const auto& s : samples_of(t, id))
                  if (s.temperature_c) pts.push_back({s.timestamp, *s.temperature_c});
                try {
                  ks.push_back(novel::fit_cooling(pts, te).params.k);
                } catch (const Error&) {
                }
              }
              return mean_of(ks);
            }));
  return r;
}

const std::vector<FieldInfo>& numeric_fields() {
  static const std::vector<FieldInfo> fields{
      {"node.cpu_util", 0.0, 1.0, true, 0.01},
      {"node.mem_util", 0.0, 1.0, true, 0.01},
      {"node.energy_j", 0.0, kInf, true, 1.0},
      {"node.temperature_c", -kInf, kInf, true, 0.5},
      {"node.busy_s", 0.0, kInf, true, 0.01},
      {"net.latency_ms", 0.0, kInf, true, 1.0},
      {"net.capacity_bps", 1.0, kInf, true, 1000.0},
      {"net.bytes_delivered", 0.0, kInf, false, 0.0},
      {"net.packets_sent", 0.0, kInf, false, 0.0},
      {"net.packets_delivered", 0.0, kInf, false, 0.0},
      {"request.cost_units", 0.0, kInf, true, 0.1},
      {"adaptation.p_base", 1e-12, kInf, true, 0.01},
      {"adaptation.p_post", 1e-12, kInf, true, 0.01},
      {"adaptation.t_adapt_s", 1e-12, kInf, true, 0.01},
  };
  return fields;
}

const FieldInfo& field_info(const std::string& name) {
  for (const auto& f : numeric_fields())
    if (f.name == name) return f;
  throw ArgumentError("unknown numeric trace field '" + name + "'");
}

Trace perturb(const Trace& trace, const std::string& field, double delta) {
  const FieldInfo& info = field_info(field);
  if (!info.perturbable) throw ArgumentError("field '" + field + "' is an integer counter and cannot be perturbed");
  if (delta == 0.0 || !std::isfinite(delta)) throw ArgumentError("perturbation delta must be finite and non-zero");
  Trace out = trace;
  for_each_value(out, field, [&](double& v, double lo, double hi) { v = std::clamp(v + delta, lo, hi); });
  return out;
}

Trace randomize(const Trace& trace, const std::string& field, std::uint64_t seed) {
  field_info(field);
  Rng rng(derive_seed(seed, field));
  Trace out = trace;
  if (field == "node.busy_s") {
    const auto prev = previous_timestamps(out);
    for (std::size_t i = 0; i < out.node_samples.size(); ++i) {
      auto& s = out.node_samples[i];
      s.busy_s = prev[i] == -kInf ? rng.uniform() * s.busy_s : rng.uniform() * (s.timestamp - prev[i]);
    }
  } else if (field == "net.bytes_delivered") {
    for (auto& s : out.net_samples) s.bytes_delivered = rng.integer(0, 1'000'000);
  } else if (field == "net.packets_sent") {
    for (auto& s : out.net_samples) s.packets_sent = rng.integer(s.packets_delivered, s.packets_delivered + 1000);
  } else if (field == "net.packets_delivered") {
    for (auto& s : out.net_samples) s.packets_delivered = rng.integer(0, s.packets_sent);
  } else {
    double lo = 0.0;
    double hi = 1.0;
    if (field == "node.energy_j") hi = 1000.0;
    if (field == "node.temperature_c") lo = 20.0, hi = 90.0;
    if (field == "net.latency_ms") hi = 500.0;
    if (field == "net.capacity_bps") lo = 1e6, hi = 1e9;
    if (field == "request.cost_units") hi = 10.0;
    if (field.starts_with("adaptation.")) lo = 0.1, hi = 10.0;
    for_each_value(out, field, [&](double& v, double, double) { v = rng.uniform(lo, hi); });
  }
  return out;
}

Measure sensitivity(const MetricRegistry& registry, const MetricHandle& metric, const Trace& trace,
                    const Perturbation& perturbation) {
  const Trace perturbed = perturb(trace, perturbation.field, perturbation.delta);
  const Measure before = registry.evaluate(metric, trace);
  const Measure after = registry.evaluate(metric, perturbed);
  if (!before || !after) return std::nullopt;
  return std::abs(*after - *before) / std::abs(perturbation.delta);
}

Measure repeatability(const MetricRegistry& registry, const MetricHandle& metric, const Trace& trace, int repeats,
                      std::uint64_t seed_base) {
  if (repeats < 2) throw ArgumentError("repeatability needs at least 2 repeats");
  std::vector<Measure> runs;
  for (int r = 0; r < repeats; ++r) {
    runs.push_back(registry.evaluate(metric, trace, {seed_base + static_cast<std::uint64_t>(r)}));
  }
  if (std::all_of(runs.begin(), runs.end(), [&](const Measure& m) { return m == runs.front(); })) return 0.0;
  if (std::any_of(runs.begin(), runs.end(), [](const Measure& m) { return !m; })) return std::nullopt;
  std::vector<double> v;
  for (const auto& m : runs) v.push_back(*m);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(v.size()));
  return safe_ratio(sd, std::abs(mean));
}

ConsistencyResult consistency(const MetricRegistry& registry, const MetricHandle& metric, const Trace& trace_a,
                              const Trace& trace_b) {
  const auto defs = registry.definitions_named(metric.name);
  if (defs.empty()) throw ArgumentError("unknown metric '" + metric.name + "'");
  ConsistencyResult out;
  out.unit = defs.back()->unit;
  out.fingerprint = defs.back()->fingerprint();
  out.consistent = true;
  for (const auto* d : defs) {
    if (d->unit != out.unit) {
      out.consistent = false;
      out.notes.push_back("definitions disagree on unit: '" + d->unit + "' vs '" + out.unit + "'");
    }
    if (d->fingerprint() != out.fingerprint) {
      out.consistent = false;
      out.notes.push_back("definition v" + std::to_string(d->version) + " fingerprint " + d->fingerprint() +
                          " differs from " + out.fingerprint);
    }
  }
  out.undefined_a = !registry.evaluate(metric, trace_a);
  out.undefined_b = !registry.evaluate(metric, trace_b);
  if (out.undefined_a) out.notes.push_back("undefined on first trace");
  if (out.undefined_b) out.notes.push_back("undefined on second trace");
  return out;
}

double independence(const MetricRegistry& registry, const MetricHandle& metric, const Trace& trace,
                    const std::string& irrelevant_field, std::uint64_t seed) {
  const MetricDefinition& d = registry.resolve(metric.name);
  field_info(irrelevant_field);
  if (d.inputs.count(irrelevant_field) != 0) {
    throw DeclarationError("field '" + irrelevant_field + "' is a declared input of '" + metric.name + "'", 0.0);
  }
  const Measure before = registry.evaluate(metric, trace);
  const Measure after = registry.evaluate(metric, randomize(trace, irrelevant_field, seed));
  if (before.has_value() != after.has_value()) {
    throw DeclarationError("'" + metric.name + "' changed definedness when '" + irrelevant_field + "' was randomized",
                           kInf);
  }
  const double delta = before ? std::abs(*after - *before) : 0.0;
  if (delta != 0.0) {
    std::ostringstream msg;
    msg << "'" << metric.name << "' declared independent of '" << irrelevant_field << "' but changed by " << delta;
    throw DeclarationError(msg.str(), delta);
  }
  return delta;
}

QualityReport assess(const MetricRegistry& registry, const MetricHandle& metric, const Trace& trace,
                     const Trace& comparison, const QualityOptions& options) {
  const MetricDefinition& d = registry.resolve(metric.name);
  QualityReport rep;
  rep.metric = d.name;
  rep.unit = d.unit;
  rep.description = d.description;
  rep.fingerprint = d.fingerprint();
  rep.seed = options.seed;
  rep.value = registry.evaluate(metric, trace);

  if (options.perturbation) {
    rep.perturbation = *options.perturbation;
  } else {
    rep.perturbation = {"node.cpu_util", field_info("node.cpu_util").default_delta};
    for (const auto& in : d.inputs) {
      const FieldInfo& f = field_info(in);
      if (f.perturbable) {
        rep.perturbation = {f.name, f.default_delta};
        break;
      }
    }
  }
  rep.sensitivity = sensitivity(registry, metric, trace, rep.perturbation);
  rep.repeats = options.repeats;
  rep.repeatability_cv = repeatability(registry, metric, trace, options.repeats, options.seed);

  const auto cons = consistency(registry, metric, trace, comparison);
  rep.consistency_ok = cons.consistent;
  rep.consistency_notes = cons.notes;

  for (const auto& f : numeric_fields()) {
    if (d.inputs.count(f.name) != 0) continue;
    rep.independence_fields.push_back(f.name);
    try {
      independence(registry, metric, trace, f.name, options.seed);
    } catch (const DeclarationError& e) {
      rep.declaration_violations.push_back(e.what());
      if (std::isfinite(e.delta())) rep.independence_delta = std::max(rep.independence_delta, e.delta());
    }
  }
  return rep;
}

}  // namespace dccm::quality
