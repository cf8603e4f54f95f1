#include "dccm/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "dccm/report.hpp"

namespace dccm::cli {

namespace {

using report::Json;
using nlohmann::json;

struct Common {
  std::string in;
  std::string window;
  bool lenient = false;
};

void add_input(CLI::App* cmd, Common& c, bool with_window = true) {
  cmd->add_option("--in", c.in, "Telemetry trace (JSONL)")->required();
  cmd->add_flag("--lenient", c.lenient, "Drop invalid records with a warning instead of failing");
  if (with_window) cmd->add_option("--window", c.window, "Restrict to [start, end) as start:end");
}

std::pair<double, double> parse_window(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ArgumentError("--window expects start:end, got '" + text + "'");
  try {
    std::size_t used_a = 0, used_b = 0;
    const std::string a = text.substr(0, colon), b = text.substr(colon + 1);
    const double t0 = std::stod(a, &used_a);
    const double t1 = std::stod(b, &used_b);
    if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument(text);
    if (!(t0 < t1)) throw ArgumentError("--window start must be below end");
    return {t0, t1};
  } catch (const std::logic_error&) {
    throw ArgumentError("--window expects start:end, got '" + text + "'");
  }
}

Trace load_input(const Common& c, std::ostream& err) {
  auto loaded = load_trace_file(c.in, c.lenient ? Strictness::lenient : Strictness::strict);
  for (const auto& w : loaded.warnings) err << "warning: " << w << '\n';
  if (c.window.empty()) return std::move(loaded.trace);
  const auto [t0, t1] = parse_window(c.window);
  return window(loaded.trace, t0, t1);
}

json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw DataError(std::string("cannot open ") + what + " '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(1, std::string(what) + " '" + path + "': " + e.what());
  }
}

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(std::string("cannot open ") + what + " '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write '" + path + "'");
  f << text;
  if (!f) throw DataError("write failed for '" + path + "'");
}

std::string print_number(const Measure& m) { return report::measure(m).dump() + "\n"; }

std::string generated_at() {
  std::time_t now = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde) now = static_cast<std::time_t>(std::atoll(sde));
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ArgumentError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ArgumentError("unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
T get(const json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ArgumentError("config key '" + what + "' has the wrong type");
  }
}

classic::TimeSeries read_series(const json& j, const std::string& what) {
  reject_unknown(j, {"t", "v"}, what);
  return {get<std::vector<double>>(j.at("t"), what + ".t"), get<std::vector<double>>(j.at("v"), what + ".v")};
}

// Applies a report config file (JSON) to the options. Explicit flags are
// applied afterwards by the caller and win.
void apply_report_config(const json& cfg, report::ReportOptions& o) {
  reject_unknown(cfg, {"carbon", "observability", "thermal", "amdahl", "equilibrium", "classic", "quality", "window", "threads"},
                 "report config");
  if (auto it = cfg.find("carbon"); it != cfg.end()) {
    reject_unknown(*it, {"intensity_g_per_kwh"}, "carbon");
    if (it->contains("intensity_g_per_kwh")) {
      o.carbon.intensity_g_per_kwh = get<double>(it->at("intensity_g_per_kwh"), "carbon.intensity_g_per_kwh");
      o.carbon_source = "config";
    }
  }
  if (auto it = cfg.find("observability"); it != cfg.end()) {
    reject_unknown(*it, {"signal", "lag"}, "observability");
    if (it->contains("signal")) o.causal_signal = get<std::string>(it->at("signal"), "observability.signal");
    if (it->contains("lag")) o.causal_lag = get<int>(it->at("lag"), "observability.lag");
  }
  if (auto it = cfg.find("thermal"); it != cfg.end()) {
    reject_unknown(*it, {"te_c"}, "thermal");
    if (it->contains("te_c")) o.thermal_te_c = get<double>(it->at("te_c"), "thermal.te_c");
  }
  if (auto it = cfg.find("amdahl"); it != cfg.end()) {
    for (const auto& s : *it) {
      reject_unknown(s, {"f", "s"}, "amdahl scenario");
      o.amdahl.push_back({get<double>(s.at("f"), "amdahl.f"), get<double>(s.at("s"), "amdahl.s")});
    }
  }
  if (auto it = cfg.find("equilibrium"); it != cfg.end()) {
    reject_unknown(*it, {"problem", "amdahl_fraction"}, "equilibrium");
    if (it->contains("problem")) {
      std::istringstream ss(it->at("problem").dump());
      o.equilibrium = equilibrium::load_problem(ss);
    }
    if (it->contains("amdahl_fraction"))
      o.equilibrium_amdahl_fraction = get<double>(it->at("amdahl_fraction"), "equilibrium.amdahl_fraction");
  }
  if (auto it = cfg.find("classic"); it != cfg.end()) {
    reject_unknown(*it, {"speedup_times", "speedups", "elasticity", "up_intervals"}, "classic");
    if (it->contains("speedup_times")) {
      const auto v = get<std::vector<double>>(it->at("speedup_times"), "classic.speedup_times");
      if (v.size() != 2) throw ArgumentError("classic.speedup_times is [t_baseline, t_parallel]");
      o.classic.speedup_times = std::make_pair(v[0], v[1]);
    }
    if (it->contains("speedups")) {
      std::map<int, double> m;
      for (const auto& [k, v] : it->at("speedups").items()) {
        try {
          m[std::stoi(k)] = get<double>(v, "classic.speedups");
        } catch (const std::logic_error&) {
          throw ArgumentError("classic.speedups keys are node counts");
        }
      }
      o.classic.speedups = m;
    }
    if (it->contains("elasticity")) {
      const auto& e = it->at("elasticity");
      reject_unknown(e, {"provisioned", "demanded"}, "classic.elasticity");
      o.classic.elasticity_series = std::make_pair(read_series(e.at("provisioned"), "classic.elasticity.provisioned"),
                                                   read_series(e.at("demanded"), "classic.elasticity.demanded"));
    }
    if (it->contains("up_intervals")) {
      const auto& u = it->at("up_intervals");
      reject_unknown(u, {"intervals", "span"}, "classic.up_intervals");
      std::vector<classic::Interval> iv;
      for (const auto& p : get<std::vector<std::vector<double>>>(u.at("intervals"), "classic.up_intervals.intervals")) {
        if (p.size() != 2) throw ArgumentError("classic.up_intervals.intervals entries are [begin, end]");
        iv.push_back({p[0], p[1]});
      }
      const auto span = get<std::vector<double>>(u.at("span"), "classic.up_intervals.span");
      if (span.size() != 2) throw ArgumentError("classic.up_intervals.span is [begin, end]");
      o.classic.up_intervals = std::make_pair(iv, classic::Interval{span[0], span[1]});
    }
  }
  if (auto it = cfg.find("quality"); it != cfg.end()) {
    reject_unknown(*it, {"enabled", "metrics", "repeats", "seed", "perturbation"}, "quality");
    if (it->contains("enabled")) o.include_quality = get<bool>(it->at("enabled"), "quality.enabled");
    if (it->contains("metrics")) o.quality_metrics = get<std::vector<std::string>>(it->at("metrics"), "quality.metrics");
    if (it->contains("repeats")) o.quality.repeats = get<int>(it->at("repeats"), "quality.repeats");
    if (it->contains("seed")) o.quality.seed = get<std::uint64_t>(it->at("seed"), "quality.seed");
    if (it->contains("perturbation")) {
      const auto& p = it->at("perturbation");
      reject_unknown(p, {"field", "delta"}, "quality.perturbation");
      o.quality.perturbation = quality::Perturbation{get<std::string>(p.at("field"), "quality.perturbation.field"),
                                                     get<double>(p.at("delta"), "quality.perturbation.delta")};
    }
  }
  if (auto it = cfg.find("window"); it != cfg.end()) o.window = parse_window(get<std::string>(*it, "window"));
  if (auto it = cfg.find("threads"); it != cfg.end()) o.threads = get<unsigned>(*it, "threads");
}

double parse_double_env(const char* name, const char* value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != std::string(value).size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::logic_error&) {
    throw ArgumentError(std::string(name) + " must be a number");
  }
}

// ---- subcommands -----------------------------------------------------------

struct SimulateArgs {
  std::string config, out, ground_truth;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  sim::SimConfig config;
  if (!a.config.empty()) config = sim::load_config_file(a.config);
  if (a.seed) config.seed = *a.seed;
  if (a.duration) config.duration_s = *a.duration;
  sim::validate_config(config);
  write_output(a.out, serialize_trace(sim::simulate(config)), out);
  if (!a.ground_truth.empty())
    write_output(a.ground_truth, report::to_json_text(report::to_json(sim::describe_ground_truth(config))), out);
  return kOk;
}

int cmd_validate(const Common& c, bool as_json, std::ostream& out, std::ostream& err) {
  auto loaded = load_trace_file(c.in, Strictness::lenient);
  auto rep = validate_trace(loaded.trace);
  std::vector<Violation> dropped;
  for (const auto& w : loaded.warnings) {
    constexpr std::string_view prefix = "dropped record: ";
    if (w.rfind(prefix, 0) == 0) {
      dropped.push_back({w.substr(prefix.size()), c.in});
    } else if (!c.lenient) {
      dropped.push_back({w, c.in});
    } else {
      err << "warning: " << w << '\n';
    }
  }
  rep.violations.insert(rep.violations.begin(), dropped.begin(), dropped.end());
  for (const auto& v : rep.violations) err << "violation: " << v.invariant << " (" << v.record << ")\n";
  if (as_json) {
    out << report::to_json_text(report::to_json(rep));
  } else {
    out << rep.violations.size() << " violations\n";
  }
  return rep.ok() ? kOk : kDataError;
}

struct ReportArgs {
  Common common;
  std::string config, seed_config, format = "json", out, problem, explainability;
  std::optional<double> carbon_intensity, te_c, amdahl_fraction;
  std::optional<int> lag;
  std::optional<std::string> signal;
  std::optional<unsigned> threads;
  bool no_quality = false;
};

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  report::ReportOptions o;
  Json invocation = Json::object();
  if (const char* env = std::getenv("CM_CARBON_INTENSITY"); env && *env) {
    o.carbon.intensity_g_per_kwh = parse_double_env("CM_CARBON_INTENSITY", env);
    o.carbon_source = "env";
    invocation["env_carbon_intensity"] = o.carbon.intensity_g_per_kwh;
  }
  if (!a.config.empty()) {
    const auto cfg = read_json_file(a.config, "report config");
    apply_report_config(cfg, o);
    invocation["config"] = cfg;
  }
  if (!a.seed_config.empty()) {
    o.ground_truth_config = sim::load_config_file(a.seed_config);
    invocation["seed_config"] = json::parse(read_file(a.seed_config, "simulator config"));
  }
  if (a.carbon_intensity) {
    o.carbon.intensity_g_per_kwh = *a.carbon_intensity;
    o.carbon_source = "flag";
  }
  if (a.te_c) o.thermal_te_c = a.te_c;
  if (a.lag) o.causal_lag = *a.lag;
  if (a.signal) o.causal_signal = *a.signal;
  if (a.threads) o.threads = *a.threads;
  if (a.no_quality) o.include_quality = false;
  if (!a.problem.empty()) {
    o.equilibrium = equilibrium::load_problem_file(a.problem);
    invocation["problem"] = json::parse(read_file(a.problem, "problem"));
  }
  if (a.amdahl_fraction) o.equilibrium_amdahl_fraction = a.amdahl_fraction;
  if (!a.common.window.empty()) o.window = parse_window(a.common.window);
  if (a.format != "json" && a.format != "csv") throw ArgumentError("--format must be json or csv");

  auto loaded = load_trace_file(a.common.in, a.common.lenient ? Strictness::lenient : Strictness::strict);
  for (const auto& w : loaded.warnings) err << "warning: " << w << '\n';
  Trace trace = o.window ? window(loaded.trace, o.window->first, o.window->second) : std::move(loaded.trace);
  if (!a.explainability.empty()) {
    std::ifstream in(a.explainability);
    if (!in) throw DataError("cannot open explainability file '" + a.explainability + "'");
    o.explainability = causality::load_explainability(in, trace.node_ids);
    invocation["explainability"] = read_file(a.explainability, "explainability file");
  }

  invocation["carbon_intensity"] = o.carbon.intensity_g_per_kwh;
  invocation["te_c"] = o.thermal_te_c ? Json(*o.thermal_te_c) : Json(nullptr);
  invocation["lag"] = o.causal_lag;
  invocation["signal"] = o.causal_signal;
  invocation["quality"] = o.include_quality;
  invocation["amdahl_fraction"] = o.equilibrium_amdahl_fraction ? Json(*o.equilibrium_amdahl_fraction) : Json(nullptr);
  invocation["window"] = a.common.window;
  o.config_digest = hex64(fnv1a64(invocation.dump()));
  o.generated_at = generated_at();

  const auto doc = report::build_report(trace, o);
  for (const auto& w : doc["warnings"]) err << "warning: " << w.get<std::string>() << '\n';
  write_output(a.out, a.format == "csv" ? report::to_csv(doc) : report::to_json_text(doc), out);
  return kOk;
}

int cmd_fairness(const Common& c, const std::string& resource, const std::vector<double>& values, std::ostream& out,
                 std::ostream& err) {
  if (!values.empty()) {
    out << print_number(novel::jain_fairness(values));
    return kOk;
  }
  if (c.in.empty()) throw ArgumentError("fairness needs --in or --values");
  const auto res = novel::parse_fairness_resource(resource);
  if (res == novel::FairnessResource::custom) throw ArgumentError("--resource custom needs --values");
  const auto f = novel::fairness_by_resource(load_input(c, err), res);
  if (!f.index) err << "warning: fairness undefined (no " << resource << " data or all zero)\n";
  out << print_number(f.index);
  return kOk;
}

struct ObservabilityArgs {
  Common common;
  std::string signal = "cpu_util", explainability;
  int lag = causality::kDefaultLag;
  unsigned threads = 0;
};

int cmd_observability(const ObservabilityArgs& a, std::ostream& out, std::ostream& err) {
  const Trace trace = load_input(a.common, err);
  const auto cm = causality::build_causal_matrix(trace, causality::Signal::by_name(a.signal), a.lag, a.threads);
  for (const auto& w : cm.warnings) err << "warning: " << w << '\n';
  causality::ExplainabilityVector ev = causality::default_explainability(cm.node_ids.size());
  if (!a.explainability.empty()) {
    std::ifstream in(a.explainability);
    if (!in) throw DataError("cannot open explainability file '" + a.explainability + "'");
    ev = causality::load_explainability(in, cm.node_ids);
  }
  const auto score = causality::observability_score(ev, cm.matrix);
  for (const auto& w : score.warnings) err << "warning: " << w << '\n';
  Json j = report::to_json(cm, score);
  j["signal"] = a.signal;
  j["lag"] = a.lag;
  out << report::to_json_text(j);
  return kOk;
}

int cmd_thermal_fit(const Common& c, const std::string& node, std::optional<double> te, std::ostream& out,
                    std::ostream& err) {
  const Trace trace = load_input(c, err);
  if (!node.empty() && std::find(trace.node_ids.begin(), trace.node_ids.end(), node) == trace.node_ids.end())
    throw ArgumentError("unknown node '" + node + "'");
  Json fits = Json::array();
  bool failed = false;
  for (const auto& id : trace.node_ids) {
    if (!node.empty() && id != node) continue;
    std::vector<novel::TemperaturePoint> pts;
    for (const auto& s : samples_of(trace, id))
      if (s.temperature_c) pts.push_back({s.timestamp, *s.temperature_c});
    if (pts.empty()) {
      if (!node.empty()) throw DataError("node '" + id + "' has no temperature samples");
      continue;
    }
    try {
      const auto fit = novel::fit_cooling(pts, te);
      fits.push_back({{"node_id", id},
                      {"points", pts.size()},
                      {"t0_c", report::number(fit.params.t0_c)},
                      {"te_c", report::number(fit.params.te_c)},
                      {"te_estimated", fit.te_estimated},
                      {"k", report::number(fit.params.k)},
                      {"rms_residual_c", report::number(fit.rms_residual_c)}});
    } catch (const DataError& e) {
      err << "error: node '" << id << "': " << e.what() << '\n';
      fits.push_back({{"node_id", id}, {"points", pts.size()}, {"error", e.what()}});
      failed = true;
    }
  }
  out << report::to_json_text(fits);
  return failed ? kDataError : kOk;
}

int cmd_adaptivity(const Common& c, std::ostream& out, std::ostream& err) {
  const Trace trace = load_input(c, err);
  if (trace.adaptations.empty()) throw DataError("trace has no adaptation events");
  out << print_number(novel::adaptivity_quotient(trace.adaptations));
  return kOk;
}

int cmd_equilibrium(const std::string& problem, std::optional<double> amdahl_fraction, std::ostream& out) {
  const auto p = equilibrium::load_problem_file(problem);
  const auto sol = equilibrium::solve_equilibrium(p);
  out << report::to_json_text(report::to_json(equilibrium::equilibrium_report(p, sol, amdahl_fraction)));
  return kOk;
}

struct QualityArgs {
  Common common;
  bool list = false;
  std::string metric, field, compare;
  std::optional<double> delta;
  int repeats = 5;
  std::uint64_t seed = 0x5eed;
  std::vector<std::string> params;
};

int cmd_quality(const QualityArgs& a, std::ostream& out, std::ostream& err) {
  const auto registry = quality::default_registry();
  if (a.list) {
    for (const auto& name : registry.names()) {
      const auto& d = registry.resolve(name);
      out << d.name << '\t' << d.unit << '\t' << d.description << '\n';
    }
    return kOk;
  }
  if (a.metric.empty()) throw ArgumentError("quality needs --list or --metric");
  if (a.common.in.empty()) throw ArgumentError("quality --metric needs --in");
  if (!registry.contains(a.metric)) throw ArgumentError("unknown metric '" + a.metric + "'");
  quality::MetricHandle handle{a.metric, {}};
  for (const auto& p : a.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw ArgumentError("--param expects key=value");
    handle.params[p.substr(0, eq)] = parse_double_env("--param", p.substr(eq + 1).c_str());
  }
  quality::QualityOptions opts;
  opts.repeats = a.repeats;
  opts.seed = a.seed;
  if (!a.field.empty()) {
    const auto& info = quality::field_info(a.field);
    opts.perturbation = quality::Perturbation{a.field, a.delta ? *a.delta : info.default_delta};
  } else if (a.delta) {
    throw ArgumentError("--delta needs --field");
  }
  const Trace trace = load_input(a.common, err);
  Trace comparison = trace;
  if (!a.compare.empty()) {
    Common other = a.common;
    other.in = a.compare;
    comparison = load_input(other, err);
  } else if (auto span = time_span(trace); span && span->second > span->first) {
    comparison = window(trace, span->first, span->first + 0.5 * (span->second - span->first));
  }
  const auto rep = quality::assess(registry, handle, trace, comparison, opts);
  for (const auto& v : rep.declaration_violations) err << "declaration violation: " << v << '\n';
  out << report::to_json_text(report::to_json(rep));
  return rep.declaration_violations.empty() ? kOk : kDataError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Performance metrics for cloud/edge/IoT telemetry traces", "dccm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", report::kToolVersion);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic trace from a simulator config");
  simulate->add_option("--config", sim_args.config, "Simulator config (JSON)");
  simulate->add_option("--out", sim_args.out, "Output trace (default: standard output)");
  simulate->add_option("--ground-truth", sim_args.ground_truth, "Write the planted ground truth here");
  simulate->add_option("--seed", sim_args.seed, "Override the config seed");
  simulate->add_option("--duration", sim_args.duration, "Override duration_s");

  Common validate_args;
  bool validate_json = false;
  auto* validate = app.add_subcommand("validate", "Check a trace against the telemetry invariants");
  add_input(validate, validate_args, false);
  validate->add_flag("--json", validate_json, "Print the validation report as JSON");

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "Compute the full metric report");
  add_input(report_cmd, report_args.common);
  report_cmd->add_option("--config", report_args.config, "Report config (JSON)");
  report_cmd->add_option("--seed-config", report_args.seed_config, "Simulator config; adds its ground truth");
  report_cmd->add_option("--format", report_args.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  report_cmd->add_option("--out", report_args.out, "Output file (default: standard output)");
  report_cmd->add_option("--problem", report_args.problem, "Equilibrium problem (JSON)");
  report_cmd->add_option("--amdahl-fraction", report_args.amdahl_fraction, "Parallel fraction for the equilibrium");
  report_cmd->add_option("--explainability", report_args.explainability, "Per-node explainability (JSONL)");
  report_cmd->add_option("--carbon-intensity", report_args.carbon_intensity, "gCO2e per kWh");
  report_cmd->add_option("--te", report_args.te_c, "Known ambient temperature for thermal fits");
  report_cmd->add_option("--lag", report_args.lag, "Causal lag");
  report_cmd->add_option("--signal", report_args.signal, "Causal signal");
  report_cmd->add_option("--threads", report_args.threads, "Worker threads (0 = hardware)");
  report_cmd->add_flag("--no-quality", report_args.no_quality, "Skip the metric quality section");

  Common fairness_args;
  std::string fairness_resource = "cpu";
  std::vector<double> fairness_values;
  auto* fairness = app.add_subcommand("fairness", "Jain fairness over nodes");
  fairness->add_option("--in", fairness_args.in, "Telemetry trace (JSONL)");
  fairness->add_flag("--lenient", fairness_args.lenient, "Drop invalid records with a warning");
  fairness->add_option("--window", fairness_args.window, "Restrict to [start, end) as start:end");
  fairness->add_option("--resource", fairness_resource, "cpu, energy or bandwidth")
      ->check(CLI::IsMember({"cpu", "energy", "bandwidth", "custom"}));
  fairness->add_option("--values", fairness_values, "Explicit allocation vector")->delimiter(',');

  ObservabilityArgs obs_args;
  auto* observability = app.add_subcommand("observability", "Causal matrix and observability score");
  add_input(observability, obs_args.common);
  observability->add_option("--signal", obs_args.signal, "cpu_util, mem_util, energy_j, temperature_c or busy_s");
  observability->add_option("--lag", obs_args.lag, "Causal lag")->check(CLI::PositiveNumber);
  observability->add_option("--explainability", obs_args.explainability, "Per-node explainability (JSONL)");
  observability->add_option("--threads", obs_args.threads, "Worker threads (0 = hardware)");

  Common thermal_args;
  std::string thermal_node;
  std::optional<double> thermal_te;
  auto* thermal = app.add_subcommand("thermal-fit", "Fit the cooling law per node");
  add_input(thermal, thermal_args);
  thermal->add_option("--node", thermal_node, "Only this node");
  thermal->add_option("--te", thermal_te, "Known ambient temperature");

  Common adaptivity_args;
  auto* adaptivity = app.add_subcommand("adaptivity", "Adaptivity quotient of the trace's adaptation events");
  add_input(adaptivity, adaptivity_args, false);

  std::string eq_problem;
  std::optional<double> eq_amdahl;
  auto* equilibrium_cmd = app.add_subcommand("equilibrium", "Solve a QoS / cost / resource trade-off");
  equilibrium_cmd->add_option("--problem", eq_problem, "Problem (JSON)")->required();
  equilibrium_cmd->add_option("--amdahl-fraction", eq_amdahl, "Parallel fraction for the Amdahl annotation");

  QualityArgs q_args;
  auto* quality_cmd = app.add_subcommand("quality", "List metrics or score one metric");
  quality_cmd->add_flag("--list", q_args.list, "List registry metrics");
  quality_cmd->add_option("--metric", q_args.metric, "Metric to assess");
  quality_cmd->add_option("--in", q_args.common.in, "Telemetry trace (JSONL)");
  quality_cmd->add_flag("--lenient", q_args.common.lenient, "Drop invalid records with a warning");
  quality_cmd->add_option("--window", q_args.common.window, "Restrict to [start, end) as start:end");
  quality_cmd->add_option("--compare", q_args.compare, "Second trace for the consistency check");
  quality_cmd->add_option("--field", q_args.field, "Perturbed field for sensitivity");
  quality_cmd->add_option("--delta", q_args.delta, "Perturbation size");
  quality_cmd->add_option("--repeats", q_args.repeats, "Repeatability runs")->check(CLI::PositiveNumber);
  quality_cmd->add_option("--seed", q_args.seed, "Base seed");
  quality_cmd->add_option("--param", q_args.params, "Metric parameter key=value");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << report::kToolVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return kArgumentError;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim_args, out);
    if (validate->parsed()) return cmd_validate(validate_args, validate_json, out, err);
    if (report_cmd->parsed()) return cmd_report(report_args, out, err);
    if (fairness->parsed()) return cmd_fairness(fairness_args, fairness_resource, fairness_values, out, err);
    if (observability->parsed()) return cmd_observability(obs_args, out, err);
    if (thermal->parsed()) return cmd_thermal_fit(thermal_args, thermal_node, thermal_te, out, err);
    if (adaptivity->parsed()) return cmd_adaptivity(adaptivity_args, out, err);
    if (equilibrium_cmd->parsed()) return cmd_equilibrium(eq_problem, eq_amdahl, out);
    if (quality_cmd->parsed()) return cmd_quality(q_args, out, err);
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kArgumentError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  err << app.help();
  return kArgumentError;
}

}  // namespace dccm::cli
