// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <unistd.h>

#include "dccm/causality.hpp"
#include "dccm/cli.hpp"
#include "dccm/equilibrium.hpp"
#include "dccm/metric_quality.hpp"
#include "dccm/novel_metrics.hpp"
#include "dccm/report.hpp"
#include "dccm/simulator.hpp"
#include "support/configs.hpp"
#include "support/oracles.hpp"

namespace {

using namespace dccm;
namespace fs = std::filesystem;

// Tolerances and thresholds.
constexpr double kScaleTol = 1e-12;
constexpr double kHandTol = 1e-9;
constexpr double kThermalNoiselessRel = 1e-6;
constexpr double kThermalNoisyRel = 0.05;
constexpr double kTwoPointTol = 1e-6;
constexpr double kAmdahlTol = 1e-6;
constexpr double kSensitivityTol = 1e-9;
constexpr double kNullCeiling = 0.05;
constexpr int kRequiredRuns = 18;
constexpr double kUniformFloor = 0.99;
constexpr double kSkewedCeiling = 0.40;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

Outcome jain() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> len(1, 64);
  std::uniform_real_distribution<double> val(0.0, 100.0);
  for (int v = 0; v < 1000; ++v) {
    std::vector<double> x(static_cast<std::size_t>(len(gen)));
    for (auto& e : x) e = val(gen);
    const double f = novel::jain_fairness(x);
    const double n = static_cast<double>(x.size());
    o.require(f >= 1.0 / n && f <= 1.0, fmt("bound violated: F=%.17g n=%g", f, n));
    o.require(std::abs(f - test::naive_jain(x)) <= kHandTol, "disagrees with the long-double oracle");
    for (double c : {0.5, 3.0, 1e6}) {
      std::vector<double> scaled = x;
      for (auto& e : scaled) e *= c;
      o.require(std::abs(novel::jain_fairness(scaled) - f) <= kScaleTol, fmt("scale invariance broken for c=%g", c));
    }
    o.require(novel::jain_fairness(std::vector<double>(x.size(), x.front())) == 1.0, "equal vector is not exactly 1");
  }
  o.require(novel::jain_fairness(std::vector<double>{1, 1, 1, 1}) == 1.0, "[1,1,1,1]");
  o.require(novel::jain_fairness(std::vector<double>{4, 0, 0, 0}) == 0.25, "[4,0,0,0]");
  o.require(std::abs(novel::jain_fairness(std::vector<double>{1, 2, 3}) - 0.857142857) <= kHandTol, "[1,2,3]");
  const double t = seconds_since(start);
  o.require(t < 1.0, fmt("took %.3f s", t));
  if (o.pass) o.detail = fmt("1000 vectors, %.3f s", t);
  return o;
}

Outcome thermal() {
  Outcome o;
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> k(0.01, 0.5), t0(60.0, 95.0), te(15.0, 30.0);
  double worst_clean = 0.0;
  double worst_noisy = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    const novel::ThermalParams p{t0(gen), te(gen), k(gen)};
    const auto clean = test::cooling_series(p, 50, 2.0 / p.k);
    const auto noisy = test::cooling_series(p, 50, 2.0 / p.k, 0.5, 500 + static_cast<std::uint64_t>(draw));
    for (const auto& te_known : {std::optional<double>(p.te_c), std::optional<double>()}) {
      worst_clean = std::max(worst_clean, std::abs(novel::fit_cooling(clean, te_known).params.k - p.k) / p.k);
      worst_noisy = std::max(worst_noisy, std::abs(novel::fit_cooling(noisy, te_known).params.k - p.k) / p.k);
    }
  }
  o.require(worst_clean <= kThermalNoiselessRel, fmt("noiseless rel err %.3g", worst_clean));
  o.require(worst_noisy <= kThermalNoisyRel, fmt("noisy rel err %.3g", worst_noisy));
  const std::vector<novel::TemperaturePoint> two{{0.0, 85.0}, {10.0, 25.0 + 60.0 * std::exp(-1.0)}};
  const double k2 = novel::fit_cooling(two, 25.0).params.k;
  o.require(std::abs(k2 - 0.1) <= kTwoPointTol, fmt("two-point k=%.12g", k2));
  if (o.pass) o.detail = fmt("worst rel err %.2g noiseless, %.3g noisy", worst_clean, worst_noisy);
  return o;
}

Outcome granger() {
  Outcome o;
  const auto start = Clock::now();
  int planted_hits = 0;
  int null_hits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto cm = causality::build_causal_matrix(sim::simulate(test::chain_config(seed, true)),
                                                   causality::Signal::cpu_util(), 1);
    std::vector<std::pair<double, std::pair<std::size_t, std::size_t>>> entries;
    for (std::size_t i = 0; i < cm.matrix.n(); ++i)
      for (std::size_t j = 0; j < cm.matrix.n(); ++j)
        if (i != j) entries.push_back({cm.matrix(i, j), {i, j}});
    std::sort(entries.rbegin(), entries.rend());
    const std::set<std::pair<std::size_t, std::size_t>> top{entries[0].second, entries[1].second};
    if (top == std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}}) ++planted_hits;

    const auto null = causality::build_causal_matrix(sim::simulate(test::chain_config(seed + 100, false)),
                                                     causality::Signal::cpu_util(), 1);
    const auto& e = null.matrix.entries();
    if (*std::max_element(e.begin(), e.end()) <= kNullCeiling) ++null_hits;
  }
  o.require(planted_hits >= kRequiredRuns, fmt("planted pairs top-2 in %g/20", planted_hits));
  o.require(null_hits >= kRequiredRuns, fmt("null matrix within ceiling in %g/20", null_hits));

  causality::CausalMatrix sym(3);
  sym.set(0, 1, 0.4);
  sym.set(1, 0, 0.4);
  sym.set(1, 2, 0.2);
  sym.set(2, 1, 0.2);
  const auto s = causality::observability_score(causality::default_explainability(3), sym);
  o.require(s.asymmetry_penalty == 0.0, "symmetric penalty not exactly 0");
  causality::CausalMatrix asym(2);
  asym.set(0, 1, 1.0);
  const auto a = causality::observability_score(causality::default_explainability(2), asym);
  o.require(a.raw == -1.0 && a.clamped == 0.0, fmt("worked case raw=%g clamped=%g", a.raw, a.clamped));
  const double t = seconds_since(start);
  o.require(t < 30.0, fmt("took %.1f s", t));
  if (o.pass) o.detail = fmt("planted %g/20, ", planted_hits) + fmt("null %g/20, ", null_hits) + fmt("%.1f s", t);
  return o;
}

Outcome adaptivity() {
  Outcome o;
  const std::vector<AdaptationEvent> worked{test::event("a", 1, 2, 1), test::event("b", 1, 1.5, 3)};
  const double q = novel::adaptivity_quotient(worked);
  o.require(q == 1.25, fmt("worked example Q=%.17g", q));

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  std::vector<AdaptationEvent> events;
  for (int i = 0; i < 12; ++i) {
    events.push_back(test::event("e" + std::to_string(i), u(gen), u(gen), u(gen),
                                 i % 2 ? Polarity::higher_better : Polarity::lower_better));
  }
  const double base = novel::adaptivity_quotient(events);
  for (int s = 0; s < 100; ++s) {
    std::shuffle(events.begin(), events.end(), gen);
    o.require(novel::adaptivity_quotient(events) == base, "shuffle changed Q");
  }
  const std::vector<AdaptationEvent> inverted{test::event("lat", 200, 100, 2, Polarity::lower_better)};
  o.require(novel::adaptivity_quotient(inverted) == 1.0, "polarity inversion case");
  if (o.pass) o.detail = "Q=1.25, 100 shuffles, inversion 1.0";
  return o;
}

Outcome amdahl() {
  Outcome o;
  o.require(std::abs(novel::amdahl_speedup(0.5, 2.0) - 1.333333) <= kAmdahlTol, "F=0.5,S=2");
  double prev = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double s = novel::amdahl_speedup(0.7, 1.0 + 0.5 * i);
    o.require(s >= prev, fmt("not monotone at S=%g", 1.0 + 0.5 * i));
    prev = s;
  }
  for (int i = 1; i <= 9; ++i) {
    const double f = i / 10.0;
    const double gap = std::abs(novel::amdahl_speedup(f, 1e9) - 1.0 / (1.0 - f));
    o.require(gap <= kAmdahlTol, fmt("asymptote gap %.3g at F=%g", gap, f));
  }
  if (o.pass) o.detail = "example, 100-point sweep, 9 asymptotes";
  return o;
}

Outcome equilibrium_solve() {
  Outcome o;
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> idx(0, 99);
  double slowest = 0.0;
  for (int s = 0; s < 50; ++s) {
    std::vector<double> r(100), c(100), q(100 * 100);
    for (std::size_t i = 0; i < 100; ++i) {
      r[i] = 1.0 + static_cast<double>(i);
      c[i] = 0.5 * static_cast<double>(i + 1);
    }
    for (auto& v : q) v = std::round(u(gen) * 200.0) / 200.0;
    const double c_max = c[idx(gen)];
    const double r_min = r[idx(gen)];
    const equilibrium::EquilibriumProblem p{r, c, c_max, r_min, equilibrium::TabulatedSurface{q}};
    const auto oracle = test::naive_scan(r, c, q, c_max, r_min);
    const auto start = Clock::now();
    const auto sol = equilibrium::solve_equilibrium(p);
    slowest = std::max(slowest, seconds_since(start));
    o.require(sol.r_index == oracle.i && sol.c_index == oracle.j && sol.q_star == oracle.q,
              fmt("surface %g differs from naive scan", s));

    double prev = sol.q_star;
    for (std::size_t k = 1; k <= 5; ++k) {
      const std::size_t ci = std::min<std::size_t>(99, static_cast<std::size_t>(c_max / 0.5) - 1);
      const std::size_t ri = static_cast<std::size_t>(r_min) - 1;
      if (ci < 5 * k || ri + 5 * k > 99) break;
      auto tighter = p;
      tighter.c_max = c[ci - 5 * k];
      tighter.r_min = r[ri + 5 * k];
      const double qk = equilibrium::solve_equilibrium(tighter).q_star;
      o.require(qk <= prev, "tightening constraints raised Q*");
      prev = qk;
    }
  }
  o.require(slowest < 1.0, fmt("slowest solve %.3f s", slowest));
  if (o.pass) o.detail = fmt("50 surfaces match, slowest %.4f s", slowest);
  return o;
}

Trace unclamped_trace() {
  Trace t;
  t.node_ids = {"a", "b", "c"};
  for (int i = 0; i < 30; ++i) {
    for (std::size_t n = 0; n < 3; ++n) {
      const double cpu = 0.2 + 0.1 * static_cast<double>(n) + 0.05 * std::sin(i * 0.3 + static_cast<double>(n));
      t.node_samples.push_back(test::node(t.node_ids[n], i, cpu, 3.0, 0.2, 40.0));
    }
  }
  return t;
}

Outcome metric_quality() {
  Outcome o;
  const auto registry = quality::default_registry();
  auto cfg = test::uniform_config(21);
  cfg.duration_s = 120.0;
  cfg.adaptation_plan = {test::event("e1", 2, 1, 3)};
  const Trace sim_trace = sim::simulate(cfg);
  int checks = 0;
  for (const auto& name : registry.names()) {
    const auto cv = quality::repeatability(registry, {name, {}}, sim_trace, 5);
    o.require(cv && *cv == 0.0, "repeatability cv != 0 for " + name);
    const auto& def = registry.resolve(name);
    for (const auto& f : quality::numeric_fields()) {
      if (def.inputs.count(f.name)) continue;
      try {
        o.require(quality::independence(registry, {name, {}}, sim_trace, f.name) == 0.0, name + " / " + f.name);
        ++checks;
      } catch (const quality::DeclarationError& e) {
        o.require(false, e.what());
      }
    }
  }
  const auto sens = quality::sensitivity(registry, {"fleet_mean_cpu_util", {}}, unclamped_trace(), {"node.cpu_util", 0.1});
  o.require(sens && std::abs(*sens - 1.0) <= kSensitivityTol, "mean-metric sensitivity");
  quality::MetricRegistry control;
  control.add(test::randomized_control_metric());
  const auto cv = quality::repeatability(control, {"randomized_control", {}}, sim_trace, 5);
  o.require(cv && *cv > 0.0, "randomized control cv not > 0");
  if (o.pass) {
    o.detail = fmt("%g metrics cv=0, ", static_cast<double>(registry.names().size())) +
               fmt("%g independence checks, control cv=%.3g", checks, *cv);
  }
  return o;
}

struct CliRun {
  int code;
  std::string out;
};

CliRun cli_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str()};
}

Outcome end_to_end() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / ("dccm_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  };
  const std::string uniform = write("uniform.json", R"({"seed": 31, "duration_s": 300, "requests": {"rate_per_s": 1}})");
  const std::string skewed = write(
      "skewed.json", R"({"seed": 31, "duration_s": 300, "base_load": 0.5, "load_skew": 2, "requests": {"rate_per_s": 1}})");

  double uniform_f = 0.0;
  double skewed_f = 1.0;
  for (const auto& [cfg, f] : {std::pair{uniform, &uniform_f}, std::pair{skewed, &skewed_f}}) {
    const std::string trace = (fs::path(cfg).replace_extension(".jsonl")).string();
    o.require(cli_run({"simulate", "--config", cfg, "--out", trace}).code == 0, "simulate failed");
    const auto v = cli_run({"validate", "--in", trace});
    o.require(v.code == 0 && v.out == "0 violations\n", "validate: " + v.out);
    const auto a = cli_run({"report", "--in", trace, "--seed-config", cfg});
    const auto b = cli_run({"report", "--in", trace, "--seed-config", cfg});
    o.require(a.code == 0 && b.code == 0, "report failed");
    auto ja = report::Json::parse(a.out);
    auto jb = report::Json::parse(b.out);
    ja["meta"].erase("generated_at");
    jb["meta"].erase("generated_at");
    o.require(ja.dump() == jb.dump(), "reports differ beyond generated_at");
    *f = ja["novel"]["fairness"]["cpu"]["index"].get<double>();
  }
  fs::remove_all(dir);
  o.require(uniform_f >= kUniformFloor, fmt("uniform cpu fairness %.4f", uniform_f));
  o.require(skewed_f <= kSkewedCeiling, fmt("skewed cpu fairness %.4f", skewed_f));
  if (o.pass) o.detail = fmt("uniform F=%.4f, skewed F=%.4f, reports identical", uniform_f, skewed_f);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 jain fairness", jain},
      {"2 thermal fit", thermal},
      {"3 granger and observability", granger},
      {"4 adaptivity quotient", adaptivity},
      {"5 amdahl", amdahl},
      {"6 equilibrium", equilibrium_solve},
      {"7 metric quality", metric_quality},
      {"8 end to end", end_to_end},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    if (!o.pass) ++failed;
  }
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
