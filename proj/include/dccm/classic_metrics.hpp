#pragma once

// Computing-, network- and application-level metrics over a Trace.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dccm/common.hpp"
#include "dccm/telemetry.hpp"

namespace dccm::classic {

enum class Resource { cpu, mem, busy };

std::string_view to_string(Resource r);
Resource parse_resource(std::string_view s);

double speedup(double t_baseline, double t_parallel);

struct NodeUtilization {
  std::string node_id;
  Measure mean;  // undefined for "busy" on a zero-length span
};

struct UtilizationSummary {
  std::vector<NodeUtilization> per_node;  // first-appearance order
  Measure fleet_mean;                     // unweighted mean of defined per-node means
};

// Trapezoidal time-weighted mean of cpu_util / mem_util per node (a single
// sample is its own mean); busy = sum of busy_s after each node's first
// sample divided by that node's observed span.
UtilizationSummary utilization(const std::vector<NodeSample>& samples, Resource resource);

std::map<int, double> scaling_efficiency(const std::map<int, double>& speedups);

struct TimeSeries {
  std::vector<double> t;
  std::vector<double> v;
};

// 1 - mean|p - d| / mean max(p, d).
double elasticity(const TimeSeries& provisioned, const TimeSeries& demanded);

struct Interval {
  double begin = 0.0;
  double end = 0.0;
};

// Intervals are clipped to the span and merged before summing.
double availability(std::vector<Interval> up_intervals, Interval span);

struct NodeEnergy {
  std::string node_id;
  double total_j = 0.0;
  Measure mean_power_w;
};

struct EnergySummary {
  double total_j = 0.0;
  Measure mean_power_w;
  std::vector<NodeEnergy> per_node;
};

EnergySummary energy_summary(const std::vector<NodeSample>& samples);

// Maximum overlap of half-open [start_ts, finish_ts) intervals.
int max_concurrency(const std::vector<RequestRecord>& requests);

struct LinkKpis {
  std::string src;
  std::string dst;
  std::size_t samples = 0;
  double mean_latency_ms = 0.0;
  double p95_latency_ms = 0.0;
  Measure throughput_bps;
  Measure bandwidth_util;  // clamped to [0,1]
  bool over_capacity = false;
  Measure net_util;  // mean per-interval utilisation, clamped to [0,1]
  Measure pdr;
  Measure plr;
};

struct NetworkReport {
  std::vector<LinkKpis> links;  // ordered by (src, dst)
  std::vector<std::string> warnings;
};

NetworkReport network_kpis(const std::vector<NetSample>& samples);

struct ResponseStats {
  std::size_t count = 0;
  double mean_response_s = 0.0;
  double p50_response_s = 0.0;
  double p95_response_s = 0.0;
  double p99_response_s = 0.0;
  double mean_service_s = 0.0;
  double error_rate = 0.0;
  Measure accuracy;
  double total_cost = 0.0;
};

ResponseStats response_stats(const std::vector<RequestRecord>& requests);

// Caller-supplied inputs for metrics a trace cannot carry on its own.
struct ClassicOptions {
  std::optional<std::pair<double, double>> speedup_times;  // (t_baseline, t_parallel)
  std::optional<std::map<int, double>> speedups;           // node count -> speedup
  std::optional<std::pair<TimeSeries, TimeSeries>> elasticity_series;  // (provisioned, demanded)
  std::optional<std::pair<std::vector<Interval>, Interval>> up_intervals;
};

struct ClassicReport {
  UtilizationSummary cpu;
  UtilizationSummary mem;
  UtilizationSummary busy;
  Measure speedup;
  std::string speedup_source;  // "config" | "trace" | "none"
  std::map<int, double> scaling_efficiency;
  Measure elasticity;
  Measure availability;
  std::string availability_source;
  EnergySummary energy;
  int max_concurrency = 0;
  NetworkReport network;
  std::optional<ResponseStats> response;
  std::vector<std::string> warnings;
};

// Without options, speedup is sum(service_s) / request makespan, scaling
// efficiency divides it by the node count, and availability is the mean
// per-node sample coverage (gaps longer than 1.5x the node's median sampling
// period count as down time).
ClassicReport classic_report(const Trace& trace, const ClassicOptions& options = {});

// Per-node availability inferred from sampling coverage over the node-sample span.
Measure coverage_availability(const Trace& trace);

}  // namespace dccm::classic
