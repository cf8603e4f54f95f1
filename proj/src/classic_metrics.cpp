#include "dccm/classic_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace dccm::classic {

namespace {

// Samples grouped per node in first-appearance order, each group sorted by time.
std::vector<std::pair<std::string, std::vector<const NodeSample*>>> group_by_node(
    const std::vector<NodeSample>& samples) {
  std::vector<std::pair<std::string, std::vector<const NodeSample*>>> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& s : samples) {
    auto [it, inserted] = index.try_emplace(s.node_id, groups.size());
    if (inserted) groups.push_back({s.node_id, {}});
    groups[it->second].second.push_back(&s);
  }
  for (auto& [_, group] : groups) {
    std::stable_sort(group.begin(), group.end(),
                     [](const NodeSample* a, const NodeSample* b) { return a->timestamp < b->timestamp; });
  }
  return groups;
}

double time_weighted_mean(const std::vector<const NodeSample*>& group, double NodeSample::*field) {
  const double span = group.back()->timestamp - group.front()->timestamp;
  if (group.size() == 1 || span <= 0.0) {
    double sum = 0.0;
    for (const auto* s : group) sum += s->*field;
    return sum / static_cast<double>(group.size());
  }
  double area = 0.0;
  for (std::size_t k = 1; k < group.size(); ++k) {
    const double dt = group[k]->timestamp - group[k - 1]->timestamp;
    area += 0.5 * (group[k]->*field + group[k - 1]->*field) * dt;
  }
  return area / span;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string_view to_string(Resource r) {
  switch (r) {
    case Resource::cpu:
      return "cpu";
    case Resource::mem:
      return "mem";
    case Resource::busy:
      return "busy";
  }
  return "cpu";
}

Resource parse_resource(std::string_view s) {
  if (s == "cpu") return Resource::cpu;
  if (s == "mem") return Resource::mem;
  if (s == "busy") return Resource::busy;
  throw ArgumentError("unknown utilization resource '" + std::string(s) + "'");
}

double speedup(double t_baseline, double t_parallel) {
  if (!(t_baseline > 0.0) || !(t_parallel > 0.0)) throw ArgumentError("speedup durations must be positive");
  return t_baseline / t_parallel;
}

UtilizationSummary utilization(const std::vector<NodeSample>& samples, Resource resource) {
  UtilizationSummary out;
  std::vector<double> defined;
  for (const auto& [id, group] : group_by_node(samples)) {
    Measure mean;
    switch (resource) {
      case Resource::cpu:
        mean = time_weighted_mean(group, &NodeSample::cpu_util);
        break;
      case Resource::mem:
        mean = time_weighted_mean(group, &NodeSample::mem_util);
        break;
      case Resource::busy: {
        const double span = group.back()->timestamp - group.front()->timestamp;
        double busy = 0.0;
        for (std::size_t k = 1; k < group.size(); ++k) busy += group[k]->busy_s;
        if (span > 0.0) mean = std::min(1.0, busy / span);
        break;
      }
    }
    if (mean) defined.push_back(*mean);
    out.per_node.push_back({id, mean});
  }
  if (!defined.empty()) {
    out.fleet_mean = std::accumulate(defined.begin(), defined.end(), 0.0) / static_cast<double>(defined.size());
  }
  return out;
}

std::map<int, double> scaling_efficiency(const std::map<int, double>& speedups) {
  std::map<int, double> out;
  for (const auto& [n, s] : speedups) {
    if (n < 1) throw ArgumentError("scaling efficiency needs node count >= 1");
    if (!(s > 0.0)) throw ArgumentError("scaling efficiency needs positive speedup");
    out[n] = s / static_cast<double>(n);
  }
  return out;
}

double elasticity(const TimeSeries& provisioned, const TimeSeries& demanded) {
  if (provisioned.t != demanded.t) throw ArgumentError("elasticity series are not aligned on identical timestamps");
  if (provisioned.v.size() != provisioned.t.size() || demanded.v.size() != demanded.t.size()) {
    throw ArgumentError("elasticity series have mismatched value/timestamp lengths");
  }
  if (provisioned.t.empty()) throw ArgumentError("elasticity needs at least one point");
  double mismatch = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < provisioned.v.size(); ++i) {
    const double p = provisioned.v[i];
    const double d = demanded.v[i];
    if (p < 0.0 || d < 0.0) throw ArgumentError("elasticity series must be non-negative");
    const double m = std::max(p, d);
    if (m == 0.0) continue;
    mismatch += std::abs(p - d);
    scale += m;
  }
  if (scale == 0.0) throw ArgumentError("elasticity series are all zero");
  // Common 1/N factors cancel.
  return 1.0 - mismatch / scale;
}

double availability(std::vector<Interval> up, Interval span) {
  if (!(span.end > span.begin)) throw ArgumentError("availability span must have positive length");
  for (auto& iv : up) {
    iv.begin = std::max(iv.begin, span.begin);
    iv.end = std::min(iv.end, span.end);
  }
  std::erase_if(up, [](const Interval& iv) { return !(iv.end > iv.begin); });
  std::sort(up.begin(), up.end(), [](const Interval& a, const Interval& b) { return a.begin < b.begin; });
  double total = 0.0;
  double cur_begin = 0.0;
  double cur_end = 0.0;
  bool open = false;
  for (const auto& iv : up) {
    if (open && iv.begin <= cur_end) {
      cur_end = std::max(cur_end, iv.end);
      continue;
    }
    if (open) total += cur_end - cur_begin;
    cur_begin = iv.begin;
    cur_end = iv.end;
    open = true;
  }
  if (open) total += cur_end - cur_begin;
  return total / (span.end - span.begin);
}

EnergySummary energy_summary(const std::vector<NodeSample>& samples) {
  EnergySummary out;
  if (samples.empty()) {
    out.mean_power_w = 0.0;
    return out;
  }
  double t_min = samples.front().timestamp;
  double t_max = t_min;
  for (const auto& [id, group] : group_by_node(samples)) {
    NodeEnergy ne{id, 0.0, std::nullopt};
    for (const auto* s : group) ne.total_j += s->energy_j;
    const double span = group.back()->timestamp - group.front()->timestamp;
    if (span > 0.0) {
      ne.mean_power_w = ne.total_j / span;
    } else if (ne.total_j == 0.0) {
      ne.mean_power_w = 0.0;
    }
    t_min = std::min(t_min, group.front()->timestamp);
    t_max = std::max(t_max, group.back()->timestamp);
    out.total_j += ne.total_j;
    out.per_node.push_back(std::move(ne));
  }
  if (t_max > t_min) {
    out.mean_power_w = out.total_j / (t_max - t_min);
  } else if (out.total_j == 0.0) {
    out.mean_power_w = 0.0;
  }
  return out;
}

int max_concurrency(const std::vector<RequestRecord>& requests) {
  // +1 at start, -1 at finish; finishes sort before starts at equal times.
  std::vector<std::pair<double, int>> events;
  events.reserve(requests.size() * 2);
  for (const auto& r : requests) {
    if (!(r.finish_ts > r.start_ts)) continue;
    events.emplace_back(r.start_ts, +1);
    events.emplace_back(r.finish_ts, -1);
  }
  std::sort(events.begin(), events.end());
  int current = 0;
  int best = 0;
  for (const auto& [_, delta] : events) {
    current += delta;
    best = std::max(best, current);
  }
  return best;
}

NetworkReport network_kpis(const std::vector<NetSample>& samples) {
  std::map<std::pair<std::string, std::string>, std::vector<const NetSample*>> links;
  for (const auto& s : samples) links[{s.src, s.dst}].push_back(&s);

  NetworkReport out;
  for (auto& [key, group] : links) {
    std::stable_sort(group.begin(), group.end(),
                     [](const NetSample* a, const NetSample* b) { return a->timestamp < b->timestamp; });
    LinkKpis k;
    k.src = key.first;
    k.dst = key.second;
    k.samples = group.size();

    std::vector<double> latency;
    double bytes = 0.0;
    double capacity = 0.0;
    double sent = 0.0;
    double delivered = 0.0;
    for (const auto* s : group) {
      latency.push_back(s->latency_ms);
      bytes += static_cast<double>(s->bytes_delivered);
      capacity += s->capacity_bps;
      sent += static_cast<double>(s->packets_sent);
      delivered += static_cast<double>(s->packets_delivered);
    }
    k.mean_latency_ms = std::accumulate(latency.begin(), latency.end(), 0.0) / static_cast<double>(latency.size());
    k.p95_latency_ms = nearest_rank(latency, 95.0);

    const double span = group.back()->timestamp - group.front()->timestamp;
    if (span > 0.0) {
      k.throughput_bps = 8.0 * bytes / span;
      const double mean_capacity = capacity / static_cast<double>(group.size());
      double util = *k.throughput_bps / mean_capacity;
      if (util > 1.0) {
        k.over_capacity = true;
        out.warnings.push_back("link " + k.src + "->" + k.dst + " throughput exceeds nominal capacity");
        util = 1.0;
      }
      k.bandwidth_util = util;

      double acc = 0.0;
      for (std::size_t i = 1; i < group.size(); ++i) {
        const double dt = group[i]->timestamp - group[i - 1]->timestamp;
        const double u = 8.0 * static_cast<double>(group[i]->bytes_delivered) / (dt * group[i]->capacity_bps);
        acc += std::clamp(u, 0.0, 1.0);
      }
      k.net_util = acc / static_cast<double>(group.size() - 1);
    }

    if (sent > 0.0) {
      k.pdr = delivered / sent;
      k.plr = 1.0 - *k.pdr;
    }
    out.links.push_back(std::move(k));
  }
  return out;
}

ResponseStats response_stats(const std::vector<RequestRecord>& requests) {
  if (requests.empty()) throw ArgumentError("response_stats needs at least one request");
  ResponseStats out;
  out.count = requests.size();
  std::vector<double> response;
  response.reserve(requests.size());
  double service = 0.0;
  std::size_t errors = 0;
  std::size_t judged = 0;
  std::size_t correct = 0;
  for (const auto& r : requests) {
    response.push_back(r.finish_ts - r.arrival_ts);
    service += r.finish_ts - r.start_ts;
    out.total_cost += r.cost_units;
    if (!r.ok) {
      ++errors;
    } else if (r.correct) {
      ++judged;
      if (*r.correct) ++correct;
    }
  }
  const double n = static_cast<double>(requests.size());
  out.mean_response_s = std::accumulate(response.begin(), response.end(), 0.0) / n;
  out.p50_response_s = nearest_rank(response, 50.0);
  out.p95_response_s = nearest_rank(response, 95.0);
  out.p99_response_s = nearest_rank(response, 99.0);
  out.mean_service_s = service / n;
  out.error_rate = static_cast<double>(errors) / n;
  if (judged > 0) out.accuracy = static_cast<double>(correct) / static_cast<double>(judged);
  return out;
}

Measure coverage_availability(const Trace& trace) {
  if (trace.node_samples.empty()) return std::nullopt;
  double t0 = trace.node_samples.front().timestamp;
  double t1 = t0;
  for (const auto& s : trace.node_samples) {
    t0 = std::min(t0, s.timestamp);
    t1 = std::max(t1, s.timestamp);
  }
  if (!(t1 > t0)) return std::nullopt;
  std::vector<double> per_node;
  for (const auto& [id, group] : group_by_node(trace.node_samples)) {
    if (group.size() < 2) {
      per_node.push_back(0.0);
      continue;
    }
    std::vector<double> gaps;
    for (std::size_t k = 1; k < group.size(); ++k) gaps.push_back(group[k]->timestamp - group[k - 1]->timestamp);
    const double limit = 1.5 * median(gaps);
    std::vector<Interval> up;
    for (std::size_t k = 1; k < group.size(); ++k) {
      if (gaps[k - 1] <= limit) up.push_back({group[k - 1]->timestamp, group[k]->timestamp});
    }
    per_node.push_back(availability(std::move(up), {t0, t1}));
  }
  return std::accumulate(per_node.begin(), per_node.end(), 0.0) / static_cast<double>(per_node.size());
}

ClassicReport classic_report(const Trace& trace, const ClassicOptions& options) {
  ClassicReport rep;
  rep.cpu = utilization(trace.node_samples, Resource::cpu);
  rep.mem = utilization(trace.node_samples, Resource::mem);
  rep.busy = utilization(trace.node_samples, Resource::busy);

  if (options.speedup_times) {
    rep.speedup = speedup(options.speedup_times->first, options.speedup_times->second);
    rep.speedup_source = "config";
  } else {
    double serial = 0.0;
    double first = 0.0;
    double last = 0.0;
    for (std::size_t i = 0; i < trace.requests.size(); ++i) {
      const auto& r = trace.requests[i];
      serial += r.finish_ts - r.start_ts;
      first = i == 0 ? r.start_ts : std::min(first, r.start_ts);
      last = i == 0 ? r.finish_ts : std::max(last, r.finish_ts);
    }
    if (serial > 0.0 && last > first) {
      rep.speedup = speedup(serial, last - first);
      rep.speedup_source = "trace";
    } else {
      rep.speedup_source = "none";
    }
  }

  if (options.speedups) {
    rep.scaling_efficiency = scaling_efficiency(*options.speedups);
  } else if (rep.speedup && !trace.node_ids.empty()) {
    rep.scaling_efficiency = scaling_efficiency({{static_cast<int>(trace.node_ids.size()), *rep.speedup}});
  }

  if (options.elasticity_series) {
    rep.elasticity = elasticity(options.elasticity_series->first, options.elasticity_series->second);
  }

  if (options.up_intervals) {
    rep.availability = availability(options.up_intervals->first, options.up_intervals->second);
    rep.availability_source = "config";
  } else {
    rep.availability = coverage_availability(trace);
    rep.availability_source = rep.availability ? "trace" : "none";
  }

  rep.energy = energy_summary(trace.node_samples);
  rep.max_concurrency = max_concurrency(trace.requests);
  rep.network = network_kpis(trace.net_samples);
  rep.warnings = rep.network.warnings;
  if (!trace.requests.empty()) rep.response = response_stats(trace.requests);
  return rep;
}

}  // namespace dccm::classic
