#pragma once

// Seeded synthetic cloud/edge/IoT traces with planted ground truth.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dccm/novel_metrics.hpp"
#include "dccm/telemetry.hpp"

namespace dccm::sim {

struct TierCounts {
  int cloud = 1;
  int edge = 2;
  int iot = 5;
  int total() const { return cloud + edge + iot; }
};

// Node indices are 1-based in node order (cloud nodes, then edge, then iot).
struct CausalEdge {
  int src = 1;
  int dst = 2;
  double coefficient = 0.0;
  int lag = 1;
};

struct TierThermal {
  novel::ThermalParams cloud{60.0, 22.0, 0.01};
  novel::ThermalParams edge{55.0, 25.0, 0.02};
  novel::ThermalParams iot{45.0, 25.0, 0.05};
  // dT/dt = -k (T - te) + heat_per_util * cpu_util, in degC/s.
  double heat_per_util = 0.0;
};

struct TierPower {
  double idle_w = 0.0;
  double peak_w = 0.0;
};

struct NoiseStd {
  double cpu = 0.05;
  double mem = 0.02;
  double temperature = 0.0;
  double latency_ms = 1.0;
};

struct NetTopology {
  double cloud_edge_capacity_bps = 1e9;
  double edge_iot_capacity_bps = 1e8;
  double cloud_edge_latency_ms = 20.0;
  double edge_iot_latency_ms = 5.0;
  double link_load_factor = 0.5;  // fraction of capacity offered at cpu_util = 1
  double loss_prob = 0.001;
};

struct RequestConfig {
  double rate_per_s = 2.0;
  double mean_service_s = 0.5;
  int servers = 4;
  double error_prob = 0.01;
  double accuracy = 0.95;
  double cost_per_s = 1.0;
};

struct SimConfig {
  std::uint64_t seed = 1;
  double duration_s = 600.0;
  double sample_period_s = 1.0;
  TierCounts tiers;
  double base_load = 0.4;
  double load_skew = 0.0;  // Zipf exponent over node index; 0 = uniform
  std::vector<CausalEdge> causal_edges;
  TierThermal thermal;
  std::map<Tier, TierPower> power{
      {Tier::cloud, {100.0, 300.0}}, {Tier::edge, {10.0, 40.0}}, {Tier::iot, {1.0, 5.0}}};
  NoiseStd noise_std;
  std::vector<AdaptationEvent> adaptation_plan;
  NetTopology net_topology;
  RequestConfig requests;
  std::string epoch = "2025-01-01T00:00:00Z";
};

// Throws ArgumentError on an invalid configuration.
void validate_config(const SimConfig& config);

SimConfig load_config(std::istream& in);
SimConfig load_config_file(const std::string& path);

std::vector<std::string> node_names(const TierCounts& tiers);

// Deterministic for a fixed config. Every random stream is seeded from the
// master seed and the stream name, so adding a stream leaves the others
// untouched.
Trace simulate(const SimConfig& config);

struct PlantedEdge {
  std::string src;
  std::string dst;
  double coefficient = 0.0;
  int lag = 1;
};

struct GroundTruth {
  std::vector<PlantedEdge> edges;
  double load_skew = 0.0;
  std::vector<std::pair<std::string, double>> load_weights;  // per node, before noise
  TierThermal thermal;
  double expected_cpu_fairness_low = 0.0;
  double expected_cpu_fairness_high = 1.0;
};

GroundTruth describe_ground_truth(const SimConfig& config);

}  // namespace dccm::sim
