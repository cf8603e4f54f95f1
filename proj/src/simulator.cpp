#include "dccm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>

#include "dccm/random.hpp"
#include "json.hpp"

namespace dccm::sim {

namespace {

using nlohmann::json;

constexpr double kPacketBytes = 1500.0;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ArgumentError("unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& target) {
  if (auto it = obj.find(key); it != obj.end()) {
    try {
      target = it->get<T>();
    } catch (const json::exception&) {
      throw ArgumentError(std::string("config key '") + key + "' has the wrong type");
    }
  }
}

novel::ThermalParams read_thermal(const json& j, novel::ThermalParams p) {
  reject_unknown(j, {"t0_c", "te_c", "k"}, "thermal tier");
  read(j, "t0_c", p.t0_c);
  read(j, "te_c", p.te_c);
  read(j, "k", p.k);
  return p;
}

std::string node_name(Tier tier, int index) { return std::string(to_string(tier)) + "-" + std::to_string(index); }

struct Node {
  std::string id;
  Tier tier;
  double load;
};

std::vector<Node> make_nodes(const SimConfig& c) {
  std::vector<Node> nodes;
  const std::pair<Tier, int> tiers[] = {{Tier::cloud, c.tiers.cloud}, {Tier::edge, c.tiers.edge}, {Tier::iot, c.tiers.iot}};
  for (const auto& [tier, count] : tiers) {
    for (int i = 1; i <= count; ++i) {
      const double rank = static_cast<double>(nodes.size() + 1);
      nodes.push_back({node_name(tier, i), tier, c.base_load * std::pow(rank, -c.load_skew)});
    }
  }
  return nodes;
}

const novel::ThermalParams& thermal_for(const TierThermal& t, Tier tier) {
  switch (tier) {
    case Tier::cloud:
      return t.cloud;
    case Tier::edge:
      return t.edge;
    case Tier::iot:
      return t.iot;
  }
  return t.edge;
}

// E[clamp(mu + sigma Z, 0, 1)] for standard normal Z.
double clamped_normal_mean(double mu, double sigma) {
  if (sigma == 0.0) return std::clamp(mu, 0.0, 1.0);
  auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  auto pdf = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); };
  const double a = -mu / sigma;
  const double b = (1.0 - mu) / sigma;
  return mu * (cdf(b) - cdf(a)) + sigma * (pdf(a) - pdf(b)) + (1.0 - cdf(b));
}

struct Link {
  std::size_t src;
  std::size_t dst;
  double capacity_bps;
  double latency_ms;
};

// Uplinks from every node of a tier to every node of the next present tier above it.
std::vector<Link> make_links(const SimConfig& c, const std::vector<Node>& nodes) {
  std::vector<Tier> present;
  for (Tier t : {Tier::cloud, Tier::edge, Tier::iot}) {
    if (std::any_of(nodes.begin(), nodes.end(), [&](const Node& n) { return n.tier == t; })) present.push_back(t);
  }
  std::vector<Link> links;
  for (std::size_t p = 0; p + 1 < present.size(); ++p) {
    const Tier upper = present[p];
    const Tier lower = present[p + 1];
    const bool core = upper == Tier::cloud && lower == Tier::edge;
    const double cap = core ? c.net_topology.cloud_edge_capacity_bps : c.net_topology.edge_iot_capacity_bps;
    const double lat = core ? c.net_topology.cloud_edge_latency_ms : c.net_topology.edge_iot_latency_ms;
    for (std::size_t s = 0; s < nodes.size(); ++s) {
      if (nodes[s].tier != lower) continue;
      for (std::size_t d = 0; d < nodes.size(); ++d) {
        if (nodes[d].tier == upper) links.push_back({s, d, cap, lat});
      }
    }
  }
  return links;
}

}  // namespace

void validate_config(const SimConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ArgumentError("invalid simulator config: " + what);
  };
  require(c.duration_s > 0.0 && std::isfinite(c.duration_s), "duration_s must be positive");
  require(c.sample_period_s > 0.0 && std::isfinite(c.sample_period_s), "sample_period_s must be positive");
  require(c.duration_s >= c.sample_period_s, "duration_s must cover at least one sample period");
  require(c.tiers.cloud >= 0 && c.tiers.edge >= 0 && c.tiers.iot >= 0, "tier counts must be non-negative");
  require(c.tiers.total() >= 1, "at least one node is required");
  require(c.base_load >= 0.0 && c.base_load <= 1.0, "base_load must be in [0,1]");
  require(c.load_skew >= 0.0 && std::isfinite(c.load_skew), "load_skew must be >= 0");
  for (const auto& e : c.causal_edges) {
    require(e.src >= 1 && e.src <= c.tiers.total() && e.dst >= 1 && e.dst <= c.tiers.total(),
            "causal edge node index out of range");
    require(e.src != e.dst, "causal edge must join distinct nodes");
    require(e.lag >= 1, "causal edge lag must be >= 1");
    require(std::isfinite(e.coefficient), "causal edge coefficient must be finite");
  }
  for (const auto* t : {&c.thermal.cloud, &c.thermal.edge, &c.thermal.iot}) {
    require(t->k > 0.0 && std::isfinite(t->t0_c) && std::isfinite(t->te_c), "thermal params need k > 0");
  }
  require(c.thermal.heat_per_util >= 0.0, "heat_per_util must be >= 0");
  for (const auto& [tier, p] : c.power) require(p.idle_w >= 0.0 && p.peak_w >= p.idle_w, "power needs 0 <= idle <= peak");
  require(c.noise_std.cpu >= 0.0 && c.noise_std.mem >= 0.0 && c.noise_std.temperature >= 0.0 &&
              c.noise_std.latency_ms >= 0.0,
          "noise_std values must be >= 0");
  const auto& n = c.net_topology;
  require(n.cloud_edge_capacity_bps > 0.0 && n.edge_iot_capacity_bps > 0.0, "link capacities must be positive");
  require(n.cloud_edge_latency_ms >= 0.0 && n.edge_iot_latency_ms >= 0.0, "link latencies must be >= 0");
  require(n.link_load_factor >= 0.0 && n.link_load_factor <= 1.0, "link_load_factor must be in [0,1]");
  require(n.loss_prob >= 0.0 && n.loss_prob <= 1.0, "loss_prob must be in [0,1]");
  const auto& r = c.requests;
  require(r.rate_per_s >= 0.0 && r.mean_service_s > 0.0 && r.servers >= 1, "requests need rate >= 0, service > 0, servers >= 1");
  require(r.error_prob >= 0.0 && r.error_prob <= 1.0 && r.accuracy >= 0.0 && r.accuracy <= 1.0,
          "request probabilities must be in [0,1]");
  require(r.cost_per_s >= 0.0, "cost_per_s must be >= 0");
  for (const auto& e : c.adaptation_plan) {
    require(e.p_base > 0.0 && e.p_post > 0.0 && e.t_adapt_s > 0.0 && !e.event_id.empty(),
            "adaptation events need an id and positive p_base, p_post, t_adapt_s");
  }
}

SimConfig load_config(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(1, e.what());
  }
  if (!j.is_object()) throw ArgumentError("simulator config must be a JSON object");
  reject_unknown(j,
                 {"seed", "duration_s", "sample_period_s", "tiers", "base_load", "load_skew", "causal_edges", "thermal",
                  "power", "noise_std", "adaptation_plan", "net_topology", "requests", "epoch"},
                 "simulator config");
  SimConfig c;
  read(j, "seed", c.seed);
  read(j, "duration_s", c.duration_s);
  read(j, "sample_period_s", c.sample_period_s);
  read(j, "base_load", c.base_load);
  read(j, "load_skew", c.load_skew);
  read(j, "epoch", c.epoch);
  if (auto it = j.find("tiers"); it != j.end()) {
    reject_unknown(*it, {"cloud", "edge", "iot"}, "tiers");
    read(*it, "cloud", c.tiers.cloud);
    read(*it, "edge", c.tiers.edge);
    read(*it, "iot", c.tiers.iot);
  }
  if (auto it = j.find("causal_edges"); it != j.end()) {
    for (const auto& e : *it) {
      CausalEdge edge;
      if (e.is_array()) {
        if (e.size() != 4) throw ArgumentError("causal edge arrays are [src, dst, coefficient, lag]");
        edge = {e[0].get<int>(), e[1].get<int>(), e[2].get<double>(), e[3].get<int>()};
      } else {
        reject_unknown(e, {"src", "dst", "coefficient", "lag"}, "causal edge");
        read(e, "src", edge.src);
        read(e, "dst", edge.dst);
        read(e, "coefficient", edge.coefficient);
        read(e, "lag", edge.lag);
      }
      c.causal_edges.push_back(edge);
    }
  }
  if (auto it = j.find("thermal"); it != j.end()) {
    reject_unknown(*it, {"cloud", "edge", "iot", "heat_per_util"}, "thermal");
    if (it->contains("cloud")) c.thermal.cloud = read_thermal((*it)["cloud"], c.thermal.cloud);
    if (it->contains("edge")) c.thermal.edge = read_thermal((*it)["edge"], c.thermal.edge);
    if (it->contains("iot")) c.thermal.iot = read_thermal((*it)["iot"], c.thermal.iot);
    read(*it, "heat_per_util", c.thermal.heat_per_util);
  }
  if (auto it = j.find("power"); it != j.end()) {
    reject_unknown(*it, {"cloud", "edge", "iot"}, "power");
    for (const auto& [key, v] : it->items()) {
      TierPower& p = c.power[parse_tier(key)];
      reject_unknown(v, {"idle_w", "peak_w"}, "power tier");
      read(v, "idle_w", p.idle_w);
      read(v, "peak_w", p.peak_w);
    }
  }
  if (auto it = j.find("noise_std"); it != j.end()) {
    reject_unknown(*it, {"cpu", "mem", "temperature", "latency_ms"}, "noise_std");
    read(*it, "cpu", c.noise_std.cpu);
    read(*it, "mem", c.noise_std.mem);
    read(*it, "temperature", c.noise_std.temperature);
    read(*it, "latency_ms", c.noise_std.latency_ms);
  }
  if (auto it = j.find("adaptation_plan"); it != j.end()) {
    for (const auto& e : *it) {
      reject_unknown(e, {"event_id", "p_base", "p_post", "t_adapt_s", "polarity"}, "adaptation event");
      AdaptationEvent ev;
      read(e, "event_id", ev.event_id);
      read(e, "p_base", ev.p_base);
      read(e, "p_post", ev.p_post);
      read(e, "t_adapt_s", ev.t_adapt_s);
      if (e.contains("polarity")) ev.polarity = parse_polarity(e["polarity"].get<std::string>());
      c.adaptation_plan.push_back(ev);
    }
  }
  if (auto it = j.find("net_topology"); it != j.end()) {
    reject_unknown(*it,
                   {"cloud_edge_capacity_bps", "edge_iot_capacity_bps", "cloud_edge_latency_ms", "edge_iot_latency_ms",
                    "link_load_factor", "loss_prob"},
                   "net_topology");
    auto& n = c.net_topology;
    read(*it, "cloud_edge_capacity_bps", n.cloud_edge_capacity_bps);
    read(*it, "edge_iot_capacity_bps", n.edge_iot_capacity_bps);
    read(*it, "cloud_edge_latency_ms", n.cloud_edge_latency_ms);
    read(*it, "edge_iot_latency_ms", n.edge_iot_latency_ms);
    read(*it, "link_load_factor", n.link_load_factor);
    read(*it, "loss_prob", n.loss_prob);
  }
  if (auto it = j.find("requests"); it != j.end()) {
    reject_unknown(*it, {"rate_per_s", "mean_service_s", "servers", "error_prob", "accuracy", "cost_per_s"}, "requests");
    auto& r = c.requests;
    read(*it, "rate_per_s", r.rate_per_s);
    read(*it, "mean_service_s", r.mean_service_s);
    read(*it, "servers", r.servers);
    read(*it, "error_prob", r.error_prob);
    read(*it, "accuracy", r.accuracy);
    read(*it, "cost_per_s", r.cost_per_s);
  }
  validate_config(c);
  return c;
}

SimConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open simulator config '" + path + "'");
  return load_config(in);
}

std::vector<std::string> node_names(const TierCounts& tiers) {
  SimConfig c;
  c.tiers = tiers;
  std::vector<std::string> out;
  for (const auto& n : make_nodes(c)) out.push_back(n.id);
  return out;
}

Trace simulate(const SimConfig& config) {
  validate_config(config);
  const std::vector<Node> nodes = make_nodes(config);
  const std::size_t n = nodes.size();
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::round(config.duration_s / config.sample_period_s)));
  const double dt = config.sample_period_s;

  int max_lag = 1;
  for (const auto& e : config.causal_edges) max_lag = std::max(max_lag, e.lag);
  const std::size_t burn_in = 100 + 10 * static_cast<std::size_t>(max_lag);

  // Deviations from each node's planted load, VAR over the causal edges.
  std::vector<Rng> cpu_rng;
  for (const auto& node : nodes) cpu_rng.emplace_back(derive_seed(config.seed, "cpu/" + node.id));
  const std::size_t total = burn_in + steps;
  std::vector<std::vector<double>> dev(n, std::vector<double>(total, 0.0));
  for (std::size_t t = 0; t < total; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      double d = config.noise_std.cpu * cpu_rng[i].normal();
      for (const auto& e : config.causal_edges) {
        if (static_cast<std::size_t>(e.dst - 1) != i || t < static_cast<std::size_t>(e.lag)) continue;
        d += e.coefficient * dev[static_cast<std::size_t>(e.src - 1)][t - static_cast<std::size_t>(e.lag)];
      }
      dev[i][t] = std::clamp(d, -1.0, 1.0);
    }
  }
  auto cpu_at = [&](std::size_t i, std::size_t k) { return std::clamp(nodes[i].load + dev[i][burn_in + k], 0.0, 1.0); };

  Trace trace;
  trace.epoch = config.epoch;
  for (const auto& node : nodes) trace.node_ids.push_back(node.id);

  std::vector<Rng> mem_rng;
  std::vector<Rng> temp_rng;
  for (const auto& node : nodes) {
    mem_rng.emplace_back(derive_seed(config.seed, "mem/" + node.id));
    temp_rng.emplace_back(derive_seed(config.seed, "temp/" + node.id));
  }
  std::vector<double> temperature(n);
  for (std::size_t i = 0; i < n; ++i) temperature[i] = thermal_for(config.thermal, nodes[i].tier).t0_c;

  trace.node_samples.reserve(n * steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    for (std::size_t i = 0; i < n; ++i) {
      const Node& node = nodes[i];
      const double cpu = cpu_at(i, k);
      const auto& th = thermal_for(config.thermal, node.tier);
      if (config.thermal.heat_per_util == 0.0) {
        temperature[i] = th.te_c + (th.t0_c - th.te_c) * std::exp(-th.k * t);
      } else if (k > 0) {
        const double equilibrium = th.te_c + config.thermal.heat_per_util * cpu_at(i, k - 1) / th.k;
        temperature[i] = equilibrium + (temperature[i] - equilibrium) * std::exp(-th.k * dt);
      }
      const TierPower power = config.power.count(node.tier) ? config.power.at(node.tier) : TierPower{};
      NodeSample s;
      s.node_id = node.id;
      s.timestamp = t;
      s.tier = node.tier;
      s.cpu_util = cpu;
      s.mem_util = std::clamp(0.3 + 0.4 * cpu + config.noise_std.mem * mem_rng[i].normal(), 0.0, 1.0);
      s.energy_j = k == 0 ? 0.0 : (power.idle_w + (power.peak_w - power.idle_w) * cpu) * dt;
      s.busy_s = k == 0 ? 0.0 : cpu * dt;
      s.temperature_c = temperature[i] + config.noise_std.temperature * temp_rng[i].normal();
      trace.node_samples.push_back(std::move(s));
    }
  }

  const std::vector<Link> links = make_links(config, nodes);
  std::vector<Rng> net_rng;
  for (const auto& l : links) net_rng.emplace_back(derive_seed(config.seed, "net/" + nodes[l.src].id + "->" + nodes[l.dst].id));
  trace.net_samples.reserve(links.size() * steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    for (std::size_t li = 0; li < links.size(); ++li) {
      const Link& l = links[li];
      Rng& rng = net_rng[li];
      NetSample s;
      s.src = nodes[l.src].id;
      s.dst = nodes[l.dst].id;
      s.timestamp = t;
      s.capacity_bps = l.capacity_bps;
      s.latency_ms = l.latency_ms * (1.0 + 0.5 * cpu_at(l.dst, k)) + std::abs(config.noise_std.latency_ms * rng.normal());
      if (k > 0) {
        const double offered = cpu_at(l.src, k) * l.capacity_bps / 8.0 * dt * config.net_topology.link_load_factor;
        const double sent = std::ceil(offered / kPacketBytes);
        const double p = 1.0 - config.net_topology.loss_prob;
        const double sd = std::sqrt(sent * p * (1.0 - p));
        const double delivered = std::clamp(std::round(sent * p + sd * rng.normal()), 0.0, sent);
        s.packets_sent = static_cast<std::uint64_t>(sent);
        s.packets_delivered = static_cast<std::uint64_t>(delivered);
        s.bytes_delivered = s.packets_delivered * static_cast<std::uint64_t>(kPacketBytes);
      }
      trace.net_samples.push_back(std::move(s));
    }
  }

  Rng req_rng(derive_seed(config.seed, "requests"));
  const auto& rc = config.requests;
  if (rc.rate_per_s > 0.0) {
    const double horizon = static_cast<double>(steps - 1) * dt;
    std::vector<double> free_at(static_cast<std::size_t>(rc.servers), 0.0);
    double arrival = req_rng.exponential(1.0 / rc.rate_per_s);
    std::size_t count = 0;
    while (arrival < horizon) {
      auto server = std::min_element(free_at.begin(), free_at.end());
      const double service = req_rng.exponential(rc.mean_service_s);
      RequestRecord r;
      char id[32];
      std::snprintf(id, sizeof id, "req-%06zu", ++count);
      r.request_id = id;
      r.arrival_ts = arrival;
      r.start_ts = std::max(arrival, *server);
      r.finish_ts = r.start_ts + service;
      *server = r.finish_ts;
      r.ok = req_rng.uniform() >= rc.error_prob;
      const bool correct = req_rng.uniform() < rc.accuracy;
      if (r.ok) r.correct = correct;
      r.cost_units = rc.cost_per_s * service;
      trace.requests.push_back(std::move(r));
      arrival += req_rng.exponential(1.0 / rc.rate_per_s);
    }
  }

  trace.adaptations = config.adaptation_plan;
  return trace;
}

GroundTruth describe_ground_truth(const SimConfig& config) {
  validate_config(config);
  const auto nodes = make_nodes(config);
  GroundTruth gt;
  for (const auto& e : config.causal_edges) {
    gt.edges.push_back({nodes[static_cast<std::size_t>(e.src - 1)].id, nodes[static_cast<std::size_t>(e.dst - 1)].id,
                        e.coefficient, e.lag});
  }
  gt.load_skew = config.load_skew;
  std::vector<double> loads;
  for (const auto& node : nodes) {
    gt.load_weights.emplace_back(node.id, node.load);
    loads.push_back(node.load);
  }
  gt.thermal = config.thermal;
  if (config.load_skew == 0.0) {
    gt.expected_cpu_fairness_low = 0.99;
    gt.expected_cpu_fairness_high = 1.0;
  } else {
    std::vector<double> expected;
    for (double load : loads) expected.push_back(clamped_normal_mean(load, config.noise_std.cpu));
    const bool any = std::any_of(expected.begin(), expected.end(), [](double v) { return v > 0.0; });
    const double planted = any ? novel::jain_fairness(expected) : 1.0;
    const double floor = 1.0 / static_cast<double>(nodes.size());
    gt.expected_cpu_fairness_low = std::max(floor, planted - 0.05);
    gt.expected_cpu_fairness_high = std::min(1.0, planted + 0.05);
  }
  return gt;
}

}  // namespace dccm::sim
