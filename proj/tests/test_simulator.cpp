#include <gtest/gtest.h>

#include <sstream>

#include "dccm/causality.hpp"
#include "dccm/novel_metrics.hpp"
#include "dccm/simulator.hpp"
#include "support/configs.hpp"

namespace dccm::sim {
namespace {

SimConfig parse(const std::string& text) {
  std::istringstream in(text);
  return load_config(in);
}

TEST(Simulate, SameConfigSameBytes) {
  const auto c = test::uniform_config(3);
  EXPECT_EQ(serialize_trace(simulate(c)), serialize_trace(simulate(c)));
  auto other = c;
  other.seed = 4;
  EXPECT_NE(serialize_trace(simulate(c)), serialize_trace(simulate(other)));
}

TEST(Simulate, RoundTripsThroughJsonl) {
  const Trace t = simulate(test::skewed_config(5));
  std::istringstream in(serialize_trace(t));
  EXPECT_EQ(load_trace(in).trace, t);
}

TEST(Simulate, TracesAreValidAcrossSeeds) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto c = test::uniform_config(seed);
    c.duration_s = 120.0;
    c.load_skew = static_cast<double>(seed % 4);
    c.noise_std.temperature = 0.5;
    c.adaptation_plan = {{"e1", 2.0, 1.0, 3.0}};
    const auto rep = validate_trace(simulate(c));
    EXPECT_TRUE(rep.ok()) << "seed " << seed << ": " << (rep.ok() ? "" : rep.violations.front().invariant);
  }
}

TEST(Simulate, ShapeFollowsConfig) {
  SimConfig c;
  c.duration_s = 50.0;
  c.sample_period_s = 2.0;
  c.tiers = {1, 1, 2};
  c.adaptation_plan = {{"e1", 2.0, 1.0, 3.0}};
  const Trace t = simulate(c);
  EXPECT_EQ(t.node_ids, node_names(c.tiers));
  EXPECT_EQ(t.node_samples.size(), 4u * 25u);
  EXPECT_EQ(t.adaptations.size(), 1u);
  EXPECT_EQ(t.epoch, c.epoch);
  EXPECT_FALSE(t.net_samples.empty());
}

TEST(Simulate, ThermalConstantRecovered) {
  SimConfig c;
  c.duration_s = 200.0;
  c.requests.rate_per_s = 0.0;
  const Trace t = simulate(c);
  for (const auto& [id, expected] : std::vector<std::pair<std::string, novel::ThermalParams>>{
           {t.node_ids.front(), c.thermal.cloud}, {t.node_ids[1], c.thermal.edge}, {t.node_ids.back(), c.thermal.iot}}) {
    std::vector<novel::TemperaturePoint> pts;
    for (const auto& s : samples_of(t, id)) pts.push_back({s.timestamp, *s.temperature_c});
    const auto fit = novel::fit_cooling(pts, expected.te_c);
    EXPECT_NEAR(fit.params.k, expected.k, 1e-6) << id;
  }
}

TEST(Simulate, PlantedEdgeDominatesReverseDirection) {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SimConfig c;
    c.seed = seed;
    c.duration_s = 500.0;
    c.base_load = 0.5;
    c.requests.rate_per_s = 0.0;
    c.causal_edges = {{1, 2, 0.9, 1}};
    const auto cm = causality::build_causal_matrix(simulate(c), causality::Signal::cpu_util(), 1, 1);
    if (cm.matrix(0, 1) > cm.matrix(1, 0)) ++wins;
  }
  EXPECT_GE(wins, 18);
}

TEST(GroundTruth, UniformBand) {
  const auto gt = describe_ground_truth(test::uniform_config(1));
  EXPECT_EQ(gt.expected_cpu_fairness_low, 0.99);
  EXPECT_EQ(gt.expected_cpu_fairness_high, 1.0);
  EXPECT_TRUE(gt.edges.empty());
  EXPECT_EQ(gt.load_weights.size(), 8u);
}

TEST(GroundTruth, SkewedBandsContainObservedFairness) {
  for (const auto& c : {test::skewed_config(9), test::one_node_config(9)}) {
    const auto gt = describe_ground_truth(c);
    EXPECT_LT(gt.expected_cpu_fairness_high, 0.99);
    EXPECT_GE(gt.expected_cpu_fairness_low, 1.0 / 8.0);
    const auto f = novel::fairness_by_resource(simulate(c), novel::FairnessResource::cpu).index;
    ASSERT_TRUE(f);
    EXPECT_GE(*f, gt.expected_cpu_fairness_low);
    EXPECT_LE(*f, gt.expected_cpu_fairness_high);
  }
}

TEST(GroundTruth, EdgesUseNodeNames) {
  const auto c = test::chain_config(1, true);
  const auto gt = describe_ground_truth(c);
  const auto names = node_names(c.tiers);
  ASSERT_EQ(gt.edges.size(), 2u);
  EXPECT_EQ(gt.edges[0].src, names[0]);
  EXPECT_EQ(gt.edges[0].dst, names[1]);
  EXPECT_EQ(gt.edges[1].dst, names[2]);
  EXPECT_EQ(gt.edges[1].coefficient, 0.9);
}

TEST(Config, RejectsInvalidValues) {
  auto bad = [](auto mutate) {
    SimConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(validate_config(bad([](SimConfig& c) { c.duration_s = 0; })), ArgumentError);
  EXPECT_THROW(validate_config(bad([](SimConfig& c) { c.tiers = {0, 0, 0}; })), ArgumentError);
  EXPECT_THROW(validate_config(bad([](SimConfig& c) { c.base_load = 1.5; })), ArgumentError);
  EXPECT_THROW(validate_config(bad([](SimConfig& c) { c.causal_edges = {{1, 1, 0.5, 1}}; })), ArgumentError);
  EXPECT_THROW(validate_config(bad([](SimConfig& c) { c.causal_edges = {{1, 99, 0.5, 1}}; })), ArgumentError);
  EXPECT_THROW(validate_config(bad([](SimConfig& c) { c.thermal.edge.k = 0; })), ArgumentError);
  EXPECT_THROW(validate_config(bad([](SimConfig& c) { c.net_topology.loss_prob = 2; })), ArgumentError);
  EXPECT_THROW(simulate(bad([](SimConfig& c) { c.requests.servers = 0; })), ArgumentError);
}

TEST(Config, LoadsJson) {
  const auto c = parse(R"({"seed": 9, "duration_s": 30, "tiers": {"cloud": 1, "edge": 1, "iot": 1},
    "causal_edges": [[1, 2, 0.5, 2], {"src": 2, "dst": 3, "coefficient": 0.4, "lag": 1}],
    "thermal": {"iot": {"k": 0.1}}, "noise_std": {"cpu": 0.0}, "requests": {"rate_per_s": 0}})");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.duration_s, 30.0);
  EXPECT_EQ(c.tiers.total(), 3);
  ASSERT_EQ(c.causal_edges.size(), 2u);
  EXPECT_EQ(c.causal_edges[0].lag, 2);
  EXPECT_EQ(c.causal_edges[1].coefficient, 0.4);
  EXPECT_EQ(c.thermal.iot.k, 0.1);
  EXPECT_EQ(c.thermal.iot.te_c, SimConfig{}.thermal.iot.te_c);
  EXPECT_EQ(c.noise_std.cpu, 0.0);
}

TEST(Config, RejectsUnknownKeysAndBadJson) {
  EXPECT_THROW(parse(R"({"sead": 1})"), ArgumentError);
  EXPECT_THROW(parse(R"({"requests": {"rate": 1}})"), ArgumentError);
  EXPECT_THROW(parse(R"({"causal_edges": [[1, 2, 0.5]]})"), ArgumentError);
  EXPECT_THROW(parse(R"({"duration_s": "long"})"), ArgumentError);
  EXPECT_THROW(parse(R"([1, 2])"), ArgumentError);
  EXPECT_THROW(parse("{"), ParseError);
  EXPECT_THROW(load_config_file("/nonexistent/config.json"), DataError);
}

}  // namespace
}  // namespace dccm::sim
