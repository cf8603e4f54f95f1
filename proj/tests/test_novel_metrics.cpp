#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dccm/novel_metrics.hpp"
#include "dccm/simulator.hpp"
#include "support/configs.hpp"
#include "support/oracles.hpp"

namespace dccm::novel {
namespace {

TEST(PredictTemperature, Examples) {
  const ThermalParams p{85, 25, 0.1};
  EXPECT_EQ(predict_temperature(p, 0), 85.0);
  EXPECT_NEAR(predict_temperature(p, 1e4), 25.0, 1e-12);
  EXPECT_NEAR(predict_temperature(p, 10), 47.0728, 1e-4);
  EXPECT_DOUBLE_EQ(predict_temperature(p, 10), 25 + 60 * std::exp(-1.0));
  EXPECT_THROW(predict_temperature(p, -1), ArgumentError);
}

TEST(PredictTemperature, MonotoneTowardAmbient) {
  for (const ThermalParams& p : {ThermalParams{85, 25, 0.1}, ThermalParams{10, 25, 0.03}}) {
    double prev = std::abs(p.t0_c - p.te_c);
    for (int i = 1; i <= 200; ++i) {
      const double gap = std::abs(predict_temperature(p, 0.5 * i) - p.te_c);
      EXPECT_LT(gap, prev);
      prev = gap;
    }
  }
}

TEST(FitCooling, NoiselessKnownAmbient) {
  const auto fit = fit_cooling(test::cooling_series({85, 25, 0.05}, 40, 60), 25.0);
  EXPECT_NEAR(fit.params.k, 0.05, 1e-9);
  EXPECT_NEAR(fit.params.t0_c, 85.0, 1e-9);
  EXPECT_FALSE(fit.te_estimated);
}

TEST(FitCooling, TwoPointClosedForm) {
  const std::vector<TemperaturePoint> pts{{0, 85}, {10, 47.0728}};
  const auto fit = fit_cooling(pts, 25.0);
  EXPECT_NEAR(fit.params.k, 0.1, 1e-6);
  EXPECT_NEAR(fit.params.k, std::log((85.0 - 25.0) / (47.0728 - 25.0)) / 10.0, 1e-12);
}

TEST(FitCooling, ConstantSeriesIsUnidentifiable) {
  const std::vector<TemperaturePoint> pts{{0, 25}, {1, 25}, {2, 25}};
  try {
    fit_cooling(pts, 25.0);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("unidentifiable k"), std::string::npos);
  }
  EXPECT_THROW(fit_cooling(pts), DataError);
}

TEST(FitCooling, PointAtAmbientNamed) {
  const std::vector<TemperaturePoint> pts{{0, 60}, {1, 40}, {2, 24}};
  try {
    fit_cooling(pts, 25.0);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("point 2"), std::string::npos);
  }
}

TEST(FitCooling, Preconditions) {
  EXPECT_THROW(fit_cooling(std::vector<TemperaturePoint>{{0, 60}}, 25.0), ArgumentError);
  EXPECT_THROW(fit_cooling(std::vector<TemperaturePoint>{{1, 60}, {1, 50}}, 25.0), ArgumentError);
  EXPECT_THROW(fit_cooling(std::vector<TemperaturePoint>{{0, 60}, {1, 50}}), ArgumentError);
}

TEST(FitCooling, WarmingSeriesRejected) {
  const std::vector<TemperaturePoint> pts{{0, 30}, {1, 40}, {2, 45}};
  EXPECT_THROW(fit_cooling(pts, 25.0), DataError);
}

TEST(FitCooling, NoiselessUnknownAmbientRoundTrip) {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> k(0.01, 0.5), t0(60, 95), te(15, 30);
  for (int draw = 0; draw < 20; ++draw) {
    const ThermalParams p{t0(gen), te(gen), k(gen)};
    const auto pts = test::cooling_series(p, 50, 2.0 / p.k);
    const auto known = fit_cooling(pts, p.te_c);
    EXPECT_LE(std::abs(known.params.k - p.k) / p.k, 1e-6);
    const auto unknown = fit_cooling(pts);
    EXPECT_TRUE(unknown.te_estimated);
    EXPECT_LE(std::abs(unknown.params.k - p.k) / p.k, 1e-6) << "draw " << draw;
  }
}

TEST(FitCooling, NoisyRoundTripWithinFivePercent) {
  std::mt19937_64 gen(202);
  std::uniform_real_distribution<double> k(0.01, 0.5), t0(60, 95), te(15, 30);
  for (int draw = 0; draw < 20; ++draw) {
    const ThermalParams p{t0(gen), te(gen), k(gen)};
    const auto pts = test::cooling_series(p, 50, 2.0 / p.k, 0.5, 1000 + draw);
    EXPECT_LE(std::abs(fit_cooling(pts, p.te_c).params.k - p.k) / p.k, 0.05) << "draw " << draw;
    EXPECT_LE(std::abs(fit_cooling(pts).params.k - p.k) / p.k, 0.05) << "draw " << draw;
  }
}

TEST(JainFairness, Examples) {
  EXPECT_EQ(jain_fairness(std::vector<double>{1, 1, 1, 1}), 1.0);
  EXPECT_EQ(jain_fairness(std::vector<double>{4, 0, 0, 0}), 0.25);
  EXPECT_NEAR(jain_fairness(std::vector<double>{1, 2, 3}), 36.0 / 42.0, 1e-12);
  EXPECT_NEAR(jain_fairness(std::vector<double>{1, 2, 3}), 0.857142857, 1e-9);
}

TEST(JainFairness, Errors) {
  EXPECT_THROW(jain_fairness(std::vector<double>{0, 0, 0}), ArgumentError);
  EXPECT_THROW(jain_fairness(std::vector<double>{}), ArgumentError);
  EXPECT_THROW(jain_fairness(std::vector<double>{1, -1}), ArgumentError);
  EXPECT_THROW(jain_fairness(std::vector<double>{1, NAN}), ArgumentError);
}

TEST(JainFairness, LabelledInput) {
  FairnessInput in{{2, 2}, FairnessResource::bandwidth};
  EXPECT_EQ(jain_fairness(in), 1.0);
}

TEST(JainFairness, RandomVectorProperties) {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<int> len(1, 64);
  std::uniform_real_distribution<double> val(0.0, 100.0);
  for (int round = 0; round < 1000; ++round) {
    std::vector<double> x(static_cast<std::size_t>(len(gen)));
    for (auto& v : x) v = val(gen);
    const double f = jain_fairness(x);
    const double n = static_cast<double>(x.size());
    EXPECT_GE(f, 1.0 / n);
    EXPECT_LE(f, 1.0);
    EXPECT_NEAR(f, test::naive_jain(x), 1e-12);
    for (double c : {0.5, 3.0, 1e6}) {
      std::vector<double> scaled = x;
      for (auto& v : scaled) v *= c;
      EXPECT_LE(std::abs(jain_fairness(scaled) - f), 1e-12);
    }
    std::vector<double> equal(x.size(), x[0] + 1.0);
    EXPECT_EQ(jain_fairness(equal), 1.0);
  }
}

TEST(JainFairness, OneOnlyForEqualVectors) {
  EXPECT_LT(jain_fairness(std::vector<double>{1, 1, 1, 1.001}), 1.0);
  EXPECT_LT(jain_fairness(std::vector<double>{5, 6}), 1.0);
}

TEST(FairnessByResource, SingleNodeIsOne) {
  Trace t;
  t.node_ids = {"a"};
  t.node_samples = {test::node("a", 0, 0.3, 5), test::node("a", 1, 0.7, 5)};
  EXPECT_EQ(*fairness_by_resource(t, FairnessResource::cpu).index, 1.0);
  EXPECT_EQ(*fairness_by_resource(t, FairnessResource::energy).index, 1.0);
}

TEST(FairnessByResource, MissingDataIsUndefined) {
  Trace t;
  t.node_ids = {"a", "b"};
  t.node_samples = {test::node("a", 0, 0.3), test::node("b", 0, 0.5)};
  EXPECT_FALSE(fairness_by_resource(t, FairnessResource::bandwidth).index);
  EXPECT_FALSE(fairness_by_resource(t, FairnessResource::energy).index);
  EXPECT_FALSE(fairness_by_resource(Trace{}, FairnessResource::cpu).index);
}

TEST(FairnessByResource, BandwidthSumsIncidentBytes) {
  Trace t;
  t.node_ids = {"a", "b", "c"};
  t.net_samples = {test::net("a", "b", 0, 1, 1e6, 100, 1, 1), test::net("c", "b", 0, 1, 1e6, 300, 1, 1)};
  const auto f = fairness_by_resource(t, FairnessResource::bandwidth);
  EXPECT_EQ(f.input.values, (std::vector<double>{100, 400, 300}));
  EXPECT_DOUBLE_EQ(*f.index, test::naive_jain({100, 400, 300}));
}

TEST(FairnessByResource, PlantedLoads) {
  const auto uniform = fairness_by_resource(sim::simulate(test::uniform_config(1)), FairnessResource::cpu);
  EXPECT_GE(*uniform.index, 0.99);
  const auto one = fairness_by_resource(sim::simulate(test::one_node_config(1)), FairnessResource::cpu);
  EXPECT_NEAR(*one.index, 1.0 / 8.0, 0.05);
}

TEST(Carbon, Examples) {
  EXPECT_EQ(carbon_emissions(0, {}), 0.0);
  EXPECT_DOUBLE_EQ(carbon_emissions(3.6e6, {400}), 400.0);
  EXPECT_DOUBLE_EQ(carbon_emissions(1.8e6, {500}), 250.0);
  EXPECT_EQ(CarbonConfig{}.intensity_g_per_kwh, 400.0);
  EXPECT_THROW(carbon_emissions(-1, {}), ArgumentError);
  EXPECT_THROW(carbon_emissions(1, {0}), ArgumentError);
}

TEST(Carbon, AdditiveOnExactInputs) {
  // Multiples of 3.6e6 J with dyadic intensities keep every step exact.
  for (double a : {0.0, 3.6e6, 7.2e6, 36e6}) {
    for (double b : {3.6e6, 1.08e7}) {
      for (double i : {400.0, 512.0, 250.0}) {
        EXPECT_EQ(carbon_emissions(a + b, {i}), carbon_emissions(a, {i}) + carbon_emissions(b, {i}));
      }
    }
  }
}

TEST(Carbon, AdditiveWithinRounding) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> e(0, 1e9);
  for (int i = 0; i < 1000; ++i) {
    const double a = e(gen), b = e(gen);
    const double whole = carbon_emissions(a + b, {});
    EXPECT_NEAR(whole, carbon_emissions(a, {}) + carbon_emissions(b, {}), 1e-12 * whole);
  }
}

TEST(Adaptivity, Examples) {
  using test::event;
  EXPECT_EQ(adaptivity_quotient(std::vector<AdaptationEvent>{event("a", 100, 100, 1)}), 1.0);
  EXPECT_EQ(adaptivity_quotient(std::vector<AdaptationEvent>{event("a", 1, 2, 1), event("b", 1, 1.5, 3)}), 1.25);
  EXPECT_EQ(adaptivity_quotient(std::vector<AdaptationEvent>{event("lat", 200, 100, 2, Polarity::lower_better)}), 1.0);
  EXPECT_THROW(adaptivity_quotient(std::vector<AdaptationEvent>{}), ArgumentError);
  EXPECT_THROW(adaptivity_quotient(std::vector<AdaptationEvent>{event("a", 0, 1, 1)}), ArgumentError);
}

TEST(Adaptivity, PermutationInvariant) {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  std::vector<AdaptationEvent> events;
  for (int i = 0; i < 17; ++i) {
    events.push_back(test::event("e" + std::to_string(i), u(gen), u(gen), u(gen),
                                 i % 3 ? Polarity::higher_better : Polarity::lower_better));
  }
  const double q = adaptivity_quotient(events);
  for (int s = 0; s < 100; ++s) {
    std::shuffle(events.begin(), events.end(), gen);
    EXPECT_EQ(adaptivity_quotient(events), q);
  }
}

TEST(Amdahl, Examples) {
  EXPECT_EQ(amdahl_speedup(0, 7), 1.0);
  EXPECT_EQ(amdahl_speedup(1, 8), 8.0);
  EXPECT_NEAR(amdahl_speedup(0.5, 2), 1.333333, 1e-6);
  EXPECT_THROW(amdahl_speedup(1.1, 2), ArgumentError);
  EXPECT_THROW(amdahl_speedup(-0.1, 2), ArgumentError);
  EXPECT_THROW(amdahl_speedup(0.5, 0), ArgumentError);
}

TEST(Amdahl, MonotoneAndAsymptote) {
  for (int i = 1; i <= 9; ++i) {
    const double f = i / 10.0;
    double prev = 0.0;
    for (int s = 1; s <= 100; ++s) {
      const double v = amdahl_speedup(f, s);
      EXPECT_GT(v, prev);
      prev = v;
    }
    EXPECT_LE(std::abs(amdahl_speedup(f, 1e9) - 1.0 / (1.0 - f)), 1e-6);
  }
}

}  // namespace
}  // namespace dccm::novel
