// Runs the simulator over 100 seeds for the acceptance configs and prints the
// observed cpu fairness range next to the ground-truth band.

#include <algorithm>
#include <cstdio>

#include "dccm/novel_metrics.hpp"
#include "dccm/simulator.hpp"
#include "support/configs.hpp"

int main() {
  struct Case {
    const char* name;
    dccm::sim::SimConfig config;
  };
  const Case cases[] = {{"uniform", dccm::test::uniform_config(1)},
                        {"skewed", dccm::test::skewed_config(1)},
                        {"one_node_carries_all", dccm::test::one_node_config(1)}};
  for (const auto& c : cases) {
    double lo = 1.0, hi = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      auto cfg = c.config;
      cfg.seed = seed;
      const auto f = dccm::novel::fairness_by_resource(dccm::sim::simulate(cfg), dccm::novel::FairnessResource::cpu);
      lo = std::min(lo, *f.index);
      hi = std::max(hi, *f.index);
    }
    const auto gt = dccm::sim::describe_ground_truth(c.config);
    std::printf("%-22s observed [%.6f, %.6f]  band [%.6f, %.6f]\n", c.name, lo, hi, gt.expected_cpu_fairness_low,
                gt.expected_cpu_fairness_high);
  }
}
