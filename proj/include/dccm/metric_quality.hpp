#pragma once

// Metric registry and perturbation experiments that score a metric's
// sensitivity, repeatability, consistency and independence.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dccm/common.hpp"
#include "dccm/telemetry.hpp"

namespace dccm::quality {

// A metric read a field it declared itself independent of, or the caller
// asked for an independence check on a declared input.
class DeclarationError : public Error {
 public:
  DeclarationError(const std::string& what, double delta) : Error(what), delta_(delta) {}
  double delta() const { return delta_; }

 private:
  double delta_;
};

using MetricParams = std::map<std::string, double>;

struct EvalContext {
  std::uint64_t seed = 0;  // varies per repeat; deterministic metrics ignore it
};

using MetricFn = std::function<Measure(const Trace&, const MetricParams&, const EvalContext&)>;

struct MetricDefinition {
  std::string name;
  std::string unit;
  std::string description;
  int version = 1;
  // Qualified numeric trace fields ("node.cpu_util", "net.latency_ms", ...)
  // the metric reads. Timestamps are structural and not listed.
  std::set<std::string> inputs;
  MetricFn compute;

  // Hash of name, unit, version, description and inputs.
  std::string fingerprint() const;
};

struct MetricHandle {
  std::string name;
  MetricParams params;
};

class MetricRegistry {
 public:
  // Several definitions may share a name (e.g. version bumps); lookups
  // resolve to the most recently added one.
  void add(MetricDefinition def);

  const MetricDefinition& resolve(const std::string& name) const;
  std::vector<const MetricDefinition*> definitions_named(const std::string& name) const;
  // Unique names in registration order.
  std::vector<std::string> names() const;
  bool contains(const std::string& name) const;

  // Evaluates the metric; dccm::Error from the computation becomes undefined.
  Measure evaluate(const MetricHandle& handle, const Trace& trace, const EvalContext& ctx = {}) const;

 private:
  std::vector<MetricDefinition> defs_;
};

// Every scalar metric exposed by the classic and novel modules.
MetricRegistry default_registry();

struct FieldInfo {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  bool perturbable = false;  // integer counters are randomizable only
  double default_delta = 0.0;
};

// Numeric, non-timestamp trace fields. Every entry can be randomized.
const std::vector<FieldInfo>& numeric_fields();
const FieldInfo& field_info(const std::string& name);

// Adds delta to the field of every record that has it, clamping to the
// field's bounds (busy_s additionally to the inter-sample gap).
Trace perturb(const Trace& trace, const std::string& field, double delta);

// Replaces the field with seeded random values that keep all trace invariants.
Trace randomize(const Trace& trace, const std::string& field, std::uint64_t seed);

struct Perturbation {
  std::string field;
  double delta = 0.0;
};

Measure sensitivity(const MetricRegistry& registry, const MetricHandle& metric, const Trace& trace,
                    const Perturbation& perturbation);

// stddev / |mean| over `repeats` runs with distinct seeds; 0 when every run
// agrees. Undefined when the runs disagree on definedness or the mean is 0
// with nonzero spread.
Measure repeatability(const MetricRegistry& registry, const MetricHandle& metric, const Trace& trace, int repeats,
                      std::uint64_t seed_base = 0);

struct ConsistencyResult {
  bool consistent = false;
  std::string unit;
  std::string fingerprint;
  bool undefined_a = false;
  bool undefined_b = false;
  std::vector<std::string> notes;
};

ConsistencyResult consistency(const MetricRegistry& registry, const MetricHandle& metric, const Trace& trace_a,
                              const Trace& trace_b);

// |m(randomized) - m(trace)|. Throws DeclarationError if the field is a
// declared input or the metric changes anyway.
double independence(const MetricRegistry& registry, const MetricHandle& metric, const Trace& trace,
                    const std::string& irrelevant_field, std::uint64_t seed = 0x5eed);

struct QualityOptions {
  std::optional<Perturbation> perturbation;  // default: first perturbable input
  int repeats = 5;
  std::uint64_t seed = 0x5eed;
};

struct QualityReport {
  std::string metric;
  std::string unit;
  std::string description;
  std::string fingerprint;
  Measure value;
  Measure sensitivity;
  Perturbation perturbation;
  Measure repeatability_cv;
  int repeats = 0;
  bool consistency_ok = false;
  std::vector<std::string> consistency_notes;
  double independence_delta = 0.0;  // max over checked fields
  std::vector<std::string> independence_fields;
  std::vector<std::string> declaration_violations;
  std::uint64_t seed = 0;
};

// Runs all four experiments; `comparison` is the second trace for the
// consistency check.
QualityReport assess(const MetricRegistry& registry, const MetricHandle& metric, const Trace& trace,
                     const Trace& comparison, const QualityOptions& options = {});

}  // namespace dccm::quality
