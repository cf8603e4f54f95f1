#pragma once

// Trace data model, JSONL ingestion/serialization, validation and windowing.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dccm/common.hpp"

namespace dccm {

enum class Tier { cloud, edge, iot };
enum class Polarity { higher_better, lower_better };
enum class Strictness { strict, lenient };

std::string_view to_string(Tier t);
std::string_view to_string(Polarity p);
Tier parse_tier(std::string_view s);
Polarity parse_polarity(std::string_view s);

struct NodeSample {
  std::string node_id;
  double timestamp = 0.0;
  Tier tier = Tier::edge;
  double cpu_util = 0.0;
  double mem_util = 0.0;
  double energy_j = 0.0;  // delta since previous sample of this node
  std::optional<double> temperature_c;
  double busy_s = 0.0;  // delta since previous sample of this node

  bool operator==(const NodeSample&) const = default;
};

struct NetSample {
  std::string src;
  std::string dst;
  double timestamp = 0.0;
  double latency_ms = 0.0;
  double capacity_bps = 1.0;
  std::uint64_t bytes_delivered = 0;  // delta since previous sample on (src, dst)
  std::uint64_t packets_sent = 0;
  std::uint64_t packets_delivered = 0;

  bool operator==(const NetSample&) const = default;
};

struct RequestRecord {
  std::string request_id;
  double arrival_ts = 0.0;
  double start_ts = 0.0;
  double finish_ts = 0.0;
  bool ok = true;
  std::optional<bool> correct;
  double cost_units = 0.0;

  bool operator==(const RequestRecord&) const = default;
};

struct AdaptationEvent {
  std::string event_id;
  double p_base = 1.0;
  double p_post = 1.0;
  double t_adapt_s = 1.0;
  Polarity polarity = Polarity::higher_better;

  bool operator==(const AdaptationEvent&) const = default;
};

struct Trace {
  std::string epoch;
  std::vector<NodeSample> node_samples;
  std::vector<NetSample> net_samples;
  std::vector<RequestRecord> requests;
  std::vector<AdaptationEvent> adaptations;
  std::vector<std::string> node_ids;

  bool operator==(const Trace&) const = default;
};

struct LoadResult {
  Trace trace;
  std::size_t warning_count = 0;
  std::vector<std::string> warnings;
};

// Reads a JSONL trace. Throws ParseError on malformed JSON (1-based line
// number) and, in strict mode, ValidationError on the first invariant
// violation. Lenient mode drops offending records and ignores unknown fields,
// counting one warning per event.
LoadResult load_trace(std::istream& source, Strictness strictness = Strictness::strict);
LoadResult load_trace_file(const std::string& path, Strictness strictness = Strictness::strict);

// Writes a JSONL trace readable by load_trace; starts with a meta record.
void serialize_trace(const Trace& trace, std::ostream& out);
std::string serialize_trace(const Trace& trace);

struct Violation {
  std::string invariant;  // e.g. "packets_delivered <= packets_sent"
  std::string record;     // e.g. "net[3] a->b @ 12"
};

struct ValidationReport {
  std::size_t node_count = 0;
  std::size_t node_sample_count = 0;
  std::size_t net_sample_count = 0;
  std::size_t request_count = 0;
  std::size_t adaptation_count = 0;
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

ValidationReport validate_trace(const Trace& trace);

// Records with timestamp in [t_start, t_end); requests by arrival_ts.
// Adaptation events carry no timestamp and are kept as-is. Boundary deltas
// are not prorated.
Trace window(const Trace& trace, double t_start, double t_end);

// Smallest and largest timestamp over node and net samples and request
// arrivals; nullopt for a trace without timestamped records.
std::optional<std::pair<double, double>> time_span(const Trace& trace);

// Node samples of one node, in timestamp order.
std::vector<NodeSample> samples_of(const Trace& trace, std::string_view node_id);

}  // namespace dccm
