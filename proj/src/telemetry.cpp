#include "dccm/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace dccm {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kBusyTolerance = 1e-9;

const std::map<std::string, std::set<std::string>, std::less<>>& known_fields() {
  static const std::map<std::string, std::set<std::string>, std::less<>> fields{
      {"meta", {"kind", "epoch", "node_ids"}},
      {"node",
       {"kind", "node_id", "timestamp", "tier", "cpu_util", "mem_util", "energy_j",
        "temperature_c", "busy_s"}},
      {"net",
       {"kind", "src", "dst", "timestamp", "latency_ms", "capacity_bps", "bytes_delivered",
        "packets_sent", "packets_delivered"}},
      {"request",
       {"kind", "request_id", "arrival_ts", "start_ts", "finish_ts", "ok", "correct",
        "cost_units"}},
      {"adaptation", {"kind", "event_id", "p_base", "p_post", "t_adapt_s", "polarity"}},
  };
  return fields;
}

// Thrown while decoding a single line; converted to ValidationError (strict)
// or a dropped record (lenient).
struct RecordError {
  std::string field;
  std::string message;
};

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw RecordError{field, message};
}

const json& require(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) fail(field, std::string("missing field ") + field);
  return *it;
}

double get_number(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (!v.is_number()) fail(field, std::string(field) + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(field, std::string(field) + " must be finite");
  return d;
}

std::optional<double> get_optional_number(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return get_number(obj, field);
}

std::uint64_t get_count(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) fail(field, std::string(field) + " must be non-negative");
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  fail(field, std::string(field) + " must be a non-negative integer");
}

std::string get_string(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (!v.is_string()) fail(field, std::string(field) + " must be a string");
  std::string s = v.get<std::string>();
  if (s.empty()) fail(field, std::string(field) + " must be non-empty");
  return s;
}

bool get_bool(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (!v.is_boolean()) fail(field, std::string(field) + " must be a boolean");
  return v.get<bool>();
}

void check_fraction(double v, const char* field) {
  if (v < 0.0 || v > 1.0) fail(field, std::string(field) + " out of [0,1]");
}

void check_nonneg(double v, const char* field) {
  if (v < 0.0) fail(field, std::string(field) + " must be non-negative");
}

void check_positive(double v, const char* field) {
  if (!(v > 0.0)) fail(field, std::string(field) + " must be positive");
}

NodeSample decode_node(const json& j) {
  NodeSample s;
  s.node_id = get_string(j, "node_id");
  s.timestamp = get_number(j, "timestamp");
  check_nonneg(s.timestamp, "timestamp");
  try {
    s.tier = parse_tier(get_string(j, "tier"));
  } catch (const ArgumentError& e) {
    fail("tier", e.what());
  }
  s.cpu_util = get_number(j, "cpu_util");
  check_fraction(s.cpu_util, "cpu_util");
  s.mem_util = get_number(j, "mem_util");
  check_fraction(s.mem_util, "mem_util");
  s.energy_j = get_number(j, "energy_j");
  check_nonneg(s.energy_j, "energy_j");
  s.temperature_c = get_optional_number(j, "temperature_c");
  s.busy_s = get_number(j, "busy_s");
  check_nonneg(s.busy_s, "busy_s");
  return s;
}

NetSample decode_net(const json& j) {
  NetSample s;
  s.src = get_string(j, "src");
  s.dst = get_string(j, "dst");
  if (s.src == s.dst) fail("dst", "src equals dst");
  s.timestamp = get_number(j, "timestamp");
  check_nonneg(s.timestamp, "timestamp");
  s.latency_ms = get_number(j, "latency_ms");
  check_nonneg(s.latency_ms, "latency_ms");
  s.capacity_bps = get_number(j, "capacity_bps");
  check_positive(s.capacity_bps, "capacity_bps");
  s.bytes_delivered = get_count(j, "bytes_delivered");
  s.packets_sent = get_count(j, "packets_sent");
  s.packets_delivered = get_count(j, "packets_delivered");
  if (s.packets_delivered > s.packets_sent) {
    fail("packets_delivered", "packets_delivered exceeds packets_sent");
  }
  return s;
}

RequestRecord decode_request(const json& j) {
  RequestRecord r;
  r.request_id = get_string(j, "request_id");
  r.arrival_ts = get_number(j, "arrival_ts");
  check_nonneg(r.arrival_ts, "arrival_ts");
  r.start_ts = get_number(j, "start_ts");
  r.finish_ts = get_number(j, "finish_ts");
  if (r.start_ts < r.arrival_ts) fail("start_ts", "start_ts before arrival_ts");
  if (r.finish_ts < r.start_ts) fail("finish_ts", "finish_ts before start_ts");
  r.ok = get_bool(j, "ok");
  if (auto it = j.find("correct"); it != j.end() && !it->is_null()) r.correct = get_bool(j, "correct");
  r.cost_units = get_number(j, "cost_units");
  check_nonneg(r.cost_units, "cost_units");
  return r;
}

AdaptationEvent decode_adaptation(const json& j) {
  AdaptationEvent e;
  e.event_id = get_string(j, "event_id");
  e.p_base = get_number(j, "p_base");
  check_positive(e.p_base, "p_base");
  e.p_post = get_number(j, "p_post");
  check_positive(e.p_post, "p_post");
  e.t_adapt_s = get_number(j, "t_adapt_s");
  check_positive(e.t_adapt_s, "t_adapt_s");
  try {
    e.polarity = parse_polarity(get_string(j, "polarity"));
  } catch (const ArgumentError& ex) {
    fail("polarity", ex.what());
  }
  return e;
}

template <class T>
struct Lined {
  T value;
  std::size_t line;
};

class Loader {
 public:
  explicit Loader(Strictness strictness) : strict_(strictness == Strictness::strict) {}

  LoadResult run(std::istream& in) {
    std::string text;
    std::size_t line_no = 0;
    bool seen_record = false;
    while (std::getline(in, text)) {
      ++line_no;
      if (!text.empty() && text.back() == '\r') text.pop_back();
      if (text.find_first_not_of(" \t") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(text);
      } catch (const json::parse_error& e) {
        throw ParseError(line_no, e.what());
      }
      try {
        handle(j, line_no, seen_record);
      } catch (const RecordError& e) {
        reject(e.field, e.message, line_no);
      }
      seen_record = true;
    }
    return finish();
  }

 private:
  void warn(std::string message) {
    result_.warnings.push_back(std::move(message));
    ++result_.warning_count;
  }

  void reject(const std::string& field, const std::string& message, std::size_t line) {
    std::string full = message + " at line " + std::to_string(line);
    if (strict_) throw ValidationError(field, line, full);
    warn("dropped record: " + full);
  }

  void handle(const json& j, std::size_t line, bool seen_record) {
    if (!j.is_object()) fail("kind", "record is not a JSON object");
    const std::string kind = get_string(j, "kind");
    auto fields = known_fields().find(kind);
    if (fields == known_fields().end()) fail("kind", "unknown kind '" + kind + "'");
    for (const auto& [key, _] : j.items()) {
      if (fields->second.count(key) == 0) {
        if (strict_) fail(key, "unknown field '" + key + "'");
        warn("ignored unknown field '" + key + "' at line " + std::to_string(line));
      }
    }
    if (kind == "meta") {
      if (seen_record) fail("kind", "meta record must be the first line");
      if (auto it = j.find("epoch"); it != j.end()) {
        if (!it->is_string()) fail("epoch", "epoch must be a string");
        result_.trace.epoch = it->get<std::string>();
      }
      if (auto it = j.find("node_ids"); it != j.end()) {
        if (!it->is_array()) fail("node_ids", "node_ids must be an array");
        std::vector<std::string> ids;
        std::unordered_set<std::string> seen;
        for (const auto& id : *it) {
          if (!id.is_string()) fail("node_ids", "node_ids entries must be strings");
          if (!seen.insert(id.get<std::string>()).second) fail("node_ids", "duplicate node id");
          ids.push_back(id.get<std::string>());
        }
        declared_ids_ = std::move(ids);
      }
    } else if (kind == "node") {
      nodes_.push_back({decode_node(j), line});
      note_id(nodes_.back().value.node_id);
    } else if (kind == "net") {
      nets_.push_back({decode_net(j), line});
      note_id(nets_.back().value.src);
      note_id(nets_.back().value.dst);
    } else if (kind == "request") {
      requests_.push_back({decode_request(j), line});
    } else {
      adaptations_.push_back({decode_adaptation(j), line});
    }
  }

  void note_id(const std::string& id) {
    if (seen_ids_.insert(id).second) appearance_.push_back(id);
  }

  LoadResult finish() {
    Trace& t = result_.trace;
    if (declared_ids_) {
      t.node_ids = *declared_ids_;
      std::unordered_set<std::string> known(t.node_ids.begin(), t.node_ids.end());
      auto unknown = [&](const std::string& id) { return known.count(id) == 0; };
      std::erase_if(nodes_, [&](const auto& r) {
        if (!unknown(r.value.node_id)) return false;
        reject("node_id", "node_id '" + r.value.node_id + "' not in node_ids", r.line);
        return true;
      });
      std::erase_if(nets_, [&](const auto& r) {
        const std::string& bad = unknown(r.value.src) ? r.value.src : r.value.dst;
        if (!unknown(bad)) return false;
        reject(unknown(r.value.src) ? "src" : "dst", "node '" + bad + "' not in node_ids", r.line);
        return true;
      });
    } else {
      t.node_ids = appearance_;
    }

    auto by_ts = [](const auto& a, const auto& b) { return a.value.timestamp < b.value.timestamp; };
    std::stable_sort(nodes_.begin(), nodes_.end(), by_ts);
    std::stable_sort(nets_.begin(), nets_.end(), by_ts);
    std::stable_sort(requests_.begin(), requests_.end(),
                     [](const auto& a, const auto& b) { return a.value.arrival_ts < b.value.arrival_ts; });

    std::unordered_map<std::string, double> last_ts;
    for (const auto& r : nodes_) {
      const NodeSample& s = r.value;
      auto it = last_ts.find(s.node_id);
      if (it != last_ts.end()) {
        if (!(s.timestamp > it->second)) {
          reject("timestamp", "timestamp not strictly increasing for node '" + s.node_id + "'", r.line);
          continue;
        }
        if (s.busy_s > s.timestamp - it->second + kBusyTolerance) {
          reject("busy_s", "busy_s exceeds inter-sample gap", r.line);
          continue;
        }
      }
      last_ts[s.node_id] = s.timestamp;
      t.node_samples.push_back(s);
    }
    for (auto& r : nets_) t.net_samples.push_back(std::move(r.value));
    for (auto& r : requests_) t.requests.push_back(std::move(r.value));
    for (auto& r : adaptations_) t.adaptations.push_back(std::move(r.value));
    return std::move(result_);
  }

  bool strict_;
  LoadResult result_;
  std::optional<std::vector<std::string>> declared_ids_;
  std::vector<std::string> appearance_;
  std::unordered_set<std::string> seen_ids_;
  std::vector<Lined<NodeSample>> nodes_;
  std::vector<Lined<NetSample>> nets_;
  std::vector<Lined<RequestRecord>> requests_;
  std::vector<Lined<AdaptationEvent>> adaptations_;
};

}  // namespace

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::cloud:
      return "cloud";
    case Tier::edge:
      return "edge";
    case Tier::iot:
      return "iot";
  }
  return "edge";
}

std::string_view to_string(Polarity p) {
  return p == Polarity::higher_better ? "higher_better" : "lower_better";
}

Tier parse_tier(std::string_view s) {
  if (s == "cloud") return Tier::cloud;
  if (s == "edge") return Tier::edge;
  if (s == "iot") return Tier::iot;
  throw ArgumentError("unknown tier '" + std::string(s) + "'");
}

Polarity parse_polarity(std::string_view s) {
  if (s == "higher_better") return Polarity::higher_better;
  if (s == "lower_better") return Polarity::lower_better;
  throw ArgumentError("unknown polarity '" + std::string(s) + "'");
}

LoadResult load_trace(std::istream& source, Strictness strictness) {
  return Loader(strictness).run(source);
}

LoadResult load_trace_file(const std::string& path, Strictness strictness) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace file '" + path + "'");
  return load_trace(in, strictness);
}

void serialize_trace(const Trace& trace, std::ostream& out) {
  ordered_json meta;
  meta["kind"] = "meta";
  meta["epoch"] = trace.epoch;
  meta["node_ids"] = trace.node_ids;
  out << meta.dump() << '\n';
  for (const auto& s : trace.node_samples) {
    ordered_json j;
    j["kind"] = "node";
    j["node_id"] = s.node_id;
    j["timestamp"] = s.timestamp;
    j["tier"] = to_string(s.tier);
    j["cpu_util"] = s.cpu_util;
    j["mem_util"] = s.mem_util;
    j["energy_j"] = s.energy_j;
    if (s.temperature_c) j["temperature_c"] = *s.temperature_c;
    j["busy_s"] = s.busy_s;
    out << j.dump() << '\n';
  }
  for (const auto& s : trace.net_samples) {
    ordered_json j;
    j["kind"] = "net";
    j["src"] = s.src;
    j["dst"] = s.dst;
    j["timestamp"] = s.timestamp;
    j["latency_ms"] = s.latency_ms;
    j["capacity_bps"] = s.capacity_bps;
    j["bytes_delivered"] = s.bytes_delivered;
    j["packets_sent"] = s.packets_sent;
    j["packets_delivered"] = s.packets_delivered;
    out << j.dump() << '\n';
  }
  for (const auto& r : trace.requests) {
    ordered_json j;
    j["kind"] = "request";
    j["request_id"] = r.request_id;
    j["arrival_ts"] = r.arrival_ts;
    j["start_ts"] = r.start_ts;
    j["finish_ts"] = r.finish_ts;
    j["ok"] = r.ok;
    if (r.correct) j["correct"] = *r.correct;
    j["cost_units"] = r.cost_units;
    out << j.dump() << '\n';
  }
  for (const auto& e : trace.adaptations) {
    ordered_json j;
    j["kind"] = "adaptation";
    j["event_id"] = e.event_id;
    j["p_base"] = e.p_base;
    j["p_post"] = e.p_post;
    j["t_adapt_s"] = e.t_adapt_s;
    j["polarity"] = to_string(e.polarity);
    out << j.dump() << '\n';
  }
}

std::string serialize_trace(const Trace& trace) {
  std::ostringstream out;
  serialize_trace(trace, out);
  return out.str();
}

ValidationReport validate_trace(const Trace& trace) {
  ValidationReport rep;
  rep.node_count = trace.node_ids.size();
  rep.node_sample_count = trace.node_samples.size();
  rep.net_sample_count = trace.net_samples.size();
  rep.request_count = trace.requests.size();
  rep.adaptation_count = trace.adaptations.size();

  auto add = [&](std::string invariant, std::string record) {
    rep.violations.push_back({std::move(invariant), std::move(record)});
  };
  auto fmt = [](double v) {
    std::ostringstream s;
    s << v;
    return s.str();
  };

  std::unordered_set<std::string> ids;
  for (const auto& id : trace.node_ids) {
    if (!ids.insert(id).second) add("node_ids unique", "node_ids '" + id + "'");
  }

  std::unordered_map<std::string, double> last_ts;
  for (std::size_t i = 0; i < trace.node_samples.size(); ++i) {
    const auto& s = trace.node_samples[i];
    const std::string rec = "node[" + std::to_string(i) + "] " + s.node_id + " @ " + fmt(s.timestamp);
    if (ids.count(s.node_id) == 0) add("node_id in node_ids", rec);
    if (!(s.timestamp >= 0.0)) add("timestamp >= 0", rec);
    if (i > 0 && s.timestamp < trace.node_samples[i - 1].timestamp) add("node samples sorted by timestamp", rec);
    if (!(s.cpu_util >= 0.0 && s.cpu_util <= 1.0)) add("0 <= cpu_util <= 1", rec);
    if (!(s.mem_util >= 0.0 && s.mem_util <= 1.0)) add("0 <= mem_util <= 1", rec);
    if (!(s.energy_j >= 0.0)) add("energy_j >= 0", rec);
    if (!(s.busy_s >= 0.0)) add("busy_s >= 0", rec);
    auto it = last_ts.find(s.node_id);
    if (it != last_ts.end()) {
      if (!(s.timestamp > it->second)) add("timestamps strictly increasing per node_id", rec);
      if (s.busy_s > s.timestamp - it->second + kBusyTolerance) add("busy_s <= inter-sample gap", rec);
    }
    last_ts[s.node_id] = s.timestamp;
  }

  for (std::size_t i = 0; i < trace.net_samples.size(); ++i) {
    const auto& s = trace.net_samples[i];
    const std::string rec = "net[" + std::to_string(i) + "] " + s.src + "->" + s.dst + " @ " + fmt(s.timestamp);
    if (ids.count(s.src) == 0 || ids.count(s.dst) == 0) add("src/dst in node_ids", rec);
    if (s.src == s.dst) add("src != dst", rec);
    if (!(s.timestamp >= 0.0)) add("timestamp >= 0", rec);
    if (i > 0 && s.timestamp < trace.net_samples[i - 1].timestamp) add("net samples sorted by timestamp", rec);
    if (!(s.latency_ms >= 0.0)) add("latency_ms >= 0", rec);
    if (!(s.capacity_bps > 0.0)) add("capacity_bps > 0", rec);
    if (s.packets_delivered > s.packets_sent) add("packets_delivered <= packets_sent", rec);
  }

  for (std::size_t i = 0; i < trace.requests.size(); ++i) {
    const auto& r = trace.requests[i];
    const std::string rec = "request[" + std::to_string(i) + "] " + r.request_id;
    if (!(r.arrival_ts >= 0.0)) add("arrival_ts >= 0", rec);
    if (!(r.arrival_ts <= r.start_ts && r.start_ts <= r.finish_ts)) add("arrival_ts <= start_ts <= finish_ts", rec);
    if (i > 0 && r.arrival_ts < trace.requests[i - 1].arrival_ts) add("requests sorted by arrival_ts", rec);
    if (!(r.cost_units >= 0.0)) add("cost_units >= 0", rec);
  }

  for (std::size_t i = 0; i < trace.adaptations.size(); ++i) {
    const auto& e = trace.adaptations[i];
    const std::string rec = "adaptation[" + std::to_string(i) + "] " + e.event_id;
    if (!(e.p_base > 0.0)) add("p_base > 0", rec);
    if (!(e.p_post > 0.0)) add("p_post > 0", rec);
    if (!(e.t_adapt_s > 0.0)) add("t_adapt_s > 0", rec);
  }
  return rep;
}

Trace window(const Trace& trace, double t_start, double t_end) {
  if (!(t_start < t_end)) throw ArgumentError("window requires t_start < t_end");
  auto inside = [&](double t) { return t >= t_start && t < t_end; };
  Trace out;
  out.epoch = trace.epoch;
  out.node_ids = trace.node_ids;
  out.adaptations = trace.adaptations;
  for (const auto& s : trace.node_samples)
    if (inside(s.timestamp)) out.node_samples.push_back(s);
  for (const auto& s : trace.net_samples)
    if (inside(s.timestamp)) out.net_samples.push_back(s);
  for (const auto& r : trace.requests)
    if (inside(r.arrival_ts)) out.requests.push_back(r);
  return out;
}

std::optional<std::pair<double, double>> time_span(const Trace& trace) {
  std::optional<std::pair<double, double>> span;
  auto extend = [&](double t) {
    if (!span) {
      span = std::pair{t, t};
    } else {
      span->first = std::min(span->first, t);
      span->second = std::max(span->second, t);
    }
  };
  for (const auto& s : trace.node_samples) extend(s.timestamp);
  for (const auto& s : trace.net_samples) extend(s.timestamp);
  for (const auto& r : trace.requests) extend(r.arrival_ts);
  return span;
}

std::vector<NodeSample> samples_of(const Trace& trace, std::string_view node_id) {
  std::vector<NodeSample> out;
  for (const auto& s : trace.node_samples)
    if (s.node_id == node_id) out.push_back(s);
  return out;
}

}  // namespace dccm
