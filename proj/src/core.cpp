#include "xferbench/core.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace xferbench {

const char* to_string(ScoreLevel level) {
  switch (level) {
    case ScoreLevel::Ok: return "OK";
    case ScoreLevel::Warning: return "WARNING";
    case ScoreLevel::Critical: return "CRITICAL";
  }
  throw std::invalid_argument("bad ScoreLevel");
}

ScoreLevel score_level_from_string(const std::string& s) {
  if (s == "OK") return ScoreLevel::Ok;
  if (s == "WARNING") return ScoreLevel::Warning;
  if (s == "CRITICAL") return ScoreLevel::Critical;
  throw std::invalid_argument("unknown score level: " + s);
}

ScoreLevel worst_of(std::span<const ScoreLevel> levels) {
  if (levels.empty())
    throw std::invalid_argument("no levels to aggregate");
  return *std::max_element(levels.begin(), levels.end());
}

ScoreLevel worst_of(std::initializer_list<ScoreLevel> levels) {
  return worst_of(std::span<const ScoreLevel>(levels.begin(), levels.size()));
}

std::string colorize(ScoreLevel level, const std::string& text, bool enable) {
  if (!enable)
    return text;
  const char* code = "";
  switch (level) {
    case ScoreLevel::Ok: code = "\033[32m"; break;       // green
    case ScoreLevel::Warning: code = "\033[38;5;208m"; break; // orange
    case ScoreLevel::Critical: code = "\033[31m"; break; // red
  }
  return std::string(code) + text + "\033[0m";
}

TimeWindow make_window(double start, double end) {
  if (!(start <= end))
    throw std::invalid_argument("window start must not exceed end");
  return TimeWindow{start, end};
}

bool window_contains(const TimeWindow& w, double t) {
  return w.start <= t && t <= w.end;
}

double wall_clock_now() {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  return std::chrono::duration<double>(now).count();
}

TransferRecord make_transfer_record(std::string file_name, double size_gb,
                                    double duration_s, std::string dest_host,
                                    bool checksum_ok, double started_at) {
  if (size_gb < 0)
    throw std::invalid_argument("transfer size must be >= 0 GB");
  if (!(duration_s > 0))
    throw std::invalid_argument("transfer duration must be > 0 s");
  TransferRecord r;
  r.file_name = std::move(file_name);
  r.size_gb = size_gb;
  r.duration_s = duration_s;
  r.speed_mb_s = size_gb * 1000.0 / duration_s; // decimal GB -> MB
  r.dest_host = std::move(dest_host);
  r.checksum_ok = checksum_ok;
  r.started_at = started_at;
  return r;
}

bool speed_consistent(const TransferRecord& r, double rel_tol) {
  const double expected = r.size_gb * 1000.0 / r.duration_s;
  const double scale = std::max(std::abs(expected), std::abs(r.speed_mb_s));
  if (scale == 0.0)
    return true;
  return std::abs(r.speed_mb_s - expected) <= rel_tol * scale;
}

const char* to_string(MetricUnit unit) {
  switch (unit) {
    case MetricUnit::Gb: return "GB";
    case MetricUnit::Gbps: return "GBps";
    case MetricUnit::Percent: return "percent";
    case MetricUnit::Count: return "count";
    case MetricUnit::Load: return "load";
  }
  throw std::invalid_argument("bad MetricUnit");
}

MetricUnit metric_unit_from_string(const std::string& s) {
  if (s == "GB") return MetricUnit::Gb;
  if (s == "GBps") return MetricUnit::Gbps;
  if (s == "percent") return MetricUnit::Percent;
  if (s == "count") return MetricUnit::Count;
  if (s == "load") return MetricUnit::Load;
  throw std::invalid_argument("unknown metric unit: " + s);
}

void validate_sample(const MetricSample& s) {
  if (s.unit == MetricUnit::Percent && (s.value < 0 || s.value > 100))
    throw std::invalid_argument("percent sample out of [0, 100]: " +
                                format_double(s.value));
  if ((s.unit == MetricUnit::Load || s.unit == MetricUnit::Count) && s.value < 0)
    throw std::invalid_argument("load/count sample below zero: " +
                                format_double(s.value));
}

void validate_series(const MetricSeries& s) {
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    validate_sample(s.samples[i]);
    if (i > 0 && !(s.samples[i - 1].at < s.samples[i].at))
      throw std::invalid_argument("series " + s.metric_name +
                                  " timestamps not strictly increasing");
    if (s.samples[i].unit != s.samples.front().unit)
      throw std::invalid_argument("series " + s.metric_name +
                                  " mixes metric units");
  }
}

const char* to_string(SegmentRole role) {
  switch (role) {
    case SegmentRole::Source: return "SOURCE";
    case SegmentRole::Network: return "NETWORK";
    case SegmentRole::Destination: return "DESTINATION";
  }
  throw std::invalid_argument("bad SegmentRole");
}

SegmentRole segment_role_from_string(const std::string& s) {
  if (s == "SOURCE") return SegmentRole::Source;
  if (s == "NETWORK") return SegmentRole::Network;
  if (s == "DESTINATION") return SegmentRole::Destination;
  throw std::invalid_argument("unknown segment role: " + s);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not a decimal number: " + s);
  return v;
}

// --- JSON ------------------------------------------------------------------

using nlohmann::json;

void to_json(json& j, const ScoreLevel& v) { j = to_string(v); }
void from_json(const json& j, ScoreLevel& v) {
  v = score_level_from_string(j.get<std::string>());
}

void to_json(json& j, const SegmentRole& v) { j = to_string(v); }
void from_json(const json& j, SegmentRole& v) {
  v = segment_role_from_string(j.get<std::string>());
}

void to_json(json& j, const MetricUnit& v) { j = to_string(v); }
void from_json(const json& j, MetricUnit& v) {
  v = metric_unit_from_string(j.get<std::string>());
}

void to_json(json& j, const TimeWindow& v) {
  j = json{{"start", v.start}, {"end", v.end}};
}
void from_json(const json& j, TimeWindow& v) {
  j.at("start").get_to(v.start);
  j.at("end").get_to(v.end);
}

void to_json(json& j, const TransferRecord& v) {
  j = json{{"file_name", v.file_name}, {"size_gb", v.size_gb},
           {"duration_s", v.duration_s}, {"speed_mb_s", v.speed_mb_s},
           {"dest_host", v.dest_host},  {"checksum_ok", v.checksum_ok},
           {"started_at", v.started_at}};
}
void from_json(const json& j, TransferRecord& v) {
  j.at("file_name").get_to(v.file_name);
  j.at("size_gb").get_to(v.size_gb);
  j.at("duration_s").get_to(v.duration_s);
  j.at("speed_mb_s").get_to(v.speed_mb_s);
  j.at("dest_host").get_to(v.dest_host);
  j.at("checksum_ok").get_to(v.checksum_ok);
  j.at("started_at").get_to(v.started_at);
}

void to_json(json& j, const TransferFailure& v) {
  j = json{{"file_name", v.file_name}, {"reason", v.reason}, {"at", v.at}};
}
void from_json(const json& j, TransferFailure& v) {
  j.at("file_name").get_to(v.file_name);
  j.at("reason").get_to(v.reason);
  j.at("at").get_to(v.at);
}

void to_json(json& j, const BenchmarkAggregates& v) {
  j = json{{"bandwidth_mb_s", v.bandwidth_mb_s},
           {"transfer_time_s", v.transfer_time_s},
           {"dest_host_frequency", v.dest_host_frequency},
           {"total_size_gb", v.total_size_gb},
           {"per_file_speeds", v.per_file_speeds}};
}
void from_json(const json& j, BenchmarkAggregates& v) {
  j.at("bandwidth_mb_s").get_to(v.bandwidth_mb_s);
  j.at("transfer_time_s").get_to(v.transfer_time_s);
  j.at("dest_host_frequency").get_to(v.dest_host_frequency);
  j.at("total_size_gb").get_to(v.total_size_gb);
  j.at("per_file_speeds").get_to(v.per_file_speeds);
}

void to_json(json& j, const BenchmarkRun& v) {
  j = json{{"run_id", v.run_id},   {"window", v.window},
           {"records", v.records}, {"failures", v.failures},
           {"aggregates", v.aggregates}};
  if (v.level)
    j["level"] = *v.level;
  else
    j["level"] = nullptr;
}
void from_json(const json& j, BenchmarkRun& v) {
  j.at("run_id").get_to(v.run_id);
  j.at("window").get_to(v.window);
  j.at("records").get_to(v.records);
  j.at("failures").get_to(v.failures);
  j.at("aggregates").get_to(v.aggregates);
  if (j.contains("level") && !j.at("level").is_null())
    v.level = j.at("level").get<ScoreLevel>();
  else
    v.level.reset();
}

void to_json(json& j, const MetricSample& v) {
  j = json{{"at", v.at}, {"value", v.value}, {"unit", v.unit}};
}
void from_json(const json& j, MetricSample& v) {
  j.at("at").get_to(v.at);
  j.at("value").get_to(v.value);
  j.at("unit").get_to(v.unit);
}

void to_json(json& j, const MetricSeries& v) {
  j = json{{"segment_id", v.segment_id},
           {"metric_name", v.metric_name},
           {"samples", v.samples}};
}
void from_json(const json& j, MetricSeries& v) {
  j.at("segment_id").get_to(v.segment_id);
  j.at("metric_name").get_to(v.metric_name);
  j.at("samples").get_to(v.samples);
}

} // namespace xferbench
