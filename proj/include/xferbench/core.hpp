#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace xferbench {

// ---------------------------------------------------------------------------
// Score levels
// ---------------------------------------------------------------------------

/// Three-level score shared by the benchmark and every environment segment.
/// Ordered: Ok < Warning < Critical, so "worst" is simply the maximum.
enum class ScoreLevel { Ok = 0, Warning = 1, Critical = 2 };

const char* to_string(ScoreLevel level);
ScoreLevel score_level_from_string(const std::string& s);

/// Maximum under Ok < Warning < Critical. Throws std::invalid_argument on an
/// empty list ("no levels to aggregate").
ScoreLevel worst_of(std::span<const ScoreLevel> levels);
ScoreLevel worst_of(std::initializer_list<ScoreLevel> levels);

/// Wraps `text` in an ANSI color matching the level (green/orange/red) when
/// `enable` is set; returns `text` unchanged otherwise.
std::string colorize(ScoreLevel level, const std::string& text, bool enable);

// ---------------------------------------------------------------------------
// Time
// ---------------------------------------------------------------------------

/// Timestamps are UTC epoch seconds with optional fractional part.
struct TimeWindow {
  double start = 0;
  double end = 0;

  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

/// Validates start <= end.
TimeWindow make_window(double start, double end);

/// Inclusive on both ends: a sample exactly at the window boundary counts.
bool window_contains(const TimeWindow& w, double t);

double wall_clock_now();

// ---------------------------------------------------------------------------
// Transfers
// ---------------------------------------------------------------------------

struct TransferRecord {
  std::string file_name;
  double size_gb = 0;    // GB, decimal (factor 1000 to MB)
  double duration_s = 0; // > 0
  double speed_mb_s = 0; // == size_gb * 1000 / duration_s within 1e-6 relative
  std::string dest_host;
  bool checksum_ok = true;
  double started_at = 0;

  friend bool operator==(const TransferRecord&, const TransferRecord&) = default;
};

/// Builds a record with the speed derived from size and duration, so the
/// consistency invariant holds exactly. Throws on size < 0 or duration <= 0.
TransferRecord make_transfer_record(std::string file_name, double size_gb,
                                    double duration_s, std::string dest_host,
                                    bool checksum_ok, double started_at);

bool speed_consistent(const TransferRecord& r, double rel_tol = 1e-6);

struct TransferFailure {
  std::string file_name;
  std::string reason;
  double at = 0;

  friend bool operator==(const TransferFailure&, const TransferFailure&) = default;
};

struct BenchmarkAggregates {
  double bandwidth_mb_s = 0;  // arithmetic mean of per-file speeds
  double transfer_time_s = 0; // sum of per-file durations
  std::map<std::string, std::int64_t> dest_host_frequency;
  double total_size_gb = 0;
  std::vector<double> per_file_speeds;

  friend bool operator==(const BenchmarkAggregates&, const BenchmarkAggregates&) = default;
};

struct BenchmarkRun {
  std::string run_id;
  TimeWindow window;
  std::vector<TransferRecord> records;
  std::vector<TransferFailure> failures;
  BenchmarkAggregates aggregates;
  std::optional<ScoreLevel> level; // unset until scored

  friend bool operator==(const BenchmarkRun&, const BenchmarkRun&) = default;
};

// ---------------------------------------------------------------------------
// Environment metrics
// ---------------------------------------------------------------------------

enum class MetricUnit { Gb, Gbps, Percent, Count, Load };

const char* to_string(MetricUnit unit);
MetricUnit metric_unit_from_string(const std::string& s);

struct MetricSample {
  double at = 0;
  double value = 0;
  MetricUnit unit = MetricUnit::Count;

  friend bool operator==(const MetricSample&, const MetricSample&) = default;
};

/// Throws std::invalid_argument when a percent value leaves [0, 100] or a
/// load/count value is negative.
void validate_sample(const MetricSample& s);

struct MetricSeries {
  std::string segment_id;
  std::string metric_name;
  std::vector<MetricSample> samples; // strictly increasing timestamps, one unit

  friend bool operator==(const MetricSeries&, const MetricSeries&) = default;
};

/// Checks the series invariants: strictly increasing timestamps, a single
/// unit across samples, and per-sample range validity.
void validate_series(const MetricSeries& s);

enum class SegmentRole { Source, Network, Destination };

const char* to_string(SegmentRole role);
SegmentRole segment_role_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Formatting / JSON
// ---------------------------------------------------------------------------

/// Shortest decimal form that round-trips the exact double value.
std::string format_double(double v);
double parse_double(const std::string& s);

void to_json(nlohmann::json& j, const ScoreLevel& v);
void from_json(const nlohmann::json& j, ScoreLevel& v);
void to_json(nlohmann::json& j, const SegmentRole& v);
void from_json(const nlohmann::json& j, SegmentRole& v);
void to_json(nlohmann::json& j, const MetricUnit& v);
void from_json(const nlohmann::json& j, MetricUnit& v);
void to_json(nlohmann::json& j, const TimeWindow& v);
void from_json(const nlohmann::json& j, TimeWindow& v);
void to_json(nlohmann::json& j, const TransferRecord& v);
void from_json(const nlohmann::json& j, TransferRecord& v);
void to_json(nlohmann::json& j, const TransferFailure& v);
void from_json(const nlohmann::json& j, TransferFailure& v);
void to_json(nlohmann::json& j, const BenchmarkAggregates& v);
void from_json(const nlohmann::json& j, BenchmarkAggregates& v);
void to_json(nlohmann::json& j, const BenchmarkRun& v);
void from_json(const nlohmann::json& j, BenchmarkRun& v);
void to_json(nlohmann::json& j, const MetricSample& v);
void from_json(const nlohmann::json& j, MetricSample& v);
void to_json(nlohmann::json& j, const MetricSeries& v);
void from_json(const nlohmann::json& j, MetricSeries& v);

} // namespace xferbench
