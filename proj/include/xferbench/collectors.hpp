#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "xferbench/core.hpp"

namespace xferbench {

// ---------------------------------------------------------------------------
// Metric catalog
// ---------------------------------------------------------------------------

struct MetricCatalogEntry {
  std::string metric_name;
  MetricUnit unit = MetricUnit::Count;
  std::optional<std::string> direction; // "in" / "out" where applicable
};

/// Router / path-segment metrics (traffic volume, rate, utilization, errors,
/// plus the optional buffer_discards counter).
const std::vector<MetricCatalogEntry>& router_metric_catalog();

/// End-system metrics (cpu, memory, disk).
const std::vector<MetricCatalogEntry>& end_system_metric_catalog();

/// Unit lookup across both catalogs; nullopt for unknown metric names.
std::optional<MetricUnit> catalog_unit(const std::string& metric_name);

// ---------------------------------------------------------------------------
// Segment statistics
// ---------------------------------------------------------------------------

struct MetricStats {
  double mean = 0;
  double std = 0;
  double min = 0;
  double max = 0;

  friend bool operator==(const MetricStats&, const MetricStats&) = default;
};

struct SegmentStats {
  std::string segment_id;
  SegmentRole role = SegmentRole::Network;
  std::map<std::string, MetricStats> metrics;
  std::optional<ScoreLevel> level; // set by the scoring module

  friend bool operator==(const SegmentStats&, const SegmentStats&) = default;
};

/// Per-metric mean/std/min/max over the series of one segment; std uses n-1
/// and is 0 for a single sample. Throws std::invalid_argument("no metrics")
/// on an empty list and on empty or inconsistent series.
SegmentStats compute_segment_stats(std::span<const MetricSeries> series,
                                   SegmentRole role);

/// Frequency-weighted combination of per-destination-host stats. Weights are
/// freq_h / sum(freq); combined std follows the law of total variance;
/// min/max are taken over hosts with freq > 0. A host with freq > 0 but no
/// stats raises std::invalid_argument naming the host.
SegmentStats reweight_destination_stats(
    const std::map<std::string, SegmentStats>& per_host,
    const std::map<std::string, std::int64_t>& freq);

inline constexpr const char* kWeightedDestinationSegment = "dest.weighted";

// ---------------------------------------------------------------------------
// Collector interface
// ---------------------------------------------------------------------------

struct Unavailable {
  std::string reason;
};

/// Either the window's series (possibly empty when nothing was sampled) or an
/// explicit unavailability; never a partial silent result.
using FetchResult = std::variant<std::vector<MetricSeries>, Unavailable>;

class Collector {
public:
  virtual ~Collector() = default;

  virtual const std::string& segment_id() const = 0;
  virtual SegmentRole role() const = 0;
  virtual std::vector<std::string> catalog() const = 0;

  /// Destination end-system collectors name the dCache-style host they watch,
  /// which keys the frequency reweighting. Others return nullopt.
  virtual std::optional<std::string> dest_host() const { return std::nullopt; }

  /// Contract: either tolerate concurrent fetch_window calls (true) or
  /// declare serialized access (false) and the caller takes a lock.
  virtual bool concurrent_fetch_safe() const = 0;

  /// Every returned sample lies inside `w` (inclusive); series are per-metric
  /// and only for metrics in the declared catalog.
  virtual FetchResult fetch_window(const TimeWindow& w) = 0;
};

// ---------------------------------------------------------------------------
// Fixture collector: serves canned samples, for tests and replayed captures.
// Sample files are NDJSON, one object per line:
//   {"segment_id": ..., "metric": ..., "at": ..., "value": ..., "unit": ...}
// ---------------------------------------------------------------------------

class FixtureCollector : public Collector {
public:
  FixtureCollector(std::string segment_id, SegmentRole role,
                   std::vector<MetricSeries> series,
                   std::optional<std::string> dest_host = std::nullopt);

  static FixtureCollector from_ndjson(const std::filesystem::path& path,
                                      std::string segment_id, SegmentRole role,
                                      std::optional<std::string> dest_host =
                                          std::nullopt);

  const std::string& segment_id() const override { return segment_id_; }
  SegmentRole role() const override { return role_; }
  std::vector<std::string> catalog() const override;
  std::optional<std::string> dest_host() const override { return dest_host_; }
  bool concurrent_fetch_safe() const override { return true; }
  FetchResult fetch_window(const TimeWindow& w) override;

  /// Marks the collector offline (every fetch returns Unavailable).
  void set_unavailable(std::string reason);

  /// Lets the first `n` fetches succeed, then fails with `reason`; scripts
  /// mid-monitoring outages.
  void fail_after(int n, std::string reason);

private:
  std::string segment_id_;
  SegmentRole role_;
  std::vector<MetricSeries> series_;
  std::optional<std::string> dest_host_;
  std::optional<std::string> offline_reason_;
  std::atomic<int> fetches_left_{-1}; // -1: no scripted failure
  std::string fail_reason_;
};

// ---------------------------------------------------------------------------
// Generic HTTP-JSON collector: GET <url>?start=<s>&end=<e>, then map one JSON
// pointer per metric to an array of {at, value} objects.
// ---------------------------------------------------------------------------

struct HttpMetricMapping {
  std::string pointer; // nlohmann JSON pointer, e.g. "/data/cpu_load"
  std::string at_key = "at";
  std::string value_key = "value";
  std::optional<MetricUnit> unit; // default: catalog unit
};

struct HttpCollectorConfig {
  std::string segment_id;
  SegmentRole role = SegmentRole::Network;
  std::string url; // http://host:port/path
  std::map<std::string, HttpMetricMapping> metrics;
  double timeout_s = 5.0;
  std::optional<std::string> dest_host;
};

class HttpJsonCollector : public Collector {
public:
  explicit HttpJsonCollector(HttpCollectorConfig config);

  const std::string& segment_id() const override { return config_.segment_id; }
  SegmentRole role() const override { return config_.role; }
  std::vector<std::string> catalog() const override;
  std::optional<std::string> dest_host() const override {
    return config_.dest_host;
  }
  bool concurrent_fetch_safe() const override { return true; }
  FetchResult fetch_window(const TimeWindow& w) override;

private:
  HttpCollectorConfig config_;
};

/// Reads NDJSON sample lines, optionally keeping only one segment_id, and
/// groups them into per-metric series sorted by timestamp.
std::vector<MetricSeries> load_ndjson_samples(
    const std::filesystem::path& path,
    const std::optional<std::string>& segment_filter = std::nullopt);

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Builds collectors from a JSON array of
///   {"segment_id", "role", "kind": "fixture" | "simulated" | "http_json",
///    kind-specific settings...}.
/// Relative paths resolve against `base_dir`.
std::vector<std::unique_ptr<Collector>> load_collectors(
    const nlohmann::json& config, const std::filesystem::path& base_dir);

void to_json(nlohmann::json& j, const MetricStats& v);
void from_json(const nlohmann::json& j, MetricStats& v);
void to_json(nlohmann::json& j, const SegmentStats& v);
void from_json(const nlohmann::json& j, SegmentStats& v);

} // namespace xferbench
