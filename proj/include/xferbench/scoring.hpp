#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xferbench/collectors.hpp"
#include "xferbench/core.hpp"

namespace xferbench {

// ---------------------------------------------------------------------------
// Baseline: normal transfer behavior pooled from runs with a clean (OK)
// environment.
// ---------------------------------------------------------------------------

struct Baseline {
  double mean_speed_mb_s = 0; // > 0
  double std_speed_mb_s = 0;
  std::int64_t sample_count = 0; // pooled per-file speeds behind the baseline
  std::vector<std::string> derived_from; // contributing run ids

  friend bool operator==(const Baseline&, const Baseline&) = default;
};

// ---------------------------------------------------------------------------
// Threshold policy
// ---------------------------------------------------------------------------

enum class ThresholdDirection { Above, Below };

struct MetricThreshold {
  double warn_at = 0;
  double crit_at = 0; // strictly more extreme than warn_at in `direction`
  ThresholdDirection direction = ThresholdDirection::Above;

  friend bool operator==(const MetricThreshold&, const MetricThreshold&) = default;
};

struct BenchmarkThresholds {
  double warn_ratio = 0.8; // OK at or above this fraction of baseline
  double crit_ratio = 0.5; // CRITICAL strictly below

  friend bool operator==(const BenchmarkThresholds&, const BenchmarkThresholds&) = default;
};

/// Absolute-speed mode: scores the bandwidth against fixed MB/s bounds
/// instead of a baseline ratio. Not the default.
struct AbsoluteSpeedThresholds {
  double warn_mb_s = 0;
  double crit_mb_s = 0;

  friend bool operator==(const AbsoluteSpeedThresholds&, const AbsoluteSpeedThresholds&) = default;
};

struct ThresholdPolicy {
  BenchmarkThresholds benchmark;
  std::map<std::string, MetricThreshold> metrics;
  /// Informational metrics (traffic counters and the like) that carry no
  /// threshold; a metric in neither `metrics` nor here is a scoring error.
  std::set<std::string> ignore_metrics;
  /// Level floor applied to a role with no usable measurements; nullopt means
  /// unknown segments are ignored.
  std::optional<ScoreLevel> unmonitored_role_floor = ScoreLevel::Warning;
  std::optional<AbsoluteSpeedThresholds> absolute;

  /// warn 0.8 / crit 0.5 on the benchmark ratio; utilization 70/90,
  /// cpu and disk 80/95, errors warn above 0 and critical above 100.
  static ThresholdPolicy defaults();

  friend bool operator==(const ThresholdPolicy&, const ThresholdPolicy&) = default;
};

void validate_policy(const ThresholdPolicy& pol);
ThresholdPolicy load_policy(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Verdicts
// ---------------------------------------------------------------------------

struct EnvironmentVerdict {
  ScoreLevel source = ScoreLevel::Ok;
  ScoreLevel network = ScoreLevel::Ok;
  ScoreLevel destination = ScoreLevel::Ok;
  ScoreLevel overall = ScoreLevel::Ok; // always worst_of the three

  friend bool operator==(const EnvironmentVerdict&, const EnvironmentVerdict&) = default;
};

enum class Attribution { Nominal, MiddleboxSuspect, EnvSuspect, Inconclusive };

const char* to_string(Attribution a);
Attribution attribution_from_string(const std::string& s);

struct AttributionVerdict {
  Attribution verdict = Attribution::Nominal;
  ScoreLevel benchmark_level = ScoreLevel::Ok;
  EnvironmentVerdict environment;

  friend bool operator==(const AttributionVerdict&, const AttributionVerdict&) = default;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// ratio = bandwidth / baseline mean: OK at ratio >= warn_ratio, WARNING down
/// to crit_ratio, CRITICAL below. In absolute mode the bandwidth is compared
/// against the fixed bounds instead. Throws on a non-positive baseline.
ScoreLevel score_benchmark(const BenchmarkAggregates& agg, const Baseline& base,
                           const ThresholdPolicy& pol);

/// Scores one metric from its window extreme: max for direction=above, min
/// for direction=below.
ScoreLevel score_metric(const std::string& name, const MetricStats& stats,
                        const ThresholdPolicy& pol);

/// worst_of over the segment's scored metrics. A metric missing from the
/// policy (and not ignored) throws, naming the metric.
ScoreLevel score_segment(const SegmentStats& stats, const ThresholdPolicy& pol);

/// Per-role worst_of, then overall worst_of across roles. Roles with no
/// entries take the policy's unmonitored floor (OK when the floor is
/// disabled). Throws when `segments` is empty.
EnvironmentVerdict environment_verdict(
    std::span<const std::pair<SegmentRole, ScoreLevel>> segments,
    const ThresholdPolicy& pol);

/// Table of benchmark level x environment overall:
///   bench OK -> NOMINAL; degraded bench with env OK -> MIDDLEBOX_SUSPECT,
///   with env CRITICAL -> ENV_SUSPECT, with env WARNING -> INCONCLUSIVE.
AttributionVerdict attribute(ScoreLevel bench, const EnvironmentVerdict& env);

struct QualifiedRun {
  BenchmarkRun run;
  ScoreLevel env_overall = ScoreLevel::Ok;
};

/// Pools per-file speeds of the runs whose environment verdict was OK.
/// Throws std::runtime_error("no clean baseline runs") when none qualify.
Baseline derive_baseline(std::span<const QualifiedRun> runs);

Baseline load_baseline(const std::filesystem::path& path);
void save_baseline(const Baseline& base, const std::filesystem::path& path);

void to_json(nlohmann::json& j, const Baseline& v);
void from_json(const nlohmann::json& j, Baseline& v);
void to_json(nlohmann::json& j, const MetricThreshold& v);
void from_json(const nlohmann::json& j, MetricThreshold& v);
void to_json(nlohmann::json& j, const ThresholdPolicy& v);
void from_json(const nlohmann::json& j, ThresholdPolicy& v);
void to_json(nlohmann::json& j, const EnvironmentVerdict& v);
void from_json(const nlohmann::json& j, EnvironmentVerdict& v);
void to_json(nlohmann::json& j, const AttributionVerdict& v);
void from_json(const nlohmann::json& j, AttributionVerdict& v);

} // namespace xferbench
