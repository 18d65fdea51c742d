#include "xferbench/scoring.hpp"

#include <fstream>
#include <stdexcept>

#include "xferbench/stats.hpp"

namespace xferbench {

ThresholdPolicy ThresholdPolicy::defaults() {
  ThresholdPolicy pol;
  pol.benchmark = BenchmarkThresholds{0.8, 0.5};
  pol.metrics = {
      {"utilization_in_pct", {70, 90, ThresholdDirection::Above}},
      {"utilization_out_pct", {70, 90, ThresholdDirection::Above}},
      {"cpu_utilization_pct", {80, 95, ThresholdDirection::Above}},
      {"disk_utilization_pct", {80, 95, ThresholdDirection::Above}},
      {"errors_in", {0, 100, ThresholdDirection::Above}},
      {"errors_out", {0, 100, ThresholdDirection::Above}},
  };
  pol.ignore_metrics = {"gb_in",       "gb_out",           "gbps_in",
                        "gbps_out",    "cpu_load",         "mem_free_gb",
                        "mem_available_gb", "buffer_discards"};
  return pol;
}

void validate_policy(const ThresholdPolicy& pol) {
  if (!(pol.benchmark.warn_ratio > 0 && pol.benchmark.warn_ratio < 1))
    throw std::invalid_argument("warn_ratio must lie in (0, 1)");
  if (!(pol.benchmark.crit_ratio > 0 && pol.benchmark.crit_ratio < 1))
    throw std::invalid_argument("crit_ratio must lie in (0, 1)");
  if (!(pol.benchmark.crit_ratio < pol.benchmark.warn_ratio))
    throw std::invalid_argument("crit_ratio must be below warn_ratio");
  for (const auto& [name, t] : pol.metrics) {
    const bool ok = t.direction == ThresholdDirection::Above
                        ? t.crit_at > t.warn_at
                        : t.crit_at < t.warn_at;
    if (!ok)
      throw std::invalid_argument("critical bound for " + name +
                                  " must be more extreme than warn bound");
  }
  if (pol.absolute && !(pol.absolute->crit_mb_s < pol.absolute->warn_mb_s))
    throw std::invalid_argument("absolute crit_mb_s must be below warn_mb_s");
}

ThresholdPolicy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open policy " + path.string());
  nlohmann::json j;
  in >> j;
  ThresholdPolicy pol = j.get<ThresholdPolicy>();
  validate_policy(pol);
  return pol;
}

ScoreLevel score_benchmark(const BenchmarkAggregates& agg, const Baseline& base,
                           const ThresholdPolicy& pol) {
  if (pol.absolute) {
    if (agg.bandwidth_mb_s < pol.absolute->crit_mb_s)
      return ScoreLevel::Critical;
    if (agg.bandwidth_mb_s < pol.absolute->warn_mb_s)
      return ScoreLevel::Warning;
    return ScoreLevel::Ok;
  }
  if (!(base.mean_speed_mb_s > 0))
    throw std::invalid_argument("baseline mean speed must be > 0");
  const double ratio = agg.bandwidth_mb_s / base.mean_speed_mb_s;
  if (ratio >= pol.benchmark.warn_ratio)
    return ScoreLevel::Ok;
  if (ratio >= pol.benchmark.crit_ratio)
    return ScoreLevel::Warning;
  return ScoreLevel::Critical;
}

ScoreLevel score_metric(const std::string& name, const MetricStats& stats,
                        const ThresholdPolicy& pol) {
  const auto it = pol.metrics.find(name);
  if (it == pol.metrics.end())
    throw std::invalid_argument("no threshold policy for metric " + name);
  const MetricThreshold& t = it->second;
  // Window extremes, not means: transient congestion inside the window can
  // explain a slow transfer even when the mean looks healthy.
  if (t.direction == ThresholdDirection::Above) {
    if (stats.max > t.crit_at)
      return ScoreLevel::Critical;
    if (stats.max > t.warn_at)
      return ScoreLevel::Warning;
    return ScoreLevel::Ok;
  }
  if (stats.min < t.crit_at)
    return ScoreLevel::Critical;
  if (stats.min < t.warn_at)
    return ScoreLevel::Warning;
  return ScoreLevel::Ok;
}

ScoreLevel score_segment(const SegmentStats& stats, const ThresholdPolicy& pol) {
  std::vector<ScoreLevel> levels;
  for (const auto& [name, metric_stats] : stats.metrics) {
    if (pol.ignore_metrics.count(name))
      continue;
    levels.push_back(score_metric(name, metric_stats, pol));
  }
  if (levels.empty())
    return ScoreLevel::Ok; // only informational metrics in the window
  return worst_of(levels);
}

EnvironmentVerdict environment_verdict(
    std::span<const std::pair<SegmentRole, ScoreLevel>> segments,
    const ThresholdPolicy& pol) {
  if (segments.empty())
    throw std::invalid_argument("no segments to judge");

  std::vector<ScoreLevel> per_role[3];
  for (const auto& [role, level] : segments)
    per_role[static_cast<int>(role)].push_back(level);

  const ScoreLevel floor =
      pol.unmonitored_role_floor.value_or(ScoreLevel::Ok);

  auto role_level = [&](SegmentRole role) {
    auto& levels = per_role[static_cast<int>(role)];
    if (levels.empty())
      return floor;
    return worst_of(levels);
  };

  EnvironmentVerdict verdict;
  verdict.source = role_level(SegmentRole::Source);
  verdict.network = role_level(SegmentRole::Network);
  verdict.destination = role_level(SegmentRole::Destination);
  verdict.overall =
      worst_of({verdict.source, verdict.network, verdict.destination});
  return verdict;
}

const char* to_string(Attribution a) {
  switch (a) {
    case Attribution::Nominal: return "NOMINAL";
    case Attribution::MiddleboxSuspect: return "MIDDLEBOX_SUSPECT";
    case Attribution::EnvSuspect: return "ENV_SUSPECT";
    case Attribution::Inconclusive: return "INCONCLUSIVE";
  }
  throw std::invalid_argument("bad Attribution");
}

Attribution attribution_from_string(const std::string& s) {
  if (s == "NOMINAL") return Attribution::Nominal;
  if (s == "MIDDLEBOX_SUSPECT") return Attribution::MiddleboxSuspect;
  if (s == "ENV_SUSPECT") return Attribution::EnvSuspect;
  if (s == "INCONCLUSIVE") return Attribution::Inconclusive;
  throw std::invalid_argument("unknown attribution: " + s);
}

AttributionVerdict attribute(ScoreLevel bench, const EnvironmentVerdict& env) {
  AttributionVerdict verdict;
  verdict.benchmark_level = bench;
  verdict.environment = env;
  if (bench == ScoreLevel::Ok)
    verdict.verdict = Attribution::Nominal;
  else if (env.overall == ScoreLevel::Ok)
    verdict.verdict = Attribution::MiddleboxSuspect;
  else if (env.overall == ScoreLevel::Critical)
    verdict.verdict = Attribution::EnvSuspect;
  else
    verdict.verdict = Attribution::Inconclusive;
  return verdict;
}

Baseline derive_baseline(std::span<const QualifiedRun> runs) {
  std::vector<double> speeds;
  Baseline base;
  for (const auto& qr : runs) {
    if (qr.env_overall != ScoreLevel::Ok)
      continue; // only clean-environment runs inform "normal behavior"
    speeds.insert(speeds.end(), qr.run.aggregates.per_file_speeds.begin(),
                  qr.run.aggregates.per_file_speeds.end());
    base.derived_from.push_back(qr.run.run_id);
  }
  if (speeds.empty())
    throw std::runtime_error("no clean baseline runs");
  const SampleStats st = sample_stats(speeds);
  base.mean_speed_mb_s = st.mean;
  base.std_speed_mb_s = st.std;
  base.sample_count = static_cast<std::int64_t>(st.n);
  return base;
}

Baseline load_baseline(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open baseline " + path.string());
  nlohmann::json j;
  in >> j;
  return j.get<Baseline>();
}

void save_baseline(const Baseline& base, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write baseline " + path.string());
  out << nlohmann::json(base).dump(2) << '\n';
}

// --- JSON ----------------------------------------------------------------------

using nlohmann::json;

void to_json(json& j, const Baseline& v) {
  j = json{{"mean_speed_mb_s", v.mean_speed_mb_s},
           {"std_speed_mb_s", v.std_speed_mb_s},
           {"sample_count", v.sample_count},
           {"derived_from", v.derived_from}};
}
void from_json(const json& j, Baseline& v) {
  j.at("mean_speed_mb_s").get_to(v.mean_speed_mb_s);
  j.at("std_speed_mb_s").get_to(v.std_speed_mb_s);
  j.at("sample_count").get_to(v.sample_count);
  j.at("derived_from").get_to(v.derived_from);
}

void to_json(json& j, const MetricThreshold& v) {
  j = json{{"warn_at", v.warn_at},
           {"crit_at", v.crit_at},
           {"direction",
            v.direction == ThresholdDirection::Above ? "above" : "below"}};
}
void from_json(const json& j, MetricThreshold& v) {
  j.at("warn_at").get_to(v.warn_at);
  j.at("crit_at").get_to(v.crit_at);
  const auto dir = j.at("direction").get<std::string>();
  if (dir == "above")
    v.direction = ThresholdDirection::Above;
  else if (dir == "below")
    v.direction = ThresholdDirection::Below;
  else
    throw std::invalid_argument("direction must be above or below");
}

void to_json(json& j, const ThresholdPolicy& v) {
  j = json{{"benchmark",
            {{"warn_ratio", v.benchmark.warn_ratio},
             {"crit_ratio", v.benchmark.crit_ratio}}},
           {"metrics", v.metrics},
           {"ignore_metrics", v.ignore_metrics}};
  if (v.unmonitored_role_floor)
    j["unmonitored_role_floor"] = *v.unmonitored_role_floor;
  else
    j["unmonitored_role_floor"] = "ignore";
  if (v.absolute)
    j["absolute"] = {{"warn_mb_s", v.absolute->warn_mb_s},
                     {"crit_mb_s", v.absolute->crit_mb_s}};
}
void from_json(const json& j, ThresholdPolicy& v) {
  v = ThresholdPolicy::defaults();
  if (j.contains("benchmark")) {
    v.benchmark.warn_ratio = j.at("benchmark").value("warn_ratio", 0.8);
    v.benchmark.crit_ratio = j.at("benchmark").value("crit_ratio", 0.5);
  }
  if (j.contains("metrics"))
    j.at("metrics").get_to(v.metrics);
  if (j.contains("ignore_metrics"))
    j.at("ignore_metrics").get_to(v.ignore_metrics);
  if (j.contains("unmonitored_role_floor")) {
    const auto& floor = j.at("unmonitored_role_floor");
    if (floor.is_string() && floor.get<std::string>() == "ignore")
      v.unmonitored_role_floor.reset();
    else
      v.unmonitored_role_floor = floor.get<ScoreLevel>();
  }
  if (j.contains("absolute")) {
    AbsoluteSpeedThresholds abs;
    abs.warn_mb_s = j.at("absolute").at("warn_mb_s").get<double>();
    abs.crit_mb_s = j.at("absolute").at("crit_mb_s").get<double>();
    v.absolute = abs;
  }
}

void to_json(json& j, const EnvironmentVerdict& v) {
  j = json{{"source", v.source},
           {"network", v.network},
           {"destination", v.destination},
           {"overall", v.overall}};
}
void from_json(const json& j, EnvironmentVerdict& v) {
  j.at("source").get_to(v.source);
  j.at("network").get_to(v.network);
  j.at("destination").get_to(v.destination);
  j.at("overall").get_to(v.overall);
}

void to_json(json& j, const AttributionVerdict& v) {
  j = json{{"verdict", to_string(v.verdict)},
           {"benchmark_level", v.benchmark_level},
           {"environment", v.environment}};
}
void from_json(const json& j, AttributionVerdict& v) {
  v.verdict = attribution_from_string(j.at("verdict").get<std::string>());
  j.at("benchmark_level").get_to(v.benchmark_level);
  j.at("environment").get_to(v.environment);
}

} // namespace xferbench
