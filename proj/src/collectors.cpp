#include "xferbench/collectors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <httplib.h>

#include "http_util.hpp"
#include "xferbench/netsim.hpp"
#include "xferbench/stats.hpp"

namespace xferbench {

const std::vector<MetricCatalogEntry>& router_metric_catalog() {
  static const std::vector<MetricCatalogEntry> catalog = {
      {"gb_in", MetricUnit::Gb, "in"},
      {"gb_out", MetricUnit::Gb, "out"},
      {"gbps_in", MetricUnit::Gbps, "in"},
      {"gbps_out", MetricUnit::Gbps, "out"},
      {"utilization_in_pct", MetricUnit::Percent, "in"},
      {"utilization_out_pct", MetricUnit::Percent, "out"},
      {"errors_in", MetricUnit::Count, "in"},
      {"errors_out", MetricUnit::Count, "out"},
      {"buffer_discards", MetricUnit::Count, std::nullopt}, // optional
  };
  return catalog;
}

const std::vector<MetricCatalogEntry>& end_system_metric_catalog() {
  static const std::vector<MetricCatalogEntry> catalog = {
      {"cpu_load", MetricUnit::Load, std::nullopt},
      {"cpu_utilization_pct", MetricUnit::Percent, std::nullopt},
      {"mem_free_gb", MetricUnit::Gb, std::nullopt},
      {"mem_available_gb", MetricUnit::Gb, std::nullopt},
      {"disk_utilization_pct", MetricUnit::Percent, std::nullopt},
  };
  return catalog;
}

std::optional<MetricUnit> catalog_unit(const std::string& metric_name) {
  for (const auto& e : router_metric_catalog())
    if (e.metric_name == metric_name)
      return e.unit;
  for (const auto& e : end_system_metric_catalog())
    if (e.metric_name == metric_name)
      return e.unit;
  return std::nullopt;
}

// --- Statistics --------------------------------------------------------------

SegmentStats compute_segment_stats(std::span<const MetricSeries> series,
                                   SegmentRole role) {
  if (series.empty())
    throw std::invalid_argument("no metrics");

  SegmentStats stats;
  stats.segment_id = series.front().segment_id;
  stats.role = role;

  for (const auto& s : series) {
    if (s.samples.empty())
      throw std::invalid_argument("empty series for metric " + s.metric_name);
    if (s.segment_id != stats.segment_id)
      throw std::invalid_argument("series mixes segments: " + s.segment_id +
                                  " vs " + stats.segment_id);
    validate_series(s);
    if (stats.metrics.count(s.metric_name))
      throw std::invalid_argument("duplicate series for metric " +
                                  s.metric_name);

    std::vector<double> values;
    values.reserve(s.samples.size());
    for (const auto& sample : s.samples)
      values.push_back(sample.value);
    const SampleStats st = sample_stats(values);
    stats.metrics[s.metric_name] = MetricStats{st.mean, st.std, st.min, st.max};
  }
  return stats;
}

SegmentStats reweight_destination_stats(
    const std::map<std::string, SegmentStats>& per_host,
    const std::map<std::string, std::int64_t>& freq) {
  double total = 0;
  for (const auto& [host, count] : freq) {
    if (count < 0)
      throw std::invalid_argument("negative frequency for host " + host);
    total += static_cast<double>(count);
  }
  if (!(total > 0))
    throw std::invalid_argument("destination frequency sums to zero");

  // Hosts with freq = 0 are inert; every weighted host must carry stats.
  std::vector<std::pair<const SegmentStats*, double>> weighted;
  for (const auto& [host, count] : freq) {
    if (count == 0)
      continue;
    const auto it = per_host.find(host);
    if (it == per_host.end())
      throw std::invalid_argument("no stats for destination host " + host);
    weighted.emplace_back(&it->second, static_cast<double>(count) / total);
  }

  SegmentStats combined;
  combined.segment_id = kWeightedDestinationSegment;
  combined.role = SegmentRole::Destination;

  const auto& reference = *weighted.front().first;
  for (const auto& [metric, ref_stats] : reference.metrics) {
    double mean = 0;
    double second_moment = 0;
    double lo = ref_stats.min;
    double hi = ref_stats.max;
    for (const auto& [host_stats, w] : weighted) {
      const auto it = host_stats->metrics.find(metric);
      if (it == host_stats->metrics.end())
        throw std::invalid_argument("host " + host_stats->segment_id +
                                    " lacks metric " + metric);
      const MetricStats& m = it->second;
      mean += w * m.mean;
      second_moment += w * (m.std * m.std + m.mean * m.mean);
      lo = std::min(lo, m.min);
      hi = std::max(hi, m.max);
    }
    const double variance = std::max(0.0, second_moment - mean * mean);
    combined.metrics[metric] = MetricStats{mean, std::sqrt(variance), lo, hi};
  }
  // Metric sets must agree across weighted hosts in both directions.
  for (const auto& [host_stats, w] : weighted) {
    (void)w;
    for (const auto& [metric, m] : host_stats->metrics) {
      (void)m;
      if (!combined.metrics.count(metric))
        throw std::invalid_argument("host " + reference.segment_id +
                                    " lacks metric " + metric);
    }
  }
  return combined;
}

// --- Fixture collector ---------------------------------------------------------

namespace {

std::vector<MetricSeries> sorted_and_checked(std::vector<MetricSeries> series) {
  for (auto& s : series) {
    std::sort(s.samples.begin(), s.samples.end(),
              [](const MetricSample& a, const MetricSample& b) {
                return a.at < b.at;
              });
    validate_series(s);
  }
  return series;
}

} // namespace

FixtureCollector::FixtureCollector(std::string segment_id, SegmentRole role,
                                   std::vector<MetricSeries> series,
                                   std::optional<std::string> dest_host)
    : segment_id_(std::move(segment_id)),
      role_(role),
      series_(sorted_and_checked(std::move(series))),
      dest_host_(std::move(dest_host)) {
  for (auto& s : series_)
    s.segment_id = segment_id_;
}

std::vector<MetricSeries> load_ndjson_samples(
    const std::filesystem::path& path,
    const std::optional<std::string>& segment_filter) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open sample file " + path.string());

  std::map<std::pair<std::string, std::string>, MetricSeries> by_key;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": bad JSON: " + e.what());
    }
    const auto segment = j.at("segment_id").get<std::string>();
    if (segment_filter && segment != *segment_filter)
      continue;
    const auto metric = j.at("metric").get<std::string>();
    MetricSample sample;
    sample.at = j.at("at").get<double>();
    sample.value = j.at("value").get<double>();
    sample.unit = j.contains("unit")
                      ? metric_unit_from_string(j.at("unit").get<std::string>())
                      : catalog_unit(metric).value_or(MetricUnit::Count);
    auto& series = by_key[{segment, metric}];
    series.segment_id = segment;
    series.metric_name = metric;
    series.samples.push_back(sample);
  }

  std::vector<MetricSeries> out;
  out.reserve(by_key.size());
  for (auto& [key, series] : by_key)
    out.push_back(std::move(series));
  return sorted_and_checked(std::move(out));
}

FixtureCollector FixtureCollector::from_ndjson(
    const std::filesystem::path& path, std::string segment_id, SegmentRole role,
    std::optional<std::string> dest_host) {
  auto series = load_ndjson_samples(path, segment_id);
  return FixtureCollector(std::move(segment_id), role, std::move(series),
                          std::move(dest_host));
}

std::vector<std::string> FixtureCollector::catalog() const {
  std::vector<std::string> names;
  names.reserve(series_.size());
  for (const auto& s : series_)
    names.push_back(s.metric_name);
  return names;
}

FetchResult FixtureCollector::fetch_window(const TimeWindow& w) {
  if (offline_reason_)
    return Unavailable{*offline_reason_};
  const int budget = fetches_left_.load();
  if (budget >= 0 && fetches_left_.fetch_sub(1) <= 0)
    return Unavailable{fail_reason_};

  std::vector<MetricSeries> out;
  for (const auto& s : series_) {
    MetricSeries filtered;
    filtered.segment_id = s.segment_id;
    filtered.metric_name = s.metric_name;
    for (const auto& sample : s.samples)
      if (window_contains(w, sample.at))
        filtered.samples.push_back(sample);
    if (!filtered.samples.empty())
      out.push_back(std::move(filtered));
  }
  return out;
}

void FixtureCollector::set_unavailable(std::string reason) {
  offline_reason_ = std::move(reason);
}

void FixtureCollector::fail_after(int n, std::string reason) {
  fail_reason_ = std::move(reason);
  fetches_left_.store(n);
}

// --- HTTP JSON collector -------------------------------------------------------

using detail::split_url;
using detail::UrlParts;

HttpJsonCollector::HttpJsonCollector(HttpCollectorConfig config)
    : config_(std::move(config)) {
  if (config_.metrics.empty())
    throw std::invalid_argument("http_json collector " + config_.segment_id +
                                " maps no metrics");
  split_url(config_.url); // validate eagerly
}

std::vector<std::string> HttpJsonCollector::catalog() const {
  std::vector<std::string> names;
  names.reserve(config_.metrics.size());
  for (const auto& [name, mapping] : config_.metrics)
    names.push_back(name);
  return names;
}

FetchResult HttpJsonCollector::fetch_window(const TimeWindow& w) {
  const UrlParts parts = split_url(config_.url);
  httplib::Client client(parts.base);
  const auto timeout_ms = static_cast<time_t>(config_.timeout_s * 1000);
  client.set_connection_timeout(0, timeout_ms * 1000);
  client.set_read_timeout(0, timeout_ms * 1000);

  const char sep = parts.path.find('?') == std::string::npos ? '?' : '&';
  const std::string target = parts.path + sep + "start=" +
                             format_double(w.start) +
                             "&end=" + format_double(w.end);

  auto res = client.Get(target);
  if (!res)
    return Unavailable{"unreachable: " + httplib::to_string(res.error())};
  if (res->status < 200 || res->status >= 300)
    return Unavailable{"http status " + std::to_string(res->status)};

  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const std::exception& e) {
    return Unavailable{std::string("bad JSON body: ") + e.what()};
  }

  std::vector<MetricSeries> out;
  for (const auto& [metric, mapping] : config_.metrics) {
    nlohmann::json::json_pointer ptr;
    try {
      ptr = nlohmann::json::json_pointer(mapping.pointer);
    } catch (const std::exception&) {
      return Unavailable{"bad JSON pointer for metric " + metric};
    }
    if (!body.contains(ptr))
      return Unavailable{"response lacks pointer " + mapping.pointer};
    const auto& arr = body[ptr];
    if (!arr.is_array())
      return Unavailable{"pointer " + mapping.pointer + " is not an array"};

    const MetricUnit unit = mapping.unit
                                ? *mapping.unit
                                : catalog_unit(metric).value_or(MetricUnit::Count);
    MetricSeries series;
    series.segment_id = config_.segment_id;
    series.metric_name = metric;
    try {
      for (const auto& item : arr) {
        MetricSample sample;
        sample.at = item.at(mapping.at_key).get<double>();
        sample.value = item.at(mapping.value_key).get<double>();
        sample.unit = unit;
        if (window_contains(w, sample.at))
          series.samples.push_back(sample);
      }
      std::sort(series.samples.begin(), series.samples.end(),
                [](const MetricSample& a, const MetricSample& b) {
                  return a.at < b.at;
                });
      validate_series(series);
    } catch (const std::exception& e) {
      return Unavailable{"metric " + metric + ": " + e.what()};
    }
    if (!series.samples.empty())
      out.push_back(std::move(series));
  }
  return out;
}

// --- Configuration -------------------------------------------------------------

std::vector<std::unique_ptr<Collector>> load_collectors(
    const nlohmann::json& config, const std::filesystem::path& base_dir) {
  if (!config.is_array())
    throw std::invalid_argument("collector config must be a JSON array");

  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };

  std::vector<std::unique_ptr<Collector>> collectors;
  for (const auto& entry : config) {
    const auto kind = entry.at("kind").get<std::string>();
    if (kind == "fixture") {
      const auto segment_id = entry.at("segment_id").get<std::string>();
      const auto role = segment_role_from_string(entry.at("role").get<std::string>());
      std::optional<std::string> host;
      if (entry.contains("dest_host"))
        host = entry.at("dest_host").get<std::string>();

      auto series = load_ndjson_samples(resolve(entry.at("path").get<std::string>()),
                                        segment_id);
      if (entry.contains("catalog")) {
        const auto keep = entry.at("catalog").get<std::vector<std::string>>();
        std::erase_if(series, [&](const MetricSeries& s) {
          return std::find(keep.begin(), keep.end(), s.metric_name) == keep.end();
        });
      }
      auto collector = std::make_unique<FixtureCollector>(segment_id, role,
                                                          std::move(series), host);
      if (entry.value("available", true) == false)
        collector->set_unavailable(entry.value("reason", "configured offline"));
      collectors.push_back(std::move(collector));
    } else if (kind == "http_json") {
      HttpCollectorConfig cfg;
      cfg.segment_id = entry.at("segment_id").get<std::string>();
      cfg.role = segment_role_from_string(entry.at("role").get<std::string>());
      cfg.url = entry.at("url").get<std::string>();
      cfg.timeout_s = entry.value("timeout_s", 5.0);
      if (entry.contains("dest_host"))
        cfg.dest_host = entry.at("dest_host").get<std::string>();
      for (const auto& [metric, m] : entry.at("metrics").items()) {
        HttpMetricMapping mapping;
        mapping.pointer = m.at("pointer").get<std::string>();
        mapping.at_key = m.value("at_key", "at");
        mapping.value_key = m.value("value_key", "value");
        if (m.contains("unit"))
          mapping.unit = metric_unit_from_string(m.at("unit").get<std::string>());
        cfg.metrics[metric] = std::move(mapping);
      }
      collectors.push_back(std::make_unique<HttpJsonCollector>(std::move(cfg)));
    } else if (kind == "simulated") {
      const auto scenario =
          load_scenario(resolve(entry.at("scenario").get<std::string>()));
      auto sim_collectors = scenario_collectors(scenario);
      if (entry.contains("segment_id")) {
        const auto wanted = entry.at("segment_id").get<std::string>();
        bool found = false;
        for (auto& c : sim_collectors)
          if (c->segment_id() == wanted) {
            collectors.push_back(std::move(c));
            found = true;
            break;
          }
        if (!found)
          throw std::invalid_argument("scenario has no segment " + wanted);
      } else {
        for (auto& c : sim_collectors)
          collectors.push_back(std::move(c));
      }
    } else {
      throw std::invalid_argument("unknown collector kind: " + kind);
    }
  }
  return collectors;
}

using nlohmann::json;

void to_json(json& j, const MetricStats& v) {
  j = json{{"mean", v.mean}, {"std", v.std}, {"min", v.min}, {"max", v.max}};
}
void from_json(const json& j, MetricStats& v) {
  j.at("mean").get_to(v.mean);
  j.at("std").get_to(v.std);
  j.at("min").get_to(v.min);
  j.at("max").get_to(v.max);
}

void to_json(json& j, const SegmentStats& v) {
  j = json{{"segment_id", v.segment_id},
           {"role", v.role},
           {"metrics", v.metrics}};
  if (v.level)
    j["level"] = *v.level;
  else
    j["level"] = nullptr;
}
void from_json(const json& j, SegmentStats& v) {
  j.at("segment_id").get_to(v.segment_id);
  j.at("role").get_to(v.role);
  j.at("metrics").get_to(v.metrics);
  if (j.contains("level") && !j.at("level").is_null())
    v.level = j.at("level").get<ScoreLevel>();
  else
    v.level.reset();
}

} // namespace xferbench
