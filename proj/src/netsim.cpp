#include "xferbench/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace xferbench {

PiecewiseConstant::PiecewiseConstant(std::vector<PiecewisePoint> points)
    : points_(std::move(points)) {
  std::sort(points_.begin(), points_.end(),
            [](const PiecewisePoint& a, const PiecewisePoint& b) {
              return a.from_t < b.from_t;
            });
  for (std::size_t i = 1; i < points_.size(); ++i)
    if (points_[i - 1].from_t == points_[i].from_t)
      throw std::invalid_argument("duplicate breakpoint at t=" +
                                  format_double(points_[i].from_t));
}

double PiecewiseConstant::at(double t) const {
  if (points_.empty())
    return 0;
  // Latest breakpoint with from_t <= t; earlier times clamp to the first.
  auto it = std::upper_bound(points_.begin(), points_.end(), t,
                             [](double v, const PiecewisePoint& p) {
                               return v < p.from_t;
                             });
  if (it == points_.begin())
    return points_.front().value;
  return std::prev(it)->value;
}

namespace {

void check_bounded(const PiecewiseConstant& f, const std::string& what) {
  for (const auto& p : f.points())
    if (p.value < 0 || p.value > 100)
      throw std::invalid_argument(what + " leaves [0, 100] at t=" +
                                  format_double(p.from_t));
}

void check_nonnegative(const PiecewiseConstant& f, const std::string& what) {
  for (const auto& p : f.points())
    if (p.value < 0)
      throw std::invalid_argument(what + " below zero at t=" +
                                  format_double(p.from_t));
}

} // namespace

void validate_scenario(const Scenario& s) {
  if (!(s.base_rate_mb_s > 0))
    throw std::invalid_argument("base_rate_mb_s must be > 0");
  if (s.middlebox_penalty < 0 || s.middlebox_penalty > 1)
    throw std::invalid_argument("middlebox_penalty must lie in [0, 1]");
  if (!(s.timeout_s > 0))
    throw std::invalid_argument("timeout_s must be > 0");
  if (s.speed_noise_frac < 0)
    throw std::invalid_argument("speed_noise_frac must be >= 0");
  if (!(s.sample_interval_s > 0))
    throw std::invalid_argument("sample_interval_s must be > 0");
  if (s.dest_hosts.empty())
    throw std::invalid_argument("scenario needs at least one destination host");
  for (const auto& seg : s.segments)
    check_bounded(seg.utilization_pct, "utilization of " + seg.segment_id);
  for (const auto& host : s.dest_hosts) {
    check_bounded(host.cpu_utilization_pct, "cpu utilization of " + host.host);
    check_bounded(host.disk_utilization_pct, "disk utilization of " + host.host);
    check_nonnegative(host.cpu_load, "cpu load of " + host.host);
    check_nonnegative(host.mem_available_gb, "available memory of " + host.host);
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open scenario " + path.string());
  nlohmann::json j;
  in >> j;
  Scenario s = j.get<Scenario>();
  validate_scenario(s);
  return s;
}

void SimClock::advance(double dt) {
  if (dt < 0)
    throw std::invalid_argument("clock cannot move backwards");
  now_ += dt;
}

namespace {

const SimHost& find_host(const Scenario& s, const std::string& host) {
  for (const auto& h : s.dest_hosts)
    if (h.host == host)
      return h;
  throw std::invalid_argument("unknown destination host: " + host);
}

} // namespace

double path_rate(const Scenario& s, double t) {
  double factor = 1.0;
  for (const auto& seg : s.segments)
    factor = std::min(factor, 1.0 - seg.utilization_pct.at(t) / 100.0);
  return s.base_rate_mb_s * factor * (1.0 - s.middlebox_penalty);
}

double effective_rate(const Scenario& s, double t, const std::string& host) {
  const SimHost& h = find_host(s, host);
  return path_rate(s, t) * (1.0 - h.disk_utilization_pct.at(t) / 100.0);
}

TransferOutcome simulate_transfer(const Scenario& s, const FileSpec& file,
                                  SimClock& clock, std::mt19937_64& rng,
                                  const std::vector<std::string>& dest_pool) {
  if (!(file.size_gb > 0))
    throw std::invalid_argument("simulated transfer needs size_gb > 0");

  const std::vector<std::string>* pool = &dest_pool;
  std::vector<std::string> scenario_hosts;
  if (dest_pool.empty()) {
    scenario_hosts.reserve(s.dest_hosts.size());
    for (const auto& h : s.dest_hosts)
      scenario_hosts.push_back(h.host);
    pool = &scenario_hosts;
  }
  std::uniform_int_distribution<std::size_t> pick(0, pool->size() - 1);
  const std::string host = (*pool)[pick(rng)];

  const double started_at = clock.now();
  double rate = effective_rate(s, started_at, host); // frozen per file

  if (s.speed_noise_frac > 0 && rate > 0) {
    std::normal_distribution<double> noise(0.0, s.speed_noise_frac * rate);
    rate = std::max(rate + noise(rng), 0.01 * rate);
  }

  if (!(rate > 1e-12)) {
    clock.advance(s.timeout_s);
    return TransferFailure{file.file_name, "path saturated: effective rate 0",
                           started_at};
  }

  const double duration = file.size_gb * 1000.0 / rate;
  clock.advance(duration);
  const bool corrupted =
      std::find(s.corrupt_files.begin(), s.corrupt_files.end(),
                file.file_name) != s.corrupt_files.end();
  return make_transfer_record(file.file_name, file.size_gb, duration, host,
                              !corrupted, started_at);
}

SimBackend::SimBackend(Scenario scenario, double start_time)
    : scenario_(std::move(scenario)), clock_(start_time), rng_(scenario_.rng_seed) {
  validate_scenario(scenario_);
}

TransferOutcome SimBackend::transfer(const TransferRequest& request) {
  return simulate_transfer(scenario_, request.file, clock_, rng_,
                           request.dest_pool);
}

// --- Scenario collectors -----------------------------------------------------

namespace {

std::vector<MetricSample> sample_fn(const PiecewiseConstant& fn,
                                    const TimeWindow& w, double step,
                                    MetricUnit unit) {
  std::vector<MetricSample> samples;
  for (double t = w.start; t <= w.end + 1e-9; t += step) {
    const double at = std::min(t, w.end);
    samples.push_back(MetricSample{at, fn.at(at), unit});
    if (step <= 0)
      break;
  }
  return samples;
}

class SimSegmentCollector : public Collector {
public:
  SimSegmentCollector(SimSegment segment, double step)
      : segment_(std::move(segment)), step_(step) {}

  const std::string& segment_id() const override { return segment_.segment_id; }
  SegmentRole role() const override { return segment_.role; }
  std::vector<std::string> catalog() const override {
    return {"utilization_in_pct", "utilization_out_pct"};
  }
  bool concurrent_fetch_safe() const override { return true; }

  FetchResult fetch_window(const TimeWindow& w) override {
    std::vector<MetricSeries> out;
    for (const auto& metric : catalog()) {
      MetricSeries series;
      series.segment_id = segment_.segment_id;
      series.metric_name = metric;
      series.samples =
          sample_fn(segment_.utilization_pct, w, step_, MetricUnit::Percent);
      out.push_back(std::move(series));
    }
    return out;
  }

private:
  SimSegment segment_;
  double step_;
};

class SimHostCollector : public Collector {
public:
  SimHostCollector(SimHost host, double step)
      : host_(std::move(host)),
        segment_id_("dest.dcache." + host_.host),
        step_(step) {}

  const std::string& segment_id() const override { return segment_id_; }
  SegmentRole role() const override { return SegmentRole::Destination; }
  std::vector<std::string> catalog() const override {
    return {"cpu_load", "cpu_utilization_pct", "disk_utilization_pct",
            "mem_available_gb"};
  }
  std::optional<std::string> dest_host() const override { return host_.host; }
  bool concurrent_fetch_safe() const override { return true; }

  FetchResult fetch_window(const TimeWindow& w) override {
    std::vector<MetricSeries> out;
    out.push_back(make_series("cpu_load", host_.cpu_load, MetricUnit::Load, w));
    out.push_back(make_series("cpu_utilization_pct", host_.cpu_utilization_pct,
                              MetricUnit::Percent, w));
    out.push_back(make_series("disk_utilization_pct", host_.disk_utilization_pct,
                              MetricUnit::Percent, w));
    out.push_back(make_series("mem_available_gb", host_.mem_available_gb,
                              MetricUnit::Gb, w));
    return out;
  }

private:
  MetricSeries make_series(const std::string& metric, const PiecewiseConstant& fn,
                           MetricUnit unit, const TimeWindow& w) const {
    MetricSeries series;
    series.segment_id = segment_id_;
    series.metric_name = metric;
    series.samples = sample_fn(fn, w, step_, unit);
    return series;
  }

  SimHost host_;
  std::string segment_id_;
  double step_;
};

} // namespace

std::vector<std::unique_ptr<Collector>> scenario_collectors(const Scenario& s) {
  validate_scenario(s);
  std::vector<std::unique_ptr<Collector>> out;
  for (const auto& seg : s.segments)
    out.push_back(std::make_unique<SimSegmentCollector>(seg, s.sample_interval_s));
  for (const auto& host : s.dest_hosts)
    out.push_back(std::make_unique<SimHostCollector>(host, s.sample_interval_s));
  return out;
}

// --- JSON ----------------------------------------------------------------------

using nlohmann::json;

void to_json(json& j, const PiecewiseConstant& v) {
  j = json::array();
  for (const auto& p : v.points())
    j.push_back(json{{"from_t", p.from_t}, {"value", p.value}});
}
void from_json(const json& j, PiecewiseConstant& v) {
  if (j.is_number()) { // shorthand: a bare number is a constant function
    v = PiecewiseConstant(j.get<double>());
    return;
  }
  std::vector<PiecewisePoint> points;
  for (const auto& item : j)
    points.push_back(PiecewisePoint{item.at("from_t").get<double>(),
                                    item.at("value").get<double>()});
  v = PiecewiseConstant(std::move(points));
}

void to_json(json& j, const SimSegment& v) {
  j = json{{"segment_id", v.segment_id},
           {"role", v.role},
           {"utilization_pct", v.utilization_pct}};
}
void from_json(const json& j, SimSegment& v) {
  j.at("segment_id").get_to(v.segment_id);
  j.at("role").get_to(v.role);
  if (j.contains("utilization_pct"))
    j.at("utilization_pct").get_to(v.utilization_pct);
  else
    v.utilization_pct = PiecewiseConstant(0.0);
}

void to_json(json& j, const SimHost& v) {
  j = json{{"host", v.host},
           {"cpu_load", v.cpu_load},
           {"cpu_utilization_pct", v.cpu_utilization_pct},
           {"disk_utilization_pct", v.disk_utilization_pct},
           {"mem_available_gb", v.mem_available_gb}};
}
void from_json(const json& j, SimHost& v) {
  j.at("host").get_to(v.host);
  auto get_fn = [&](const char* key, double fallback) {
    return j.contains(key) ? j.at(key).get<PiecewiseConstant>()
                           : PiecewiseConstant(fallback);
  };
  v.cpu_load = get_fn("cpu_load", 0.0);
  v.cpu_utilization_pct = get_fn("cpu_utilization_pct", 0.0);
  v.disk_utilization_pct = get_fn("disk_utilization_pct", 0.0);
  v.mem_available_gb = get_fn("mem_available_gb", 64.0);
}

void to_json(json& j, const Scenario& v) {
  j = json{{"name", v.name},
           {"base_rate_mb_s", v.base_rate_mb_s},
           {"segments", v.segments},
           {"dest_hosts", v.dest_hosts},
           {"middlebox_penalty", v.middlebox_penalty},
           {"rng_seed", v.rng_seed},
           {"timeout_s", v.timeout_s},
           {"speed_noise_frac", v.speed_noise_frac},
           {"sample_interval_s", v.sample_interval_s},
           {"corrupt_files", v.corrupt_files}};
}
void from_json(const json& j, Scenario& v) {
  j.at("name").get_to(v.name);
  j.at("base_rate_mb_s").get_to(v.base_rate_mb_s);
  j.at("segments").get_to(v.segments);
  j.at("dest_hosts").get_to(v.dest_hosts);
  v.middlebox_penalty = j.value("middlebox_penalty", 0.0);
  v.rng_seed = j.value("rng_seed", std::uint64_t{1});
  v.timeout_s = j.value("timeout_s", 300.0);
  v.speed_noise_frac = j.value("speed_noise_frac", 0.0);
  v.sample_interval_s = j.value("sample_interval_s", 30.0);
  v.corrupt_files = j.value("corrupt_files", std::vector<std::string>{});
}

} // namespace xferbench
