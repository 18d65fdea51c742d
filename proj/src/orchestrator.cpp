#include "xferbench/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

namespace xferbench {

namespace {

void log_line(const std::function<void(const std::string&)>& log,
              const std::string& msg) {
  if (log)
    log(msg);
  else
    std::cerr << msg << '\n';
}

struct EnvironmentSnapshot {
  std::vector<SegmentStats> segments;
  std::map<std::string, CollectorStatusEntry> statuses;
  std::optional<EnvironmentVerdict> env;
};

std::vector<Collector*> raw_collectors(
    const std::vector<std::unique_ptr<Collector>>& collectors) {
  std::vector<Collector*> raw;
  raw.reserve(collectors.size());
  for (const auto& c : collectors)
    raw.push_back(c.get());
  return raw;
}

/// Queries all collectors over `window` concurrently, computes and scores
/// per-segment stats, reweights destination-host stats by `freq` when given,
/// and folds unavailability floors into the environment verdict.
EnvironmentSnapshot collect_environment(
    const std::vector<Collector*>& collectors, const TimeWindow& window,
    const ThresholdPolicy& policy,
    const std::map<std::string, std::int64_t>* freq) {
  EnvironmentSnapshot snap;

  std::vector<std::future<FetchResult>> futures;
  futures.reserve(collectors.size());
  for (Collector* collector : collectors)
    futures.push_back(std::async(std::launch::async, [collector, &window] {
      return collector->fetch_window(window);
    }));

  std::vector<std::pair<SegmentRole, ScoreLevel>> env_entries;
  std::map<std::string, SegmentStats> per_host; // destination host -> stats
  std::vector<SegmentRole> floored_roles;

  for (std::size_t i = 0; i < collectors.size(); ++i) {
    Collector& collector = *collectors[i];
    FetchResult result = futures[i].get();

    if (const auto* unavailable = std::get_if<Unavailable>(&result)) {
      snap.statuses[collector.segment_id()] =
          CollectorStatusEntry{false, unavailable->reason};
      floored_roles.push_back(collector.role());
      continue;
    }

    const auto& series = std::get<std::vector<MetricSeries>>(result);
    if (series.empty()) {
      // Available but silent; unknown is not OK, so it floors like an outage.
      snap.statuses[collector.segment_id()] =
          CollectorStatusEntry{false, "no samples in window"};
      floored_roles.push_back(collector.role());
      continue;
    }

    SegmentStats stats;
    try {
      stats = compute_segment_stats(series, collector.role());
      stats.level = score_segment(stats, policy);
    } catch (const std::exception& e) {
      snap.statuses[collector.segment_id()] =
          CollectorStatusEntry{false, e.what()};
      floored_roles.push_back(collector.role());
      continue;
    }
    snap.statuses[collector.segment_id()] = CollectorStatusEntry{true, ""};

    const auto host = collector.dest_host();
    if (host && collector.role() == SegmentRole::Destination)
      per_host[*host] = stats;
    else
      env_entries.emplace_back(collector.role(), *stats.level);
    snap.segments.push_back(std::move(stats));
  }

  // Destination end-systems: reweight by destination-host frequency when a
  // run provides one; otherwise each host counts on its own.
  bool combined_done = false;
  if (freq && !per_host.empty()) {
    std::map<std::string, std::int64_t> usable;
    std::int64_t total = 0;
    for (const auto& [host, count] : *freq) {
      if (count <= 0)
        continue;
      if (per_host.count(host)) {
        usable[host] = count;
        total += count;
      } else {
        // Transfers landed on a host we could not measure.
        floored_roles.push_back(SegmentRole::Destination);
      }
    }
    if (total > 0) {
      SegmentStats combined = reweight_destination_stats(per_host, usable);
      combined.level = score_segment(combined, policy);
      env_entries.emplace_back(SegmentRole::Destination, *combined.level);
      snap.segments.push_back(std::move(combined));
      combined_done = true;
    }
  }
  if (!combined_done)
    for (const auto& [host, stats] : per_host)
      env_entries.emplace_back(SegmentRole::Destination, *stats.level);

  if (policy.unmonitored_role_floor)
    for (SegmentRole role : floored_roles)
      env_entries.emplace_back(role, *policy.unmonitored_role_floor);

  if (!env_entries.empty())
    snap.env = environment_verdict(env_entries, policy);
  return snap;
}

} // namespace

RunReport run_once(const BenchmarkSpec& spec, TransferBackend& backend,
                   const std::vector<std::unique_ptr<Collector>>& collectors,
                   const Baseline& baseline, const ThresholdPolicy& policy,
                   const RunOptions& options) {
  RunReport report;
  const double attempt_start = backend.now();

  bool bench_ok = true;
  try {
    report.run = run_benchmark(spec, backend);
  } catch (const std::exception& e) {
    bench_ok = false;
    report.run = BenchmarkRun{};
    report.run.run_id = backend.name() + "-failed-" + format_double(attempt_start);
    report.run.window = TimeWindow{attempt_start, backend.now()};
    log_line(options.log, "benchmark failed: " + std::string(e.what()));
  }

  if (bench_ok)
    report.run.level = score_benchmark(report.run.aggregates, baseline, policy);
  if (!options.run_id.empty())
    report.run.run_id = options.run_id;

  const TimeWindow query{report.run.window.start - options.window_padding_s,
                         report.run.window.end + options.window_padding_s};
  const auto* freq = bench_ok ? &report.run.aggregates.dest_host_frequency : nullptr;
  EnvironmentSnapshot snap =
      collect_environment(raw_collectors(collectors), query, policy, freq);
  report.segments = std::move(snap.segments);
  report.collector_statuses = std::move(snap.statuses);
  report.env = snap.env;

  if (bench_ok && report.env)
    report.verdict = attribute(*report.run.level, *report.env);

  report.created_at = options.now ? options.now() : backend.now();

  if (!options.report_dir.empty())
    save_report(report, options.report_dir);
  if (options.exporter) {
    const ExportEnvelope envelope{"run_report", report.created_at,
                                  nlohmann::json(report)};
    const auto delivery = options.exporter->export_batch({&envelope, 1});
    if (!delivery.ok())
      log_line(options.log, "export failed: " + delivery.error);
  }
  return report;
}

std::filesystem::path save_report(const RunReport& report,
                                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto path = dir / (report.run.run_id + ".json");
  const auto tmp = dir / (report.run.run_id + ".json.tmp");
  {
    std::ofstream out(tmp);
    if (!out)
      throw std::runtime_error("cannot write " + tmp.string());
    out << nlohmann::json(report).dump(2) << '\n';
    out.flush();
    if (!out)
      throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path); // atomic publish
  return path;
}

RunReport load_report(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in)
    throw std::runtime_error("cannot open report " + file.string());
  nlohmann::json j;
  in >> j;
  return j.get<RunReport>();
}

std::vector<RunReport> load_reports(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<RunReport> reports;
  reports.reserve(files.size());
  for (const auto& file : files)
    reports.push_back(load_report(file));
  return reports;
}

Baseline derive_baseline_from_reports(std::span<const RunReport> reports) {
  std::vector<QualifiedRun> qualified;
  for (const auto& report : reports) {
    if (!report.env || report.run.records.empty())
      continue;
    qualified.push_back(QualifiedRun{report.run, report.env->overall});
  }
  return derive_baseline(qualified);
}

// --- Monitor -----------------------------------------------------------------

void validate_schedule(const MonitorSchedule& sched) {
  if (sched.interval_s <= 0)
    throw std::invalid_argument("monitor interval must be > 0");
  if (sched.retention < 1)
    throw std::invalid_argument("monitor retention must be >= 1");
}

std::vector<MonitorTick> run_monitor(
    const MonitorSchedule& sched,
    const std::vector<std::unique_ptr<Collector>>& collectors,
    const ThresholdPolicy& policy, const std::atomic<bool>& stop,
    const MonitorOptions& options) {
  validate_schedule(sched);

  std::function<double()> now = options.now;
  if (!now)
    now = wall_clock_now;
  std::function<void(double)> sleep_fn = options.sleep_fn;
  if (!sleep_fn)
    sleep_fn = [](double seconds) {
      std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    };

  // Active subset; an empty filter means every configured collector.
  std::vector<Collector*> active;
  for (const auto& collector : collectors) {
    if (sched.collectors.empty() ||
        std::find(sched.collectors.begin(), sched.collectors.end(),
                  collector->segment_id()) != sched.collectors.end())
      active.push_back(collector.get());
  }
  std::vector<MonitorTick> ticks;

  const double interval = static_cast<double>(sched.interval_s);
  double deadline = now();
  int seq = 0;

  while (!stop.load()) {
    if (options.max_ticks && seq >= *options.max_ticks)
      break;
    const double before = now();
    if (before < deadline) {
      sleep_fn(deadline - before);
      if (stop.load())
        break; // stopped between ticks; no partial work
    }

    MonitorTick tick;
    tick.seq = seq;
    tick.at = now();
    tick.window = TimeWindow{tick.at - interval, tick.at};

    // One fetch per collector per tick; failures are isolated per segment.
    EnvironmentSnapshot snap =
        collect_environment(active, tick.window, policy, nullptr);
    tick.segments = std::move(snap.segments);
    tick.collector_statuses = std::move(snap.statuses);
    tick.env = snap.env;

    if (!options.report_dir.empty()) {
      std::filesystem::create_directories(options.report_dir);
      std::ostringstream name;
      name << "monitor-" << std::setw(6) << std::setfill('0') << tick.seq
           << ".json";
      const auto path = options.report_dir / name.str();
      const auto tmp = options.report_dir / (name.str() + ".tmp");
      std::ofstream out(tmp);
      out << nlohmann::json(tick).dump(2) << '\n';
      out.flush();
      std::filesystem::rename(tmp, path);
      if (tick.seq >= sched.retention) {
        std::ostringstream old;
        old << "monitor-" << std::setw(6) << std::setfill('0')
            << (tick.seq - sched.retention) << ".json";
        std::filesystem::remove(options.report_dir / old.str());
      }
    }

    if (options.exporter && !tick.segments.empty()) {
      std::vector<ExportEnvelope> events;
      events.reserve(tick.segments.size());
      for (const auto& seg : tick.segments)
        events.push_back(ExportEnvelope{"segment_stats", tick.at,
                                        nlohmann::json(seg)});
      const auto delivery = options.exporter->export_batch(events);
      if (!delivery.ok())
        log_line(options.log, "monitor export failed: " + delivery.error);
    }

    if (options.on_tick)
      options.on_tick(tick);
    ticks.push_back(std::move(tick));
    if (ticks.size() > static_cast<std::size_t>(sched.retention))
      ticks.erase(ticks.begin());

    ++seq;
    deadline += interval;
    const double after = now();
    if (after > deadline) {
      // The tick overran its interval; skip the slot we already missed.
      log_line(options.log, "monitor tick " + std::to_string(seq - 1) +
                                " overran the interval; skipping next tick");
      while (deadline < after)
        deadline += interval;
    }
  }
  return ticks;
}

// --- Probe plan ----------------------------------------------------------------

const char* to_string(ProbeKind kind) {
  switch (kind) {
    case ProbeKind::Throughput: return "throughput";
    case ProbeKind::Latency: return "latency";
  }
  throw std::invalid_argument("bad ProbeKind");
}

ProbeKind probe_kind_from_string(const std::string& s) {
  if (s == "throughput") return ProbeKind::Throughput;
  if (s == "latency") return ProbeKind::Latency;
  throw std::invalid_argument("unknown probe kind: " + s);
}

void validate_plan(const ProbePlan& plan) {
  if (plan.repeat_count < 1)
    throw std::invalid_argument("repeat_count must be >= 1");
  if (plan.steps.empty())
    throw std::invalid_argument("probe plan has no steps");
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    if (!std::holds_alternative<TransferStep>(plan.steps[i]))
      continue;
    bool probe_before = false, probe_after = false;
    for (std::size_t j = 0; j < i; ++j)
      if (std::holds_alternative<ProbeStep>(plan.steps[j]))
        probe_before = true;
    for (std::size_t j = i + 1; j < plan.steps.size(); ++j)
      if (std::holds_alternative<ProbeStep>(plan.steps[j]))
        probe_after = true;
    if (!probe_before || !probe_after)
      throw std::invalid_argument(
          "every transfer step needs probe steps before and after it");
  }
}

SimProbeBackend::SimProbeBackend(Scenario scenario, SimClock& clock,
                                 double probe_duration_s,
                                 double nominal_latency_ms)
    : scenario_(std::move(scenario)),
      clock_(&clock),
      probe_duration_s_(probe_duration_s),
      nominal_latency_ms_(nominal_latency_ms) {
  validate_scenario(scenario_);
}

ProbeResult SimProbeBackend::measure(ProbeKind kind) {
  ProbeResult result;
  result.kind = kind;
  result.at = clock_->now();
  if (kind == ProbeKind::Throughput) {
    result.value = path_rate(scenario_, clock_->now());
    result.unit = "MB/s";
  } else {
    result.value = nominal_latency_ms_;
    result.unit = "ms";
  }
  clock_->advance(probe_duration_s_);
  return result;
}

ProbePlanResult run_probe_plan(
    const ProbePlan& plan, ProbeBackend& probes, TransferBackend& backend,
    const std::vector<std::unique_ptr<Collector>>& collectors,
    const Baseline& baseline, const ThresholdPolicy& policy,
    const RunOptions& options) {
  validate_plan(plan);

  ProbePlanResult result;
  for (int cycle = 0; cycle < plan.repeat_count; ++cycle) {
    std::optional<ProbeResult> last_probe;
    std::vector<std::size_t> awaiting_probe_after;

    for (std::size_t step_idx = 0; step_idx < plan.steps.size(); ++step_idx) {
      const PlanStep& step = plan.steps[step_idx];
      if (const auto* probe_step = std::get_if<ProbeStep>(&step)) {
        ProbeResult probe;
        try {
          probe = probes.measure(probe_step->kind);
        } catch (const std::exception& e) {
          probe.kind = probe_step->kind;
          probe.ok = false;
          probe.error = e.what();
          probe.at = backend.now();
          log_line(options.log, "probe failed: " + probe.error);
        }
        for (std::size_t t : awaiting_probe_after)
          result.transfers[t].probe_after = probe;
        awaiting_probe_after.clear();
        last_probe = probe;

        if (options.exporter) {
          const ExportEnvelope envelope{"probe_result", probe.at,
                                        nlohmann::json(probe)};
          const auto delivery = options.exporter->export_batch({&envelope, 1});
          if (!delivery.ok())
            log_line(options.log, "probe export failed: " + delivery.error);
        }
        result.probes.push_back(std::move(probe));
      } else {
        const auto& transfer = std::get<TransferStep>(step);
        RunOptions per_run = options;
        if (!options.run_id.empty())
          per_run.run_id = options.run_id + "-c" + std::to_string(cycle) +
                           "-s" + std::to_string(step_idx);
        LinkedTransfer linked;
        linked.report = run_once(transfer.spec, backend, collectors, baseline,
                                 policy, per_run);
        linked.probe_before = last_probe;
        result.transfers.push_back(std::move(linked));
        awaiting_probe_after.push_back(result.transfers.size() - 1);
      }
    }
  }
  return result;
}

// --- JSON ----------------------------------------------------------------------

using nlohmann::json;

void to_json(json& j, const CollectorStatusEntry& v) {
  if (v.available)
    j = json{{"status", "AVAILABLE"}};
  else
    j = json{{"status", "UNAVAILABLE"}, {"reason", v.reason}};
}
void from_json(const json& j, CollectorStatusEntry& v) {
  v.available = j.at("status").get<std::string>() == "AVAILABLE";
  v.reason = j.value("reason", "");
}

void to_json(json& j, const RunReport& v) {
  j = json{{"run", v.run},
           {"segments", v.segments},
           {"collector_statuses", v.collector_statuses},
           {"created_at", v.created_at}};
  j["env"] = v.env ? json(*v.env) : json(nullptr);
  j["verdict"] = v.verdict ? json(*v.verdict) : json(nullptr);
}
void from_json(const json& j, RunReport& v) {
  j.at("run").get_to(v.run);
  j.at("segments").get_to(v.segments);
  j.at("collector_statuses").get_to(v.collector_statuses);
  j.at("created_at").get_to(v.created_at);
  if (j.contains("env") && !j.at("env").is_null())
    v.env = j.at("env").get<EnvironmentVerdict>();
  else
    v.env.reset();
  if (j.contains("verdict") && !j.at("verdict").is_null())
    v.verdict = j.at("verdict").get<AttributionVerdict>();
  else
    v.verdict.reset();
}

void to_json(json& j, const MonitorTick& v) {
  j = json{{"seq", v.seq},
           {"at", v.at},
           {"window", v.window},
           {"segments", v.segments},
           {"collector_statuses", v.collector_statuses}};
  j["env"] = v.env ? json(*v.env) : json(nullptr);
}
void from_json(const json& j, MonitorTick& v) {
  j.at("seq").get_to(v.seq);
  j.at("at").get_to(v.at);
  j.at("window").get_to(v.window);
  j.at("segments").get_to(v.segments);
  j.at("collector_statuses").get_to(v.collector_statuses);
  if (j.contains("env") && !j.at("env").is_null())
    v.env = j.at("env").get<EnvironmentVerdict>();
  else
    v.env.reset();
}

void to_json(json& j, const ProbeResult& v) {
  j = json{{"kind", to_string(v.kind)}, {"ok", v.ok},     {"value", v.value},
           {"unit", v.unit},            {"at", v.at},     {"error", v.error}};
}
void from_json(const json& j, ProbeResult& v) {
  v.kind = probe_kind_from_string(j.at("kind").get<std::string>());
  j.at("ok").get_to(v.ok);
  j.at("value").get_to(v.value);
  j.at("unit").get_to(v.unit);
  j.at("at").get_to(v.at);
  v.error = j.value("error", "");
}

} // namespace xferbench
