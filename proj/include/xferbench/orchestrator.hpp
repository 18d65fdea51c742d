#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "xferbench/benchmark.hpp"
#include "xferbench/collectors.hpp"
#include "xferbench/core.hpp"
#include "xferbench/exporter.hpp"
#include "xferbench/netsim.hpp"
#include "xferbench/scoring.hpp"

namespace xferbench {

// ---------------------------------------------------------------------------
// Run control: benchmark -> window capture -> collector queries -> scoring ->
// attribution -> persistence/export. Also the continuous environment monitor
// and the alternating probe/transfer schedule.
// ---------------------------------------------------------------------------

struct CollectorStatusEntry {
  bool available = true;
  std::string reason; // set when unavailable

  friend bool operator==(const CollectorStatusEntry&, const CollectorStatusEntry&) = default;
};

struct RunReport {
  BenchmarkRun run;
  std::vector<SegmentStats> segments; // per segment, incl. the weighted destination
  std::optional<EnvironmentVerdict> env;
  std::optional<AttributionVerdict> verdict;
  std::map<std::string, CollectorStatusEntry> collector_statuses;
  double created_at = 0;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

struct RunOptions {
  /// Extra seconds queried on both sides of the run window; 0 keeps the
  /// collector window exactly equal to the run window.
  double window_padding_s = 0;
  std::string run_id;               // override; default comes from the run
  std::filesystem::path report_dir; // empty: no persistence
  Exporter* exporter = nullptr;     // optional
  std::function<double()> now;      // created_at source; default backend time
  std::function<void(const std::string&)> log; // default stderr
};

/// One full cycle. Collector queries use exactly the run's window (plus the
/// configured padding) and run concurrently; the report is persisted and
/// exported before returning. A failed benchmark yields a report with an
/// empty run and no verdict, with collector statuses still gathered.
RunReport run_once(const BenchmarkSpec& spec, TransferBackend& backend,
                   const std::vector<std::unique_ptr<Collector>>& collectors,
                   const Baseline& baseline, const ThresholdPolicy& policy,
                   const RunOptions& options = {});

/// Atomic persistence: writes <run_id>.json via a temp file and rename, so a
/// report file is either absent or complete.
std::filesystem::path save_report(const RunReport& report,
                                  const std::filesystem::path& dir);
RunReport load_report(const std::filesystem::path& file);
std::vector<RunReport> load_reports(const std::filesystem::path& dir);

/// Baseline from stored reports: admits runs whose environment verdict was OK.
Baseline derive_baseline_from_reports(std::span<const RunReport> reports);

// ---------------------------------------------------------------------------
// Continuous environment monitor
// ---------------------------------------------------------------------------

struct MonitorSchedule {
  int interval_s = 60;
  std::vector<std::string> collectors; // segment_id filter; empty = all
  int retention = 100;                 // max stored windows
};

void validate_schedule(const MonitorSchedule& sched);

struct MonitorTick {
  int seq = 0;
  double at = 0;
  TimeWindow window;
  std::vector<SegmentStats> segments;
  std::map<std::string, CollectorStatusEntry> collector_statuses;
  std::optional<EnvironmentVerdict> env;

  friend bool operator==(const MonitorTick&, const MonitorTick&) = default;
};

struct MonitorOptions {
  std::function<double()> now;          // default wall clock
  std::function<void(double)> sleep_fn; // default real sleep
  std::optional<int> max_ticks;         // default: run until stop
  std::filesystem::path report_dir;     // empty: no persistence
  Exporter* exporter = nullptr;
  std::function<void(const MonitorTick&)> on_tick;
  std::function<void(const std::string&)> log; // default stderr
};

/// At each tick the last interval's window is fetched from every collector,
/// scored, persisted, and exported. A failing collector is marked UNAVAILABLE
/// and the loop continues; ticks never overlap (an overrun skips the next
/// tick and logs it); a stop signal lets the current tick finish.
std::vector<MonitorTick> run_monitor(
    const MonitorSchedule& sched,
    const std::vector<std::unique_ptr<Collector>>& collectors,
    const ThresholdPolicy& policy, const std::atomic<bool>& stop,
    const MonitorOptions& options = {});

// ---------------------------------------------------------------------------
// Alternating probe/transfer schedule
// ---------------------------------------------------------------------------

enum class ProbeKind { Throughput, Latency };

const char* to_string(ProbeKind kind);
ProbeKind probe_kind_from_string(const std::string& s);

struct ProbeStep {
  ProbeKind kind = ProbeKind::Throughput;
};
struct TransferStep {
  BenchmarkSpec spec;
};
using PlanStep = std::variant<ProbeStep, TransferStep>;

struct ProbePlan {
  std::vector<PlanStep> steps;
  int repeat_count = 1;
};

/// Every transfer step must be preceded and followed by a probe step within
/// one cycle; repeat_count >= 1.
void validate_plan(const ProbePlan& plan);

struct ProbeResult {
  ProbeKind kind = ProbeKind::Throughput;
  bool ok = true;
  double value = 0;   // MB/s for throughput, ms for latency
  std::string unit;   // "MB/s" | "ms"
  double at = 0;
  std::string error;  // set when !ok

  friend bool operator==(const ProbeResult&, const ProbeResult&) = default;
};

class ProbeBackend {
public:
  virtual ~ProbeBackend() = default;
  virtual ProbeResult measure(ProbeKind kind) = 0;
};

/// Probes the simulated path: throughput samples the path rate (no
/// destination-host disk factor, as a probe lands on a test node) and each
/// probe advances the shared simulated clock by its duration. Latency is a
/// configured nominal value; the simulator models throughput only.
class SimProbeBackend : public ProbeBackend {
public:
  SimProbeBackend(Scenario scenario, SimClock& clock,
                  double probe_duration_s = 30, double nominal_latency_ms = 10);

  ProbeResult measure(ProbeKind kind) override;

private:
  Scenario scenario_;
  SimClock* clock_;
  double probe_duration_s_;
  double nominal_latency_ms_;
};

struct LinkedTransfer {
  RunReport report;
  std::optional<ProbeResult> probe_before;
  std::optional<ProbeResult> probe_after;
};

struct ProbePlanResult {
  std::vector<ProbeResult> probes;       // execution order, all cycles
  std::vector<LinkedTransfer> transfers; // execution order, all cycles
};

/// Executes the plan strictly in order; a probe failure is recorded and the
/// plan continues.
ProbePlanResult run_probe_plan(
    const ProbePlan& plan, ProbeBackend& probes, TransferBackend& backend,
    const std::vector<std::unique_ptr<Collector>>& collectors,
    const Baseline& baseline, const ThresholdPolicy& policy,
    const RunOptions& options = {});

void to_json(nlohmann::json& j, const CollectorStatusEntry& v);
void from_json(const nlohmann::json& j, CollectorStatusEntry& v);
void to_json(nlohmann::json& j, const RunReport& v);
void from_json(const nlohmann::json& j, RunReport& v);
void to_json(nlohmann::json& j, const MonitorTick& v);
void from_json(const nlohmann::json& j, MonitorTick& v);
void to_json(nlohmann::json& j, const ProbeResult& v);
void from_json(const nlohmann::json& j, ProbeResult& v);

} // namespace xferbench
