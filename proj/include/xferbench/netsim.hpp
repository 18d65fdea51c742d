#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "xferbench/benchmark.hpp"
#include "xferbench/collectors.hpp"
#include "xferbench/core.hpp"

namespace xferbench {

// ---------------------------------------------------------------------------
// Deterministic simulator of a source -> network-segments -> destination path.
// Acts as a TransferBackend and as a set of Collectors, giving the attribution
// logic a ground truth to be tested against. Throughput only; the bottleneck
// model is multiplicative and order-faithful rather than physically accurate.
// ---------------------------------------------------------------------------

struct PiecewisePoint {
  double from_t = 0;
  double value = 0;

  friend bool operator==(const PiecewisePoint&, const PiecewisePoint&) = default;
};

/// Piecewise-constant function of simulated time. value(t) is the value of
/// the latest breakpoint with from_t <= t; times before the first breakpoint
/// evaluate to the first breakpoint's value. Empty means constant 0.
class PiecewiseConstant {
public:
  PiecewiseConstant() = default;
  explicit PiecewiseConstant(double constant)
      : points_{{0.0, constant}} {}
  explicit PiecewiseConstant(std::vector<PiecewisePoint> points);

  double at(double t) const;
  const std::vector<PiecewisePoint>& points() const { return points_; }

  friend bool operator==(const PiecewiseConstant&, const PiecewiseConstant&) = default;

private:
  std::vector<PiecewisePoint> points_;
};

struct SimSegment {
  std::string segment_id;
  SegmentRole role = SegmentRole::Network;
  PiecewiseConstant utilization_pct; // bounded to [0, 100]

  friend bool operator==(const SimSegment&, const SimSegment&) = default;
};

struct SimHost {
  std::string host;
  PiecewiseConstant cpu_load;
  PiecewiseConstant cpu_utilization_pct;
  PiecewiseConstant disk_utilization_pct;
  PiecewiseConstant mem_available_gb;

  friend bool operator==(const SimHost&, const SimHost&) = default;
};

struct Scenario {
  std::string name;
  double base_rate_mb_s = 100;
  std::vector<SimSegment> segments;
  std::vector<SimHost> dest_hosts;
  double middlebox_penalty = 0; // [0, 1]; 0 = transparent middlebox
  std::uint64_t rng_seed = 1;
  double timeout_s = 300;        // clock advance on a saturated transfer
  double speed_noise_frac = 0;   // per-file gaussian noise, std as rate fraction
  double sample_interval_s = 30; // collector sampling step, simulated seconds
  std::vector<std::string> corrupt_files; // transfers that fail checksum

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

void validate_scenario(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path);

/// Simulated time; advances only via explicit steps, never wall clock.
class SimClock {
public:
  explicit SimClock(double start = 0) : now_(start) {}
  double now() const { return now_; }
  void advance(double dt);

private:
  double now_;
};

/// Bottleneck model:
///   base_rate * min over segments (1 - util(t)/100)
///             * (1 - disk_util_host(t)/100) * (1 - middlebox_penalty)
/// Throws std::invalid_argument for a host not in the scenario.
double effective_rate(const Scenario& s, double t, const std::string& host);

/// Path throughput as a probe sees it: no destination-host disk factor.
double path_rate(const Scenario& s, double t);

/// One simulated transfer. The destination host is drawn uniformly from
/// `dest_pool` when non-empty (each entry must exist in the scenario),
/// otherwise from the scenario's hosts. The rate is frozen at transfer start;
/// a saturated path (rate 0) yields a failure and advances the clock by the
/// scenario timeout. Throws on size_gb <= 0.
TransferOutcome simulate_transfer(const Scenario& s, const FileSpec& file,
                                  SimClock& clock, std::mt19937_64& rng,
                                  const std::vector<std::string>& dest_pool = {});

/// TransferBackend over a scenario: owns the simulated clock and the seeded
/// generator, so identical scenario + seed replays identical runs.
class SimBackend : public TransferBackend {
public:
  explicit SimBackend(Scenario scenario, double start_time = 0);

  std::string name() const override { return "sim:" + scenario_.name; }
  CriteriaSupport capabilities() const override {
    return CriteriaSupport{true, true, true, true};
  }
  double now() const override { return clock_.now(); }
  TransferOutcome transfer(const TransferRequest& request) override;

  const Scenario& scenario() const { return scenario_; }
  SimClock& clock() { return clock_; }

private:
  Scenario scenario_;
  SimClock clock_;
  std::mt19937_64 rng_;
};

/// One collector per scenario segment (utilization metrics) and per
/// destination host (cpu/disk/memory metrics), sampling the scenario's
/// functions every sample_interval_s within the requested window.
std::vector<std::unique_ptr<Collector>> scenario_collectors(const Scenario& s);

void to_json(nlohmann::json& j, const PiecewiseConstant& v);
void from_json(const nlohmann::json& j, PiecewiseConstant& v);
void to_json(nlohmann::json& j, const SimSegment& v);
void from_json(const nlohmann::json& j, SimSegment& v);
void to_json(nlohmann::json& j, const SimHost& v);
void from_json(const nlohmann::json& j, SimHost& v);
void to_json(nlohmann::json& j, const Scenario& v);
void from_json(const nlohmann::json& j, Scenario& v);

} // namespace xferbench
