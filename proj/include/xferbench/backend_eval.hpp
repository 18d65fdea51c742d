#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "xferbench/core.hpp"

namespace xferbench {

// ---------------------------------------------------------------------------
// Two-round transfer-tool evaluation: a pass/fail criteria matrix followed by
// a variability comparison of the tools that survive round one.
// ---------------------------------------------------------------------------

struct CriteriaSupport {
  bool stable_speed = false;
  bool consistency = false;
  bool checksum_verification = false;
  bool storage_node_info = false;

  friend bool operator==(const CriteriaSupport&, const CriteriaSupport&) = default;
};

/// Round one passes only when all four criteria hold.
bool round_one_eligible(const CriteriaSupport& c);

struct VariabilityReport {
  std::string backend_name;
  int rounds = 0;            // number of pooled runs
  double mean_speed_mb_s = 0;
  double std_speed_mb_s = 0; // sample std (n-1), 0 for a single observation
  std::optional<double> coeff_variation; // std/mean; absent when mean == 0
  double total_time_h = 0;   // sum of run transfer times, hours

  friend bool operator==(const VariabilityReport&, const VariabilityReport&) = default;
};

/// Pools per-file speeds across all runs of one backend.
/// Throws std::invalid_argument on empty input.
VariabilityReport build_variability_report(const std::string& backend_name,
                                           std::span<const BenchmarkRun> runs);

/// Picks the backend with the lowest coefficient of variation; ties broken by
/// lower total_time_h, then lexicographic name. Requires at least two reports,
/// each with mean > 0.
std::string compare_variability(std::span<const VariabilityReport> reports);

struct CriteriaMatrixRow {
  std::string tool;
  CriteriaSupport criteria;
};

/// The five-tool reference fixture (FTS, SRM, GFAL, Globus, XRootD).
const std::vector<CriteriaMatrixRow>& reference_criteria_matrix();

/// Aligned plain-text rendering of the matrix with an eligibility column.
std::string render_criteria_table(std::span<const CriteriaMatrixRow> rows);

nlohmann::json criteria_matrix_json(std::span<const CriteriaMatrixRow> rows);

void to_json(nlohmann::json& j, const CriteriaSupport& v);
void from_json(const nlohmann::json& j, CriteriaSupport& v);
void to_json(nlohmann::json& j, const VariabilityReport& v);
void from_json(const nlohmann::json& j, VariabilityReport& v);
void to_json(nlohmann::json& j, const CriteriaMatrixRow& v);
void from_json(const nlohmann::json& j, CriteriaMatrixRow& v);

} // namespace xferbench
