#include "xferbench/backend_eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "xferbench/stats.hpp"

namespace xferbench {

SampleStats sample_stats(std::span<const double> xs) {
  if (xs.empty())
    throw std::invalid_argument("no samples");
  SampleStats st;
  st.n = xs.size();
  st.min = xs.front();
  st.max = xs.front();
  double sum = 0;
  for (double x : xs) {
    sum += x;
    st.min = std::min(st.min, x);
    st.max = std::max(st.max, x);
  }
  st.mean = sum / static_cast<double>(st.n);
  if (st.n > 1) {
    double ss = 0;
    for (double x : xs) {
      const double d = x - st.mean;
      ss += d * d;
    }
    st.std = std::sqrt(ss / static_cast<double>(st.n - 1));
  }
  return st;
}

bool round_one_eligible(const CriteriaSupport& c) {
  return c.stable_speed && c.consistency && c.checksum_verification &&
         c.storage_node_info;
}

VariabilityReport build_variability_report(const std::string& backend_name,
                                           std::span<const BenchmarkRun> runs) {
  if (runs.empty())
    throw std::invalid_argument("no runs for backend " + backend_name);

  std::vector<double> speeds;
  double total_time_s = 0;
  for (const auto& run : runs) {
    speeds.insert(speeds.end(), run.aggregates.per_file_speeds.begin(),
                  run.aggregates.per_file_speeds.end());
    total_time_s += run.aggregates.transfer_time_s;
  }
  if (speeds.empty())
    throw std::invalid_argument("runs for backend " + backend_name +
                                " carry no per-file speeds");

  const SampleStats st = sample_stats(speeds);
  VariabilityReport rep;
  rep.backend_name = backend_name;
  rep.rounds = static_cast<int>(runs.size());
  rep.mean_speed_mb_s = st.mean;
  rep.std_speed_mb_s = st.std;
  if (st.mean > 0)
    rep.coeff_variation = st.std / st.mean;
  rep.total_time_h = total_time_s / 3600.0;
  return rep;
}

std::string compare_variability(std::span<const VariabilityReport> reports) {
  if (reports.size() < 2)
    throw std::invalid_argument("need at least two variability reports");

  const VariabilityReport* best = nullptr;
  double best_cv = 0;
  for (const auto& rep : reports) {
    if (!(rep.mean_speed_mb_s > 0))
      throw std::invalid_argument("backend " + rep.backend_name +
                                  " has non-positive mean speed");
    const double cv = rep.coeff_variation
                          ? *rep.coeff_variation
                          : rep.std_speed_mb_s / rep.mean_speed_mb_s;
    if (!best || cv < best_cv ||
        (cv == best_cv && (rep.total_time_h < best->total_time_h ||
                           (rep.total_time_h == best->total_time_h &&
                            rep.backend_name < best->backend_name)))) {
      best = &rep;
      best_cv = cv;
    }
  }
  return best->backend_name;
}

const std::vector<CriteriaMatrixRow>& reference_criteria_matrix() {
  static const std::vector<CriteriaMatrixRow> rows = {
      {"FTS", {false, false, true, false}},
      {"SRM", {false, true, true, false}},
      {"GFAL", {true, true, true, false}},
      {"Globus", {true, true, true, true}},
      {"XRootD", {true, true, true, true}},
  };
  return rows;
}

std::string render_criteria_table(std::span<const CriteriaMatrixRow> rows) {
  const std::vector<std::string> headers = {
      "Storage Client", "a. Transfer Speed", "b. Consistency",
      "c. Checksum Verification", "d. Storage Node", "Eligible"};

  auto mark = [](bool b) { return b ? std::string("yes") : std::string("no"); };

  std::vector<std::vector<std::string>> cells;
  cells.push_back(headers);
  for (const auto& row : rows) {
    cells.push_back({row.tool, mark(row.criteria.stable_speed),
                     mark(row.criteria.consistency),
                     mark(row.criteria.checksum_verification),
                     mark(row.criteria.storage_node_info),
                     mark(round_one_eligible(row.criteria))});
  }

  std::vector<std::size_t> widths(headers.size(), 0);
  for (const auto& line : cells)
    for (std::size_t i = 0; i < line.size(); ++i)
      widths[i] = std::max(widths[i], line[i].size());

  std::ostringstream out;
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      out << line[i];
      if (i + 1 < line.size())
        out << std::string(widths[i] - line[i].size() + 2, ' ');
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json criteria_matrix_json(std::span<const CriteriaMatrixRow> rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j = row;
    j["eligible"] = round_one_eligible(row.criteria);
    arr.push_back(std::move(j));
  }
  return arr;
}

using nlohmann::json;

void to_json(json& j, const CriteriaSupport& v) {
  j = json{{"stable_speed", v.stable_speed},
           {"consistency", v.consistency},
           {"checksum_verification", v.checksum_verification},
           {"storage_node_info", v.storage_node_info}};
}
void from_json(const json& j, CriteriaSupport& v) {
  j.at("stable_speed").get_to(v.stable_speed);
  j.at("consistency").get_to(v.consistency);
  j.at("checksum_verification").get_to(v.checksum_verification);
  j.at("storage_node_info").get_to(v.storage_node_info);
}

void to_json(json& j, const VariabilityReport& v) {
  j = json{{"backend_name", v.backend_name},
           {"rounds", v.rounds},
           {"mean_speed_mb_s", v.mean_speed_mb_s},
           {"std_speed_mb_s", v.std_speed_mb_s},
           {"total_time_h", v.total_time_h}};
  if (v.coeff_variation)
    j["coeff_variation"] = *v.coeff_variation;
}
void from_json(const json& j, VariabilityReport& v) {
  j.at("backend_name").get_to(v.backend_name);
  j.at("rounds").get_to(v.rounds);
  j.at("mean_speed_mb_s").get_to(v.mean_speed_mb_s);
  j.at("std_speed_mb_s").get_to(v.std_speed_mb_s);
  j.at("total_time_h").get_to(v.total_time_h);
  if (j.contains("coeff_variation"))
    v.coeff_variation = j.at("coeff_variation").get<double>();
  else
    v.coeff_variation.reset();
}

void to_json(json& j, const CriteriaMatrixRow& v) {
  j = json{{"tool", v.tool}, {"criteria", v.criteria}};
}
void from_json(const json& j, CriteriaMatrixRow& v) {
  j.at("tool").get_to(v.tool);
  j.at("criteria").get_to(v.criteria);
}

} // namespace xferbench
