#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "xferbench/backend_eval.hpp"
#include "xferbench/core.hpp"

namespace xferbench {

// ---------------------------------------------------------------------------
// Benchmark engine: runs a file set through a pluggable transfer backend,
// parses per-file transfer logs, and computes the run aggregates.
// ---------------------------------------------------------------------------

struct FileSpec {
  std::string file_name;
  double size_gb = 0;

  friend bool operator==(const FileSpec&, const FileSpec&) = default;
};

struct BenchmarkSpec {
  std::string backend_name;
  std::vector<FileSpec> files;
  int repetitions = 1;
  std::string source_id;
  std::vector<std::string> dest_pool;
  int parallelism = 1; // transfers per run execute serially by default

  friend bool operator==(const BenchmarkSpec&, const BenchmarkSpec&) = default;
};

void validate_spec(const BenchmarkSpec& spec);

struct TransferRequest {
  FileSpec file;
  std::vector<std::string> dest_pool; // candidate destination hosts
  std::string source_id;
};

/// A transfer either yields a complete record or a typed failure, never a
/// partial record.
using TransferOutcome = std::variant<TransferRecord, TransferFailure>;

class TransferBackend {
public:
  virtual ~TransferBackend() = default;

  virtual std::string name() const = 0;
  virtual CriteriaSupport capabilities() const = 0;
  virtual bool available() const { return true; }

  /// Timestamp source used for run windows; simulated backends report
  /// simulated time, real ones the wall clock.
  virtual double now() const = 0;

  /// Largest number of in-flight transfers the backend tolerates. A backend
  /// instance is owned by one run at a time.
  virtual int max_parallelism() const { return 1; }

  virtual TransferOutcome transfer(const TransferRequest& request) = 0;
};

/// Executes files x repetitions through the backend. The run window opens
/// before the first transfer and closes after the last; failed transfers do
/// not contribute records and are listed on the run instead.
/// Throws std::runtime_error("backend unavailable") / ("empty run").
BenchmarkRun run_benchmark(const BenchmarkSpec& spec, TransferBackend& backend);

// ---------------------------------------------------------------------------
// Transfer log: one space-separated line per attempted transfer.
//   FILE <name> SIZE_GB <decimal> DEST <host> SECONDS <decimal>
//   CHECKSUM <ok|fail> TS <epoch-seconds>
// ---------------------------------------------------------------------------

struct TransferLog {
  std::vector<std::string> lines;
};

struct RejectedLine {
  std::size_t line_no = 0; // 1-based
  std::string line;
  std::string reason;

  friend bool operator==(const RejectedLine&, const RejectedLine&) = default;
};

struct ParsedLog {
  std::vector<TransferRecord> records;
  std::vector<RejectedLine> rejects;
};

/// One record per well-formed line; malformed lines land in the rejects list
/// with their line numbers. Throws std::runtime_error("unparseable log") when
/// no line parses.
ParsedLog parse_transfer_log(const TransferLog& log);

std::string transfer_log_line(const TransferRecord& r);
TransferLog serialize_transfer_log(std::span<const TransferRecord> records);

/// Mean per-file speed, total duration, destination-host frequency, and total
/// size. Throws std::invalid_argument on an empty record list.
BenchmarkAggregates compute_aggregates(std::span<const TransferRecord> records);

// ---------------------------------------------------------------------------
// Local backend: copies real bytes between directories, for runs against the
// local filesystem. Grid-protocol clients plug in through TransferBackend.
// ---------------------------------------------------------------------------

class LocalFileBackend : public TransferBackend {
public:
  struct Options {
    std::filesystem::path source_dir;
    std::filesystem::path dest_dir;
    bool create_missing_sources = true; // synthesize source files on demand
    std::uint64_t rng_seed = 1;         // destination host selection
  };

  explicit LocalFileBackend(Options opts);

  std::string name() const override { return "local"; }
  CriteriaSupport capabilities() const override {
    return CriteriaSupport{true, true, true, true};
  }
  double now() const override { return wall_clock_now(); }
  int max_parallelism() const override;
  TransferOutcome transfer(const TransferRequest& request) override;

private:
  Options opts_;
  std::mt19937_64 rng_;
};

void to_json(nlohmann::json& j, const FileSpec& v);
void from_json(const nlohmann::json& j, FileSpec& v);
void to_json(nlohmann::json& j, const BenchmarkSpec& v);
void from_json(const nlohmann::json& j, BenchmarkSpec& v);

} // namespace xferbench
