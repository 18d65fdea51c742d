#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "xferbench/core.hpp"

namespace xferbench {

// ---------------------------------------------------------------------------
// NDJSON export to a log-aggregation sink: an append-only file or an HTTP
// endpoint ingesting application/x-ndjson. At-least-once: every accepted
// event lands in the sink or in the dead-letter file.
// ---------------------------------------------------------------------------

enum class SinkKind { File, Http };

struct RetryPolicy {
  int max_attempts = 3;
  double initial_backoff_s = 0.2; // doubles per attempt
  double multiplier = 2.0;
};

struct ExportSink {
  SinkKind kind = SinkKind::File;
  std::string target; // path (file) or URL (http)
  std::size_t batch_size = 100;
  /// Name of the environment variable holding the bearer token; tokens are
  /// never stored in configuration files.
  std::string auth_token_env;
  RetryPolicy retry;
  std::string dead_letter_path = "dead_letter.ndjson";
};

struct ExportEnvelope {
  std::string event_type; // "run_report" | "segment_stats" | "probe_result"
  double at = 0;
  nlohmann::json payload;

  friend bool operator==(const ExportEnvelope&, const ExportEnvelope&) = default;
};

std::string envelope_to_line(const ExportEnvelope& e);
ExportEnvelope envelope_from_line(const std::string& line);

/// Reads an NDJSON file of envelopes (blank lines skipped).
std::vector<ExportEnvelope> read_ndjson(const std::filesystem::path& path);

struct DeliveryResult {
  std::size_t delivered = 0;
  std::size_t dead_lettered = 0;
  std::string error; // empty on success

  bool ok() const { return error.empty(); }
};

/// Delivery is serialized per sink; callers may enqueue from several threads.
class Exporter {
public:
  /// `sleep_fn` injects the backoff wait; the default really sleeps.
  explicit Exporter(ExportSink sink,
                    std::function<void(double)> sleep_fn = {});

  /// Ships the events in batches of at most sink.batch_size. On delivery
  /// failure the remaining events are preserved in the dead-letter file and
  /// the result carries the error. Throws std::invalid_argument on an empty
  /// event list.
  DeliveryResult export_batch(std::span<const ExportEnvelope> events);

  const ExportSink& sink() const { return sink_; }

private:
  bool deliver_chunk(std::span<const ExportEnvelope> chunk, std::string& error);
  void dead_letter(std::span<const ExportEnvelope> events);

  ExportSink sink_;
  std::function<void(double)> sleep_fn_;
  std::mutex mutex_;
};

ExportSink sink_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const ExportEnvelope& v);
void from_json(const nlohmann::json& j, ExportEnvelope& v);

} // namespace xferbench
