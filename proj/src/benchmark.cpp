#include "xferbench/benchmark.hpp"

#include <chrono>
#include <fstream>
#include <future>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace xferbench {

void validate_spec(const BenchmarkSpec& spec) {
  if (spec.files.empty())
    throw std::invalid_argument("benchmark spec has no files");
  if (spec.repetitions < 1)
    throw std::invalid_argument("repetitions must be >= 1");
  if (spec.parallelism < 1)
    throw std::invalid_argument("parallelism must be >= 1");
  for (const auto& f : spec.files)
    if (f.file_name.empty())
      throw std::invalid_argument("file spec with empty name");
}

BenchmarkRun run_benchmark(const BenchmarkSpec& spec, TransferBackend& backend) {
  validate_spec(spec);
  if (!backend.available())
    throw std::runtime_error("backend unavailable");

  std::vector<TransferRequest> tasks;
  tasks.reserve(spec.files.size() * static_cast<std::size_t>(spec.repetitions));
  for (int rep = 0; rep < spec.repetitions; ++rep)
    for (const auto& file : spec.files)
      tasks.push_back(TransferRequest{file, spec.dest_pool, spec.source_id});

  BenchmarkRun run;
  run.window.start = backend.now();

  const int parallelism =
      std::min(spec.parallelism, std::max(1, backend.max_parallelism()));

  std::vector<TransferOutcome> outcomes;
  outcomes.reserve(tasks.size());
  if (parallelism <= 1) {
    for (const auto& task : tasks)
      outcomes.push_back(backend.transfer(task));
  } else {
    // Waves of at most `parallelism` in-flight transfers; outcomes keep task
    // order regardless of completion order.
    for (std::size_t base = 0; base < tasks.size();
         base += static_cast<std::size_t>(parallelism)) {
      const std::size_t count = std::min(
          static_cast<std::size_t>(parallelism), tasks.size() - base);
      std::vector<std::future<TransferOutcome>> wave;
      wave.reserve(count);
      for (std::size_t i = 0; i < count; ++i)
        wave.push_back(std::async(std::launch::async, [&, i] {
          return backend.transfer(tasks[base + i]);
        }));
      for (auto& fut : wave)
        outcomes.push_back(fut.get());
    }
  }

  run.window.end = backend.now();

  for (auto& outcome : outcomes) {
    if (auto* rec = std::get_if<TransferRecord>(&outcome))
      run.records.push_back(std::move(*rec));
    else
      run.failures.push_back(std::move(std::get<TransferFailure>(outcome)));
  }

  if (run.records.empty())
    throw std::runtime_error("empty run: all transfers failed");

  run.aggregates = compute_aggregates(run.records);
  run.run_id = backend.name() + "-" + format_double(run.window.start);
  return run;
}

// --- Transfer log ------------------------------------------------------------

namespace {

bool parse_line(const std::string& line, TransferRecord& out, std::string& reason) {
  std::istringstream in(line);
  std::string kw_file, name, kw_size, size_s, kw_dest, host, kw_secs, secs_s,
      kw_sum, sum_s, kw_ts, ts_s;
  if (!(in >> kw_file >> name >> kw_size >> size_s >> kw_dest >> host >>
        kw_secs >> secs_s >> kw_sum >> sum_s >> kw_ts >> ts_s)) {
    reason = "malformed line";
    return false;
  }
  std::string extra;
  if (in >> extra) {
    reason = "trailing tokens";
    return false;
  }
  if (kw_file != "FILE" || kw_size != "SIZE_GB" || kw_dest != "DEST" ||
      kw_secs != "SECONDS" || kw_sum != "CHECKSUM" || kw_ts != "TS") {
    reason = "unexpected field keywords";
    return false;
  }
  double size_gb = 0, duration_s = 0, ts = 0;
  try {
    size_gb = parse_double(size_s);
    duration_s = parse_double(secs_s);
    ts = parse_double(ts_s);
  } catch (const std::exception&) {
    reason = "non-numeric field";
    return false;
  }
  if (!(size_gb > 0)) {
    reason = "size must be > 0 for a completed transfer";
    return false;
  }
  if (!(duration_s > 0)) {
    reason = "duration must be > 0";
    return false;
  }
  bool checksum_ok = false;
  if (sum_s == "ok")
    checksum_ok = true;
  else if (sum_s == "fail")
    checksum_ok = false;
  else {
    reason = "checksum must be ok or fail";
    return false;
  }
  out = make_transfer_record(name, size_gb, duration_s, host, checksum_ok, ts);
  return true;
}

} // namespace

ParsedLog parse_transfer_log(const TransferLog& log) {
  ParsedLog parsed;
  std::size_t line_no = 0;
  for (const auto& line : log.lines) {
    ++line_no;
    TransferRecord rec;
    std::string reason;
    if (parse_line(line, rec, reason))
      parsed.records.push_back(std::move(rec));
    else
      parsed.rejects.push_back(RejectedLine{line_no, line, reason});
  }
  if (parsed.records.empty())
    throw std::runtime_error("unparseable log");
  return parsed;
}

std::string transfer_log_line(const TransferRecord& r) {
  std::string line;
  line.reserve(96);
  line += "FILE " + r.file_name;
  line += " SIZE_GB " + format_double(r.size_gb);
  line += " DEST " + r.dest_host;
  line += " SECONDS " + format_double(r.duration_s);
  line += " CHECKSUM ";
  line += r.checksum_ok ? "ok" : "fail";
  line += " TS " + format_double(r.started_at);
  return line;
}

TransferLog serialize_transfer_log(std::span<const TransferRecord> records) {
  TransferLog log;
  log.lines.reserve(records.size());
  for (const auto& r : records)
    log.lines.push_back(transfer_log_line(r));
  return log;
}

BenchmarkAggregates compute_aggregates(std::span<const TransferRecord> records) {
  if (records.empty())
    throw std::invalid_argument("no records to aggregate");
  BenchmarkAggregates agg;
  agg.per_file_speeds.reserve(records.size());
  double speed_sum = 0;
  for (const auto& r : records) {
    speed_sum += r.speed_mb_s;
    agg.transfer_time_s += r.duration_s;
    agg.total_size_gb += r.size_gb;
    agg.per_file_speeds.push_back(r.speed_mb_s);
    ++agg.dest_host_frequency[r.dest_host];
  }
  agg.bandwidth_mb_s = speed_sum / static_cast<double>(records.size());
  return agg;
}

// --- Local backend -----------------------------------------------------------

namespace {

std::uint64_t fnv1a(const char* data, std::size_t len, std::uint64_t h) {
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ull;
  }
  return h;
}

constexpr std::uint64_t kFnvSeed = 14695981039346656037ull;

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  std::vector<char> buf(1 << 20);
  std::uint64_t h = kFnvSeed;
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h = fnv1a(buf.data(), static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

} // namespace

LocalFileBackend::LocalFileBackend(Options opts)
    : opts_(std::move(opts)), rng_(opts_.rng_seed) {}

int LocalFileBackend::max_parallelism() const {
  return std::max(1u, std::thread::hardware_concurrency());
}

TransferOutcome LocalFileBackend::transfer(const TransferRequest& request) {
  namespace fs = std::filesystem;
  const double started_at = wall_clock_now();

  if (request.dest_pool.empty())
    return TransferFailure{request.file.file_name, "no destination hosts",
                           started_at};

  std::string host;
  {
    static std::mutex rng_mutex;
    std::lock_guard<std::mutex> lock(rng_mutex);
    std::uniform_int_distribution<std::size_t> pick(0,
                                                    request.dest_pool.size() - 1);
    host = request.dest_pool[pick(rng_)];
  }

  const fs::path src = opts_.source_dir / request.file.file_name;
  const fs::path dst_dir = opts_.dest_dir / host;
  const fs::path dst = dst_dir / request.file.file_name;

  try {
    if (!fs::exists(src)) {
      if (!opts_.create_missing_sources)
        return TransferFailure{request.file.file_name,
                               "source file missing: " + src.string(),
                               started_at};
      fs::create_directories(opts_.source_dir);
      const auto bytes = static_cast<std::uint64_t>(request.file.size_gb * 1e9);
      std::ofstream out(src, std::ios::binary);
      std::mt19937_64 content(
          fnv1a(request.file.file_name.data(), request.file.file_name.size(),
                kFnvSeed));
      std::vector<char> buf(1 << 20);
      std::uint64_t written = 0;
      while (written < bytes) {
        const std::size_t chunk =
            static_cast<std::size_t>(std::min<std::uint64_t>(buf.size(),
                                                             bytes - written));
        for (std::size_t i = 0; i < chunk; ++i)
          buf[i] = static_cast<char>(content());
        out.write(buf.data(), static_cast<std::streamsize>(chunk));
        written += chunk;
      }
      if (!out)
        return TransferFailure{request.file.file_name,
                               "cannot synthesize source file", started_at};
    }

    fs::create_directories(dst_dir);
    const auto t0 = std::chrono::steady_clock::now();
    fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
    const auto t1 = std::chrono::steady_clock::now();
    const double duration =
        std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);

    const bool checksum_ok = hash_file(src) == hash_file(dst);
    const double size_gb = static_cast<double>(fs::file_size(src)) / 1e9;
    return make_transfer_record(request.file.file_name, size_gb, duration, host,
                                checksum_ok, started_at);
  } catch (const std::exception& e) {
    return TransferFailure{request.file.file_name, e.what(), started_at};
  }
}

using nlohmann::json;

void to_json(json& j, const FileSpec& v) {
  j = json{{"file_name", v.file_name}, {"size_gb", v.size_gb}};
}
void from_json(const json& j, FileSpec& v) {
  j.at("file_name").get_to(v.file_name);
  j.at("size_gb").get_to(v.size_gb);
}

void to_json(json& j, const BenchmarkSpec& v) {
  j = json{{"backend_name", v.backend_name}, {"files", v.files},
           {"repetitions", v.repetitions},   {"source_id", v.source_id},
           {"dest_pool", v.dest_pool},       {"parallelism", v.parallelism}};
}
void from_json(const json& j, BenchmarkSpec& v) {
  j.at("backend_name").get_to(v.backend_name);
  j.at("files").get_to(v.files);
  j.at("repetitions").get_to(v.repetitions);
  j.at("source_id").get_to(v.source_id);
  j.at("dest_pool").get_to(v.dest_pool);
  v.parallelism = j.value("parallelism", 1);
}

} // namespace xferbench
