#include "xferbench/exporter.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>

#include "http_util.hpp"

namespace xferbench {

std::string envelope_to_line(const ExportEnvelope& e) {
  return nlohmann::json(e).dump();
}

ExportEnvelope envelope_from_line(const std::string& line) {
  return nlohmann::json::parse(line).get<ExportEnvelope>();
}

std::vector<ExportEnvelope> read_ndjson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  std::vector<ExportEnvelope> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    events.push_back(envelope_from_line(line));
  }
  return events;
}

Exporter::Exporter(ExportSink sink, std::function<void(double)> sleep_fn)
    : sink_(std::move(sink)), sleep_fn_(std::move(sleep_fn)) {
  if (!sleep_fn_)
    sleep_fn_ = [](double seconds) {
      std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    };
}

DeliveryResult Exporter::export_batch(std::span<const ExportEnvelope> events) {
  if (events.empty())
    throw std::invalid_argument("no events to export");

  std::lock_guard<std::mutex> lock(mutex_);
  DeliveryResult result;
  const std::size_t batch = std::max<std::size_t>(1, sink_.batch_size);

  for (std::size_t base = 0; base < events.size(); base += batch) {
    const std::size_t count = std::min(batch, events.size() - base);
    const auto chunk = events.subspan(base, count);
    std::string error;
    if (deliver_chunk(chunk, error)) {
      result.delivered += count;
      continue;
    }
    // Undelivered events (this chunk and everything after) are preserved.
    const auto rest = events.subspan(base);
    dead_letter(rest);
    result.dead_lettered = rest.size();
    result.error = error;
    break;
  }
  return result;
}

bool Exporter::deliver_chunk(std::span<const ExportEnvelope> chunk,
                             std::string& error) {
  std::string body;
  for (const auto& e : chunk) {
    body += envelope_to_line(e);
    body += '\n';
  }

  if (sink_.kind == SinkKind::File) {
    std::ofstream out(sink_.target, std::ios::app);
    if (!out) {
      error = "cannot open sink file " + sink_.target;
      return false;
    }
    out << body;
    out.flush();
    if (!out) {
      error = "write to sink file failed";
      return false;
    }
    return true;
  }

  // HTTP sink with bounded exponential backoff.
  const detail::UrlParts parts = detail::split_url(sink_.target);
  double backoff = sink_.retry.initial_backoff_s;
  for (int attempt = 1; attempt <= sink_.retry.max_attempts; ++attempt) {
    httplib::Client client(parts.base);
    httplib::Headers headers;
    if (!sink_.auth_token_env.empty()) {
      if (const char* token = std::getenv(sink_.auth_token_env.c_str()))
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    auto res = client.Post(parts.path, headers, body, "application/x-ndjson");
    if (res && res->status >= 200 && res->status < 300)
      return true;
    error = res ? "http status " + std::to_string(res->status)
                : "unreachable: " + httplib::to_string(res.error());
    if (attempt < sink_.retry.max_attempts) {
      sleep_fn_(backoff);
      backoff *= sink_.retry.multiplier;
    }
  }
  return false;
}

void Exporter::dead_letter(std::span<const ExportEnvelope> events) {
  std::ofstream out(sink_.dead_letter_path, std::ios::app);
  for (const auto& e : events)
    out << envelope_to_line(e) << '\n';
}

ExportSink sink_from_json(const nlohmann::json& j) {
  ExportSink sink;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "file")
    sink.kind = SinkKind::File;
  else if (kind == "http")
    sink.kind = SinkKind::Http;
  else
    throw std::invalid_argument("sink kind must be file or http");
  sink.target = j.at("target").get<std::string>();
  sink.batch_size = j.value("batch_size", std::size_t{100});
  if (sink.batch_size < 1)
    throw std::invalid_argument("batch_size must be >= 1");
  sink.auth_token_env = j.value("auth_token_env", std::string{});
  sink.dead_letter_path = j.value("dead_letter_path", std::string{"dead_letter.ndjson"});
  if (j.contains("retry")) {
    const auto& r = j.at("retry");
    sink.retry.max_attempts = r.value("max_attempts", 3);
    sink.retry.initial_backoff_s = r.value("initial_backoff_s", 0.2);
    sink.retry.multiplier = r.value("multiplier", 2.0);
  }
  return sink;
}

using nlohmann::json;

void to_json(json& j, const ExportEnvelope& v) {
  j = json{{"event_type", v.event_type}, {"at", v.at}, {"payload", v.payload}};
}
void from_json(const json& j, ExportEnvelope& v) {
  j.at("event_type").get_to(v.event_type);
  j.at("at").get_to(v.at);
  v.payload = j.at("payload");
}

} // namespace xferbench
