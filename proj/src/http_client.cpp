#include "actionmqa/http_client.hpp"

#include "actionmqa/io.hpp"

#include <httplib.h>
#include <fmt/format.h>

#include <cstdlib>
#include <thread>

namespace actionmqa {

namespace {

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string{};
}

bool is_transient(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

HttpClientConfig HttpClientConfig::from_env() {
  HttpClientConfig c;
  c.endpoint = env_or_empty("ACTIONMQA_ENDPOINT");
  c.api_key = env_or_empty("ACTIONMQA_API_KEY");
  c.model = env_or_empty("ACTIONMQA_MODEL");
  return c;
}

HttpClient::HttpClient(HttpClientConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("endpoint '{}' is not an absolute URL", config_.endpoint));
  }
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  scheme_host_port_ = config_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
  if (config_.max_retries < 0) {
    throw Error(ErrorKind::invalid_argument, "max_retries must be >= 0");
  }
}

std::string HttpClient::identity() const {
  return fmt::format("http:{}@{}", config_.model, config_.endpoint);
}

nlohmann::json HttpClient::build_body(const InferenceRequest& request) const {
  auto content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", request.prompt}});
  for (const auto& frame : request.frames) {
    if (frame.path) {
      content.push_back(
          {{"type", "image"}, {"data", httplib::detail::base64_encode(io::read_file(*frame.path))}});
    } else {
      content.push_back({{"type", "frame_timestamp"},
                         {"video_id", frame.video_id},
                         {"timestamp_s", frame.timestamp_s}});
    }
  }
  nlohmann::json body = {
      {"model", config_.model},
      {"messages", {{{"role", "user"}, {"content", std::move(content)}}}},
      {"max_tokens", request.params.max_new_tokens},
      {"temperature", request.params.temperature},
  };
  if (request.params.seed) body["seed"] = *request.params.seed;
  return body;
}

InferenceResponse HttpClient::complete(const InferenceRequest& request) {
  const auto body = build_body(request).dump();

  httplib::Client cli(scheme_host_port_);
  const auto timeout_s = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto timeout_us =
      std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - timeout_s);
  cli.set_connection_timeout(timeout_s.count(), timeout_us.count());
  cli.set_read_timeout(timeout_s.count(), timeout_us.count());
  cli.set_write_timeout(timeout_s.count(), timeout_us.count());
  if (!config_.api_key.empty()) cli.set_bearer_token_auth(config_.api_key);

  auto backoff = config_.initial_backoff;
  std::string last_failure;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    const auto started = std::chrono::steady_clock::now();
    auto res = cli.Post(path_, body, "application/json");
    if (!res) {
      last_failure = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw Error(ErrorKind::auth, fmt::format("{} rejected credentials (HTTP {})",
                                               config_.endpoint, res->status));
    }
    if (is_transient(res->status)) {
      last_failure = fmt::format("HTTP {}", res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorKind::transport,
                  fmt::format("{} returned HTTP {}: {}", config_.endpoint, res->status, res->body));
    }

    InferenceResponse out;
    out.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
            .count();
    try {
      out.raw = nlohmann::json::parse(res->body);
      out.text = out.raw.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::payload, fmt::format("malformed provider payload: {}", e.what()));
    }
    return out;
  }
  throw Error(ErrorKind::timeout, fmt::format("{} failed after {} attempts: {}", config_.endpoint,
                                              config_.max_retries + 1, last_failure));
}

}  // namespace actionmqa
