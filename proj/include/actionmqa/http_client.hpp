#pragma once

#include "actionmqa/inference.hpp"

#include <chrono>
#include <string>

namespace actionmqa {

struct HttpClientConfig {
  std::string endpoint;  // full URL, e.g. http://localhost:8000/v1/chat/completions
  std::string api_key;
  std::string model;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds timeout{60000};

  /// Reads ACTIONMQA_ENDPOINT, ACTIONMQA_API_KEY and ACTIONMQA_MODEL.
  static HttpClientConfig from_env();
};

/// Chat-completions client. One request per call; safe to share across
/// threads since each call opens its own connection.
class HttpClient final : public Client {
 public:
  explicit HttpClient(HttpClientConfig config);

  InferenceResponse complete(const InferenceRequest& request) override;
  std::string identity() const override;

  /// The JSON body sent for a request. Frame files are read and base64
  /// encoded here.
  nlohmann::json build_body(const InferenceRequest& request) const;

 private:
  HttpClientConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

}  // namespace actionmqa
