#pragma once

#include "actionmqa/errors.hpp"
#include "actionmqa/predictions.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace actionmqa {

/// A frame handed to the model: an image file when path is set, otherwise a
/// timestamp for servers that decode the video themselves.
struct FrameRef {
  std::string video_id;
  double timestamp_s = 0.0;
  std::optional<std::string> path;
};

struct GenerationParams {
  int max_new_tokens = 64;
  double temperature = 0.0;
  std::optional<std::uint64_t> seed;
};

struct InferenceRequest {
  std::string prompt;
  std::vector<FrameRef> frames;
  GenerationParams params;
  /// Evaluation context (item_id, segment_id, gt_text, options,
  /// option_classes). Read by mock policies only; never transmitted.
  nlohmann::json metadata = nlohmann::json::object();
};

struct InferenceResponse {
  std::string text;
  double latency_ms = 0.0;
  nlohmann::json raw;
};

class Client {
 public:
  virtual ~Client() = default;
  /// Throws Error with kind auth, timeout, transport or payload.
  virtual InferenceResponse complete(const InferenceRequest& request) = 0;
  virtual std::string identity() const = 0;
};

struct MockPolicy {
  enum class Kind { oracle, uniform_random, top1_mimic, fixed_letter };

  Kind kind = Kind::oracle;
  std::uint64_t seed = 0;
  char letter = 'A';
  std::shared_ptr<const PredictionTable> table;

  /// "oracle", "random:<seed>", "fixed:<letter>", "top1" (table attached by
  /// the caller).
  static MockPolicy parse(std::string_view spec);
  std::string to_string() const;
};

/// Deterministic offline client; each answer is a pure function of the
/// policy and the request metadata.
class MockClient final : public Client {
 public:
  explicit MockClient(MockPolicy policy);
  InferenceResponse complete(const InferenceRequest& request) override;
  std::string identity() const override;

 private:
  MockPolicy policy_;
};

enum class FramePlacement { bin_centers, endpoints };

struct FrameSampler {
  int num_frames = 8;
  FramePlacement placement = FramePlacement::bin_centers;

  std::vector<double> timestamps(double start_s, double end_s) const;
};

/// Bin-center timestamps: start + (j + 0.5) * (end - start) / f.
std::vector<double> uniform_frame_timestamps(double start_s, double end_s, int f);

struct ErrorRecord {
  ErrorKind kind = ErrorKind::transport;
  std::string message;
};

struct BatchOutcome {
  std::optional<InferenceResponse> response;
  std::optional<ErrorRecord> error;
};

using OutcomeCallback = std::function<void(std::size_t index, const BatchOutcome&)>;

/// Sends every request with at most max_in_flight outstanding. Results align
/// with requests. In strict mode the first failure (by index) is rethrown.
/// on_done, when given, runs once per finished request under a lock.
std::vector<BatchOutcome> batch_complete(Client& client,
                                         std::span<const InferenceRequest> requests,
                                         std::size_t max_in_flight, bool strict = false,
                                         const OutcomeCallback& on_done = {});

}  // namespace actionmqa
