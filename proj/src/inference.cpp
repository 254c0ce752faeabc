#include "actionmqa/inference.hpp"

#include "actionmqa/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <mutex>
#include <thread>

namespace actionmqa {

namespace {

std::string letter_for(std::size_t index) { return std::string(1, static_cast<char>('A' + index)); }

}  // namespace

MockPolicy MockPolicy::parse(std::string_view spec) {
  MockPolicy p;
  if (spec == "oracle") {
    p.kind = Kind::oracle;
    return p;
  }
  if (spec == "top1" || spec == "top1_mimic") {
    p.kind = Kind::top1_mimic;
    return p;
  }
  const auto colon = spec.find(':');
  const auto head = spec.substr(0, colon);
  const auto arg = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  if ((head == "random" || head == "uniform_random") && !arg.empty()) {
    p.kind = Kind::uniform_random;
    auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), p.seed);
    if (ec == std::errc{} && ptr == arg.data() + arg.size()) return p;
  }
  if ((head == "fixed" || head == "fixed_letter") && arg.size() == 1 &&
      std::isalpha(static_cast<unsigned char>(arg[0]))) {
    p.kind = Kind::fixed_letter;
    p.letter = static_cast<char>(std::toupper(static_cast<unsigned char>(arg[0])));
    return p;
  }
  throw Error(ErrorKind::invalid_argument, fmt::format("unknown mock policy '{}'", spec));
}

std::string MockPolicy::to_string() const {
  switch (kind) {
    case Kind::oracle: return "oracle";
    case Kind::uniform_random: return fmt::format("random:{}", seed);
    case Kind::top1_mimic: return "top1";
    case Kind::fixed_letter: return fmt::format("fixed:{}", letter);
  }
  return "oracle";
}

MockClient::MockClient(MockPolicy policy) : policy_(std::move(policy)) {
  if (policy_.kind == MockPolicy::Kind::top1_mimic && !policy_.table) {
    throw Error(ErrorKind::invalid_argument, "top1 mock policy needs a prediction table");
  }
}

std::string MockClient::identity() const { return "mock:" + policy_.to_string(); }

InferenceResponse MockClient::complete(const InferenceRequest& request) {
  const auto& meta = request.metadata;
  InferenceResponse response;
  auto text_or_empty = [&](const char* key) {
    return meta.contains(key) ? meta.at(key).get<std::string>() : std::string{};
  };
  switch (policy_.kind) {
    case MockPolicy::Kind::oracle:
      response.text = text_or_empty("gt_text");
      break;
    case MockPolicy::Kind::fixed_letter:
      response.text = std::string(1, policy_.letter);
      break;
    case MockPolicy::Kind::uniform_random: {
      const auto k = meta.contains("options") ? meta.at("options").size() : 0;
      if (k == 0) break;
      Rng rng(derive_seed(policy_.seed, text_or_empty("item_id")));
      response.text = letter_for(rng.below(k));
      break;
    }
    case MockPolicy::Kind::top1_mimic: {
      const auto segment_id = text_or_empty("segment_id");
      if (!policy_.table->contains(segment_id) || !meta.contains("option_classes")) break;
      const auto top = top1_class(policy_.table->at(segment_id));
      const auto classes = meta.at("option_classes").get<std::vector<ClassId>>();
      if (auto it = std::find(classes.begin(), classes.end(), top); it != classes.end()) {
        response.text = letter_for(static_cast<std::size_t>(it - classes.begin()));
      }
      break;
    }
  }
  response.raw = {{"policy", policy_.to_string()}, {"text", response.text}};
  return response;
}

std::vector<double> FrameSampler::timestamps(double start_s, double end_s) const {
  if (placement == FramePlacement::bin_centers || num_frames == 1) {
    return uniform_frame_timestamps(start_s, end_s, num_frames);
  }
  if (num_frames < 1) {
    throw Error(ErrorKind::invalid_argument, fmt::format("frame count must be >= 1"));
  }
  if (!(end_s > start_s)) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("empty frame window [{}, {}]", start_s, end_s));
  }
  std::vector<double> out;
  const double step = (end_s - start_s) / (num_frames - 1);
  for (int j = 0; j < num_frames; ++j) out.push_back(start_s + j * step);
  return out;
}

std::vector<double> uniform_frame_timestamps(double start_s, double end_s, int f) {
  if (f < 1) throw Error(ErrorKind::invalid_argument, fmt::format("frame count must be >= 1"));
  if (!(end_s > start_s)) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("empty frame window [{}, {}]", start_s, end_s));
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(f));
  const double width = end_s - start_s;
  for (int j = 0; j < f; ++j) out.push_back(start_s + (j + 0.5) * width / f);
  return out;
}

std::vector<BatchOutcome> batch_complete(Client& client,
                                         std::span<const InferenceRequest> requests,
                                         std::size_t max_in_flight, bool strict,
                                         const OutcomeCallback& on_done) {
  if (max_in_flight == 0) {
    throw Error(ErrorKind::invalid_argument, "max_in_flight must be >= 1");
  }
  std::vector<BatchOutcome> out(requests.size());
  std::mutex callback_mutex;
  auto run_one = [&](std::size_t i) {
    try {
      const auto started = std::chrono::steady_clock::now();
      out[i].response = client.complete(requests[i]);
      out[i].response->latency_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
              .count();
    } catch (const Error& e) {
      out[i].error = ErrorRecord{e.kind(), e.what()};
    } catch (const std::exception& e) {
      out[i].error = ErrorRecord{ErrorKind::transport, e.what()};
    }
    if (on_done) {
      std::lock_guard lock(callback_mutex);
      on_done(i, out[i]);
    }
  };

  const auto workers = std::min(max_in_flight, requests.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < requests.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (auto i = next++; i < requests.size(); i = next++) run_one(i);
      });
    }
  }

  if (strict) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i].error) {
        throw Error(out[i].error->kind,
                    fmt::format("request {}: {}", i, out[i].error->message));
      }
    }
  }
  return out;
}

}  // namespace actionmqa
