#include "actionmqa/mqa_gen.hpp"

#include "actionmqa/errors.hpp"
#include "actionmqa/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <numeric>
#include <thread>

namespace actionmqa {

namespace {

constexpr std::string_view kEgocentricPreamble =
    "You are seeing this video from egocentric view and you are the person. Your hands are "
    "sometimes interacting with objects. What action are you doing?";
constexpr std::string_view kAllocentricPreamble =
    "The video is taken from egocentric view. The person's hands are sometimes interacting "
    "with objects. What action is the person doing?";

Error bad_value(std::string_view what, std::string_view value) {
  return Error(ErrorKind::invalid_argument, fmt::format("unknown {} '{}'", what, value));
}

const OfficialKey& class_key(const NarrationPool& pool, ClassId c) {
  auto it = pool.keys.find(c);
  if (it == pool.keys.end()) {
    throw Error(ErrorKind::missing_entry, fmt::format("class {} has no official key", c));
  }
  return it->second;
}

/// Picks display text for a distractor class that does not collide with any
/// already-taken option.
std::string distractor_text(ClassId c, const NarrationPool& pool, Representation rep, Rng& rng,
                            const std::vector<std::string>& taken) {
  auto is_taken = [&](const std::string& t) {
    return std::find(taken.begin(), taken.end(), text::option_key(t)) != taken.end();
  };
  auto entries = pool.by_class.find(c);
  if (entries == pool.by_class.end()) {
    throw Error(ErrorKind::missing_entry, fmt::format("class {} is absent from the pool", c));
  }
  if (rep == Representation::narration) {
    const auto& list = entries->second;
    for (int attempt = 0; attempt <= kCollisionRedraws; ++attempt) {
      const auto& candidate = list[rng.below(list.size())].narration;
      if (!is_taken(candidate)) return candidate;
    }
  }
  const auto& key = class_key(pool, c).rendered;
  if (!is_taken(key)) return key;
  throw Error(ErrorKind::collision,
              fmt::format("class {} cannot supply an option distinct from the others", c));
}

std::vector<Distractor> texts_for(std::span<const ClassId> classes,
                                  const ActionSegment& segment, const NarrationPool& pool,
                                  Representation rep, Rng& rng) {
  std::vector<std::string> taken{text::option_key(gt_option_text(segment, rep))};
  std::vector<Distractor> out;
  out.reserve(classes.size());
  for (auto c : classes) {
    auto t = distractor_text(c, pool, rep, rng, taken);
    taken.push_back(text::option_key(t));
    out.push_back({c, std::move(t)});
  }
  return out;
}

std::string item_id_for(const ActionSegment& segment, const GenerationConfig& config,
                        Representation rep) {
  if (config.representation != RepresentationPolicy::both) return segment.segment_id;
  return fmt::format("{}/{}", segment.segment_id, to_string(rep));
}

MqaItem assemble(const ActionSegment& segment, std::span<const Distractor> distractors,
                 const GenerationConfig& config, Representation rep, Rng& rng,
                 std::uint64_t seed) {
  std::vector<std::string> texts{gt_option_text(segment, rep)};
  std::vector<ClassId> classes{segment.action_class};
  for (const auto& d : distractors) {
    if (d.action_class == segment.action_class) {
      throw Error(ErrorKind::collision,
                  fmt::format("segment '{}': distractor repeats the ground-truth class {}",
                              segment.segment_id, d.action_class));
    }
    texts.push_back(d.text);
    classes.push_back(d.action_class);
  }
  std::vector<std::string> keys;
  for (const auto& t : texts) {
    auto k = text::option_key(t);
    if (std::find(keys.begin(), keys.end(), k) != keys.end()) {
      throw Error(ErrorKind::collision,
                  fmt::format("segment '{}': duplicate option '{}'", segment.segment_id, t));
    }
    keys.push_back(std::move(k));
  }

  std::vector<std::size_t> order(texts.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));

  MqaItem item;
  item.item_id = item_id_for(segment, config, rep);
  item.segment_id = segment.segment_id;
  item.distractor_source = config.source;
  item.representation = rep;
  item.perspective = config.perspective;
  item.seed = seed;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    item.options.push_back(texts[order[pos]]);
    item.option_classes.push_back(classes[order[pos]]);
    if (order[pos] == 0) item.gt_index = pos;
  }
  return item;
}

}  // namespace

std::string_view to_string(Representation r) {
  return r == Representation::narration ? "narration" : "official_key";
}

std::string_view to_string(RepresentationPolicy r) {
  switch (r) {
    case RepresentationPolicy::narration: return "narration";
    case RepresentationPolicy::official_key: return "official_key";
    case RepresentationPolicy::both: return "both";
  }
  return "narration";
}

std::string_view to_string(Perspective p) {
  return p == Perspective::egocentric ? "egocentric" : "allocentric";
}

std::string_view to_string(Mode m) { return m == Mode::benchmark ? "benchmark" : "training"; }

Representation parse_representation(std::string_view s) {
  if (s == "narration") return Representation::narration;
  if (s == "official_key" || s == "official-key") return Representation::official_key;
  throw bad_value("representation", s);
}

RepresentationPolicy parse_representation_policy(std::string_view s) {
  if (s == "both") return RepresentationPolicy::both;
  return parse_representation(s) == Representation::narration
             ? RepresentationPolicy::narration
             : RepresentationPolicy::official_key;
}

Perspective parse_perspective(std::string_view s) {
  if (s == "egocentric" || s == "ego") return Perspective::egocentric;
  if (s == "allocentric" || s == "allo") return Perspective::allocentric;
  throw bad_value("perspective", s);
}

Mode parse_mode(std::string_view s) {
  if (s == "benchmark") return Mode::benchmark;
  if (s == "training") return Mode::training;
  throw bad_value("mode", s);
}

std::string DistractorSource::to_string() const {
  return is_random() ? std::string("random") : "model:" + model_name;
}

DistractorSource DistractorSource::parse(std::string_view s) {
  if (s == "random") return {};
  if (s.starts_with("model:") && s.size() > 6) return {std::string(s.substr(6))};
  throw bad_value("distractor source", s);
}

void GenerationConfig::validate() const {
  if (k < 2 || k > 26) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("K must be between 2 and 26, got {}", k));
  }
  if (mode == Mode::training && source.is_random()) {
    throw Error(ErrorKind::invalid_argument,
                "training mode needs a model distractor source");
  }
}

nlohmann::json GenerationConfig::to_json() const {
  return {{"k", k},
          {"seed", seed},
          {"mode", to_string(mode)},
          {"source", source.to_string()},
          {"representation", to_string(representation)},
          {"perspective", to_string(perspective)}};
}

char option_letter(std::size_t index) {
  if (index >= 26) {
    throw Error(ErrorKind::invalid_argument, fmt::format("no option letter for index {}", index));
  }
  return static_cast<char>('A' + index);
}

std::string gt_option_text(const ActionSegment& segment, Representation rep) {
  if (rep == Representation::official_key) return official_key(segment).rendered;
  if (segment.narration.empty()) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("segment '{}' has an empty narration", segment.segment_id));
  }
  return segment.narration;
}

std::uint64_t item_seed(std::uint64_t config_seed, std::string_view segment_id,
                        Representation rep) {
  return derive_seed(config_seed, segment_id, to_string(rep));
}

std::vector<Distractor> sample_random_distractors(const ActionSegment& segment,
                                                  const NarrationPool& pool, std::size_t count,
                                                  Rng& rng, Representation rep) {
  std::vector<ClassId> candidates;
  for (const auto& [c, entries] : pool.by_class) {
    if (c != segment.action_class) candidates.push_back(c);
  }
  if (candidates.size() < count) {
    throw Error(ErrorKind::insufficient_candidates,
                fmt::format("segment '{}': need {} other classes, pool has {}", segment.segment_id,
                            count, candidates.size()));
  }
  // partial Fisher-Yates: the first count slots become a uniform sample
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(count);
  return texts_for(candidates, segment, pool, rep, rng);
}

std::vector<Distractor> sample_model_distractors(const ActionSegment& segment,
                                                 const PredictionTable& table,
                                                 const NarrationPool& pool, std::size_t count,
                                                 Rng& rng, Representation rep) {
  const auto classes = top_k_excluding(table.at(segment.segment_id), segment.action_class, count);
  for (auto c : classes) {
    if (!pool.contains(c)) {
      throw Error(ErrorKind::missing_entry,
                  fmt::format("segment '{}': predicted class {} is absent from the pool",
                              segment.segment_id, c));
    }
  }
  return texts_for(classes, segment, pool, rep, rng);
}

MqaItem build_benchmark_item(const ActionSegment& segment, std::span<const Distractor> distractors,
                             const GenerationConfig& config, Representation rep, Rng& rng) {
  if (distractors.size() + 1 != config.k) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("segment '{}': {} distractors given, K-1 = {}", segment.segment_id,
                            distractors.size(), config.k - 1));
  }
  return assemble(segment, distractors, config, rep, rng,
                  item_seed(config.seed, segment.segment_id, rep));
}

MqaItem build_training_item(const ActionSegment& segment, const PredictionTable& table,
                            const NarrationPool& pool, const GenerationConfig& config,
                            Representation rep, Rng& rng) {
  const auto& entries = table.at(segment.segment_id);
  if (entries.size() < config.k) {
    throw Error(ErrorKind::insufficient_candidates,
                fmt::format("segment '{}': need {} predictions, {} available", segment.segment_id,
                            config.k, entries.size()));
  }
  auto top = top_k_excluding(entries, std::nullopt, config.k);
  auto gt = std::find(top.begin(), top.end(), segment.action_class);
  if (gt != top.end()) {
    top.erase(gt);
  } else {
    top.pop_back();  // least confident
  }
  for (auto c : top) {
    if (!pool.contains(c)) {
      throw Error(ErrorKind::missing_entry,
                  fmt::format("segment '{}': predicted class {} is absent from the pool",
                              segment.segment_id, c));
    }
  }
  const auto distractors = texts_for(top, segment, pool, rep, rng);
  return assemble(segment, distractors, config, rep, rng,
                  item_seed(config.seed, segment.segment_id, rep));
}

std::string_view perspective_preamble(Perspective perspective) {
  return perspective == Perspective::egocentric ? kEgocentricPreamble : kAllocentricPreamble;
}

std::string render_option_list(std::span<const std::string> options) {
  std::string out;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (i) out.push_back('\n');
    out += fmt::format("{}. {}", option_letter(i), options[i]);
  }
  return out;
}

std::string render_mqa_prompt(const MqaItem& item, Perspective perspective) {
  return fmt::format("{}\n{}", perspective_preamble(perspective),
                     render_option_list(item.options));
}

std::string render_mqa_prompt(const MqaItem& item) {
  return render_mqa_prompt(item, item.perspective);
}

GenerationResult generate_dataset(std::span<const ActionSegment> segments,
                                  const NarrationPool& pool, const PredictionTable* table,
                                  const GenerationConfig& config,
                                  const GenerationOptions& options) {
  config.validate();
  if (!config.source.is_random() && table == nullptr) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("source {} needs a prediction table", config.source.to_string()));
  }
  std::vector<Representation> reps;
  switch (config.representation) {
    case RepresentationPolicy::narration: reps = {Representation::narration}; break;
    case RepresentationPolicy::official_key: reps = {Representation::official_key}; break;
    case RepresentationPolicy::both:
      reps = {Representation::narration, Representation::official_key};
      break;
  }

  struct Slot {
    std::vector<MqaItem> items;
    std::optional<ItemError> error;
  };
  std::vector<Slot> slots(segments.size());

  auto build_one = [&](std::size_t i) {
    const auto& seg = segments[i];
    try {
      for (auto rep : reps) {
        Rng rng(item_seed(config.seed, seg.segment_id, rep));
        if (config.mode == Mode::training) {
          slots[i].items.push_back(build_training_item(seg, *table, pool, config, rep, rng));
          continue;
        }
        const auto distractors =
            config.source.is_random()
                ? sample_random_distractors(seg, pool, config.k - 1, rng, rep)
                : sample_model_distractors(seg, *table, pool, config.k - 1, rng, rep);
        slots[i].items.push_back(build_benchmark_item(seg, distractors, config, rep, rng));
      }
    } catch (const Error& e) {
      slots[i].items.clear();
      slots[i].error = ItemError{seg.segment_id, e.kind(), e.what()};
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, segments.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < segments.size(); ++i) build_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool_threads;
    for (unsigned w = 0; w < workers; ++w) {
      pool_threads.emplace_back([&] {
        for (auto i = next++; i < segments.size(); i = next++) build_one(i);
      });
    }
  }

  GenerationResult result;
  for (auto& slot : slots) {
    if (slot.error) result.errors.push_back(std::move(*slot.error));
    for (auto& item : slot.items) result.items.push_back(std::move(item));
  }
  if (!result.errors.empty() && !options.skip_errors) {
    const auto& first = result.errors.front();
    throw Error(first.kind, fmt::format("{} of {} segments failed; first '{}': {}",
                                        result.errors.size(), segments.size(), first.segment_id,
                                        first.message));
  }
  return result;
}

nlohmann::json to_json(const MqaItem& item) {
  return {{"item_id", item.item_id},
          {"segment_id", item.segment_id},
          {"options", item.options},
          {"gt_index", item.gt_index},
          {"option_classes", item.option_classes},
          {"distractor_source", item.distractor_source.to_string()},
          {"representation", to_string(item.representation)},
          {"perspective", to_string(item.perspective)},
          {"seed", item.seed}};
}

MqaItem mqa_item_from_json(const nlohmann::json& j) {
  MqaItem item;
  try {
    j.at("item_id").get_to(item.item_id);
    j.at("segment_id").get_to(item.segment_id);
    j.at("options").get_to(item.options);
    j.at("gt_index").get_to(item.gt_index);
    if (j.contains("option_classes")) j.at("option_classes").get_to(item.option_classes);
    item.distractor_source = DistractorSource::parse(j.at("distractor_source").get<std::string>());
    item.representation = parse_representation(j.at("representation").get<std::string>());
    item.perspective = parse_perspective(j.at("perspective").get<std::string>());
    j.at("seed").get_to(item.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, fmt::format("MQA item: {}", e.what()));
  }
  if (item.options.size() < 2 || item.gt_index >= item.options.size()) {
    throw Error(ErrorKind::schema,
                fmt::format("MQA item '{}': gt_index {} outside {} options", item.item_id,
                            item.gt_index, item.options.size()));
  }
  if (!item.option_classes.empty() && item.option_classes.size() != item.options.size()) {
    throw Error(ErrorKind::schema,
                fmt::format("MQA item '{}': option_classes length mismatch", item.item_id));
  }
  return item;
}

std::string write_items_jsonl(std::span<const MqaItem> items) {
  std::string out;
  for (const auto& item : items) {
    out += to_json(item).dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace actionmqa
