#pragma once

// Test-only helpers: synthetic corpora and independent oracles. Nothing here
// calls into the ranking or sampling code it is used to check.

#include "actionmqa/annotations.hpp"
#include "actionmqa/predictions.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fixtures {

using actionmqa::ActionSegment;
using actionmqa::ClassId;
using actionmqa::PredictionTable;
using actionmqa::ScoredClass;

inline std::string golden(const std::string& name) {
  std::ifstream in(std::string(GOLDEN_DIR) + "/" + name, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ActionSegment make_segment(std::string id, std::string video, double start, double stop,
                                  std::string narration, ClassId verb_class = 1,
                                  ClassId noun_class = 1, std::string verb = "take",
                                  std::string noun = "plate") {
  ActionSegment s;
  s.segment_id = std::move(id);
  s.video_id = std::move(video);
  s.participant_id = "P01";
  s.start_s = start;
  s.stop_s = stop;
  s.narration = std::move(narration);
  s.verb = std::move(verb);
  s.noun = std::move(noun);
  s.verb_class = verb_class;
  s.noun_class = noun_class;
  s.action_class = actionmqa::derive_action_class(verb_class, noun_class);
  return s;
}

/// Segments with unique narrations, spread over num_classes action classes
/// (verb class c % 7, noun class c) and num_videos videos with increasing
/// start times. Each class gets at least one segment when n >= num_classes.
inline std::vector<ActionSegment> synthetic_corpus(std::size_t n, std::size_t num_classes,
                                                   std::size_t num_videos = 1,
                                                   std::uint32_t seed = 1) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dur(0.5, 6.0);
  std::uniform_real_distribution<double> gap(0.1, 4.0);
  std::vector<double> clock(num_videos, 0.0);
  std::vector<ActionSegment> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<ClassId>(i % num_classes);
    const auto v = i % num_videos;
    const double start = clock[v] + gap(gen);
    const double stop = start + dur(gen);
    clock[v] = start;
    out.push_back(make_segment(fmt::format("S{:05d}", i), fmt::format("V{:02d}", v), start, stop,
                               fmt::format("narration {} of class {}", i, c), c % 7, c,
                               fmt::format("verb{}", c % 7), fmt::format("noun{}", c)));
  }
  return out;
}

/// Random scores over the given classes with distinct values.
inline std::vector<ScoredClass> random_scores(const std::vector<ClassId>& classes,
                                              std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.001, 0.999);
  std::vector<ScoredClass> out;
  std::set<double> used;
  for (auto c : classes) {
    double s = u(gen);
    while (used.contains(s)) s = u(gen);
    used.insert(s);
    out.push_back({c, s});
  }
  return out;
}

/// Brute force: stable sort by class id, then stable sort by descending
/// score, then filter and cut.
inline std::vector<ClassId> brute_top_k(std::vector<ScoredClass> entries,
                                        std::optional<ClassId> exclude, std::size_t k) {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.action_class < b.action_class; });
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  std::vector<ClassId> out;
  for (const auto& e : entries) {
    if (exclude && e.action_class == *exclude) continue;
    if (out.size() == k) break;
    out.push_back(e.action_class);
  }
  return out;
}

/// Upper-tail p-value of Pearson's chi-square statistic against equal
/// expected counts.
inline double chi_square_uniform_p(const std::vector<std::uint64_t>& counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0.0;
  for (auto c : counts) stat += (c - expected) * (c - expected) / expected;
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

inline std::vector<ClassId> classes_of(const std::vector<ActionSegment>& segments) {
  std::set<ClassId> s;
  for (const auto& seg : segments) s.insert(seg.action_class);
  return {s.begin(), s.end()};
}

}  // namespace fixtures
