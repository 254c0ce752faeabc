#pragma once

#include "actionmqa/mqa_gen.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace actionmqa::cli {

struct RunConfig {
  std::string command;

  std::string annotations;
  std::string predictions;
  std::string out;
  std::string config_path;
  std::vector<std::string> datasets;  // "[label=]path"
  std::vector<std::string> results;   // "[label=]path"
  std::string input;                  // convert-predictions / qa-prompts input

  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::string source = "random";
  std::string representation = "narration";
  std::string perspective = "ego";
  std::string mode = "benchmark";
  std::vector<std::string> tasks;
  double priors_fraction = 0.30;
  double delta = 3.0;
  bool skip_errors = false;
  unsigned threads = 1;

  int frames = 8;
  std::string frame_dir;
  std::string client = "mock:oracle";
  std::size_t max_in_flight = 4;
  bool ttaug = false;
  std::string format = "table";
  std::string title;

  std::string endpoint;
  std::string api_key;
  std::string model;
  int max_tokens = 64;
  double temperature = 0.0;
  int max_retries = 3;
};

/// Applies a key-value config document over flag values. Unknown keys throw.
void apply_config(const std::map<std::string, std::string>& values, RunConfig& config);

GenerationConfig generation_config(const RunConfig& config);

int cmd_ingest(const RunConfig& config, std::ostream& out);
int cmd_generate(const RunConfig& config, std::ostream& out);
int cmd_convert_predictions(const RunConfig& config, std::ostream& out);
int cmd_qa_prompts(const RunConfig& config, std::ostream& out);
int cmd_evaluate(const RunConfig& config, std::ostream& out);
int cmd_report(const RunConfig& config, std::ostream& out);

/// Parses argv and dispatches. Errors are written to err as one JSON object
/// {"error": <kind>, "message": ...} and yield exit status 1.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace actionmqa::cli
