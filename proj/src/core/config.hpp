#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/observable.hpp"
#include "core/sums.hpp"
#include "core/transition_model.hpp"

namespace nclln {

// Fully validated experiment configuration with defaults resolved. The
// canonical echo (JSON with every resolved key) is what reports embed and
// what the output filenames hash.
struct ExperimentConfig {
  int schema_version = 1;
  std::string law;  // scalar | functional | classical | lemma31 | ld-bounds | simulate | rate
  nlohmann::json model_spec;
  nlohmann::json observable_spec;
  int ell = 1;
  bool center = false;
  std::uint64_t master_seed = 0;

  std::vector<long long> n_schedule;
  std::vector<std::uint64_t> seeds;

  double beta = 0.0;       // scalar / classical target
  double a = 0.0;          // functional level (1/c)
  double tube_tol = 0.0;   // 0 -> solver default

  double net_epsilon = 0.05;
  int net_segments = 6;
  double net_pitch = 0.0;
  long long net_cap = 20000000;

  // ld-bounds
  nlohmann::json gamma_spec;
  double delta = 0.0;
  double lambda = 0.0;
  long long replicas = 0;

  // lemma31
  int blocks_k = 2;
  int block_length = 1;
  std::vector<int> gaps;
  std::string h_name;

  // rate
  double beta_grid_min = 0.0;
  double beta_grid_max = 0.0;
  int beta_grid_count = 0;

  // simulate
  bool emit_paths = false;

  nlohmann::json echo;  // canonical resolved form
};

// Strict parse: unknown keys rejected, schema invariants enforced.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig parse_config_file(const std::string& path);

TransitionModel build_model(const nlohmann::json& spec);
Observable build_observable(const nlohmann::json& spec,
                            const TransitionModel& model, int ell, bool center);

// FNV-1a over the canonical echo text, as 16 hex digits.
std::string config_hash(const nlohmann::json& echo);

}  // namespace nclln
