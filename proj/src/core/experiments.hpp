#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "core/config.hpp"
#include "core/report.hpp"
#include "core/transition_model.hpp"

namespace nclln {

struct RunOptions {
  int threads = 0;  // 0 = auto (NCLLN_THREADS, then hardware)
  std::optional<std::uint64_t> seed_override;
};

// Dispatches on cfg.law; every record is a pure function of
// (config, seed_override).
RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

// Exact decoupling diagnostic: blocks of consecutive indices, test function
// h on the tuple of block state-sequences.
struct Lemma31Layout {
  std::vector<long long> offsets;  // 1-based start of each block
  int length = 1;
};
using BlockFunction =
    std::function<double(const std::vector<std::vector<int>>&)>;

struct Lemma31Result {
  double exact_diff = 0.0;
  double bound = 0.0;
  double h_sup = 0.0;
};

Lemma31Result lemma31_check(const TransitionModel& model,
                            const Lemma31Layout& layout, const BlockFunction& h,
                            long long state_cap = 1 << 20);

BlockFunction block_function(const std::string& name);

// Exact binomial (Clopper-Pearson style) band at the given one-sided tail
// probability.
struct BinomialBand {
  double lo = 0.0;
  double hi = 1.0;
};
BinomialBand binomial_band(long long hits, long long trials, double tail);

int resolve_threads(int requested);

}  // namespace nclln
