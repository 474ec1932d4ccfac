#pragma once

#include <cstdint>
#include <vector>

#include "tmrt/model.hpp"

namespace tmrt {

struct TrainConfig {
  double s = 3.9;                  // specificity, > 1
  int vote_clamp = 10;             // T: class sums clamp to [-T, T] for feedback
  int states_per_action = 128;     // N: automaton acts Include iff state > N
  int epochs = 100;
  std::uint64_t rng_seed = 1;
};

struct Dataset {
  std::vector<BoolVector> inputs;
  std::vector<std::uint32_t> labels;
};

// Vanilla Tsetlin Machine training with classic Type I/II feedback. The
// result is fully determined by (dataset, architecture, config): the RNG is
// std::mt19937_64 over the seed with fixed uniform mappings, so the same
// seed reproduces the same model bit for bit on any platform.
TmModel train(const Dataset& dataset, std::uint32_t num_classes,
              std::uint32_t clauses_per_class, std::uint32_t num_features,
              const TrainConfig& config);

// Fraction of correctly predicted labels.
double accuracy(const TmModel& model, const Dataset& dataset);

}  // namespace tmrt
