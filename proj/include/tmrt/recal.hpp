#pragma once

#include <cstdint>
#include <vector>

#include "tmrt/system.hpp"
#include "tmrt/trainer.hpp"

namespace tmrt {

// Synthetic on-field recalibration scenario: a two-cluster binary task whose
// class means drift on a schedule. A labeled probe window tracks live
// accuracy; when it falls below the trigger threshold the recent window is
// retrained and the running system is reprogrammed in place.
struct DriftShift {
  std::uint64_t step = 0;  // applied before this step's sample is drawn
  double dx = 0.0;         // added to class-0 mean, subtracted from class-1
  double dy = 0.0;
};

struct DriftScenario {
  double class0_x = 0.30, class0_y = 0.70;
  double class1_x = 0.70, class1_y = 0.30;
  double noise_sigma = 0.05;
  std::vector<DriftShift> schedule = {{50, 0.40, -0.40}};
  double trigger_threshold = 0.8;  // in (0, 1)
  std::uint32_t probe_window = 32;
  // Rolling labeled buffer used for retunes. Kept short so that a few probe
  // windows after a drift it holds post-drift samples only; a retune from a
  // still-mixed buffer just triggers again once the window refills.
  std::uint32_t retrain_samples = 48;
  std::uint32_t pretrain_samples = 256;
  std::uint64_t steps = 160;
  std::uint64_t rng_seed = 7;

  std::uint32_t thresholds_per_dim = 8;  // thermometer code, F = 16
  std::uint32_t clauses = 32;
  TrainConfig trainer{3.9, 8, 128, 100, 0};  // seed derived per generation
};

struct RecalStep {
  std::uint64_t step = 0;
  double accuracy = 0.0;       // over the current probe window
  std::uint64_t generation = 0;
  bool reprogrammed = false;
};

// Drive the scenario against a live system (programming generation 1 from a
// pre-drift training set first). The system object is reused throughout;
// retunes go through TmSystem::reprogram only.
std::vector<RecalStep> run_recal_demo(const DriftScenario& scenario,
                                      TmSystem& system);

}  // namespace tmrt
