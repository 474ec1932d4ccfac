#include "tmrt/recal.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

namespace tmrt {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller over the shared generator; std::normal_distribution is not
// bit-stable across standard libraries.
double gaussian(std::mt19937_64& rng) {
  double u = uniform01(rng);
  if (u <= 0.0) u = 0x1.0p-53;
  const double v = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * 3.141592653589793 * v);
}

struct TaskState {
  double m0x, m0y, m1x, m1y;
  double sigma;

  std::pair<std::vector<double>, std::uint32_t> sample(std::mt19937_64& rng) {
    const std::uint32_t label = rng() & 1;
    const double mx = label == 0 ? m0x : m1x;
    const double my = label == 0 ? m0y : m1y;
    const double x = std::clamp(mx + sigma * gaussian(rng), 0.0, 1.0);
    const double y = std::clamp(my + sigma * gaussian(rng), 0.0, 1.0);
    return {{x, y}, label};
  }
};

std::vector<std::vector<double>> thermometer_thresholds(std::uint32_t per_dim) {
  std::vector<double> levels;
  for (std::uint32_t k = 1; k <= per_dim; ++k)
    levels.push_back(static_cast<double>(k) / (per_dim + 1));
  return {levels, levels};
}

}  // namespace

std::vector<RecalStep> run_recal_demo(const DriftScenario& scenario,
                                      TmSystem& system) {
  if (scenario.trigger_threshold <= 0.0 || scenario.trigger_threshold >= 1.0)
    fail(ErrorKind::InvalidConfig, "trigger threshold must be in (0, 1)");
  if (scenario.schedule.empty())
    fail(ErrorKind::InvalidConfig, "drift schedule must be non-empty");
  if (scenario.steps < 1) fail(ErrorKind::InvalidConfig, "need >= 1 step");

  std::mt19937_64 rng(scenario.rng_seed);
  TaskState task{scenario.class0_x, scenario.class0_y, scenario.class1_x,
                 scenario.class1_y, scenario.noise_sigma};
  const auto thresholds = thermometer_thresholds(scenario.thresholds_per_dim);
  const std::uint32_t features = 2 * scenario.thresholds_per_dim;

  auto draw = [&](Dataset& into) {
    const auto [raw, label] = task.sample(rng);
    into.inputs.push_back(booleanize(raw, thresholds));
    into.labels.push_back(label);
  };

  auto retrain = [&](const Dataset& data, std::uint64_t generation) {
    TrainConfig cfg = scenario.trainer;
    cfg.rng_seed = scenario.rng_seed + generation;
    const TmModel model =
        train(data, 2, scenario.clauses, features, cfg);
    return encode(model);
  };

  // Generation 1: pre-drift model.
  Dataset pretrain;
  for (std::uint32_t i = 0; i < scenario.pretrain_samples; ++i) draw(pretrain);
  system.reprogram(retrain(pretrain, 0), "gen-1");

  Dataset recent;  // rolling retrain buffer
  std::deque<bool> window;
  std::vector<RecalStep> timeline;

  for (std::uint64_t step = 0; step < scenario.steps; ++step) {
    for (const DriftShift& shift : scenario.schedule) {
      if (shift.step == step) {
        task.m0x += shift.dx;
        task.m0y += shift.dy;
        task.m1x -= shift.dx;
        task.m1y -= shift.dy;
      }
    }

    const auto [raw, label] = task.sample(rng);
    const BoolVector x = booleanize(raw, thresholds);
    const auto run = system.run(std::span(&x, 1));
    const bool correct = run.classifications[0] == label;

    window.push_back(correct);
    if (window.size() > scenario.probe_window) window.pop_front();
    recent.inputs.push_back(x);
    recent.labels.push_back(label);
    if (recent.inputs.size() > scenario.retrain_samples) {
      recent.inputs.erase(recent.inputs.begin());
      recent.labels.erase(recent.labels.begin());
    }

    const double acc =
        static_cast<double>(std::count(window.begin(), window.end(), true)) /
        static_cast<double>(window.size());

    RecalStep row{step, acc, system.generation(), false};
    if (window.size() == scenario.probe_window &&
        acc < scenario.trigger_threshold &&
        recent.inputs.size() == scenario.retrain_samples) {
      try {
        system.reprogram(retrain(recent, system.generation()),
                         "gen-" + std::to_string(system.generation() + 1));
        row.reprogrammed = true;
        row.generation = system.generation();
        window.clear();  // refill before the trigger can fire again
      } catch (const TmError&) {
        // Retraining produced an unencodable model; keep the old generation.
      }
    }
    timeline.push_back(row);
  }
  return timeline;
}

}  // namespace tmrt
