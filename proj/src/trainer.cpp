#include "tmrt/trainer.hpp"

#include <algorithm>
#include <random>

namespace tmrt {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

class TrainState {
public:
  TrainState(std::uint32_t classes, std::uint32_t clauses, std::uint32_t features,
             int states_per_action)
      : classes_(classes), clauses_(clauses), literals_(2 * features),
        n_(states_per_action),
        states_(std::size_t{classes} * clauses * literals_,
                static_cast<std::int32_t>(states_per_action)) {}

  bool include(std::uint32_t c, std::uint32_t j, std::uint32_t l) const {
    return states_[index(c, j, l)] > n_;
  }

  void bump(std::uint32_t c, std::uint32_t j, std::uint32_t l, int dir) {
    auto& s = states_[index(c, j, l)];
    s = std::clamp(s + dir, 1, 2 * n_);  // saturate, no wraparound
  }

  // Clause output under training semantics: an all-Exclude clause evaluates
  // to 1 so Type I feedback can recruit literals (inference keeps the
  // compressed-domain convention of 0).
  int clause_output(std::uint32_t c, std::uint32_t j, const BoolVector& x) const {
    const std::uint32_t f = literals_ / 2;
    for (std::uint32_t l = 0; l < literals_; ++l) {
      if (!include(c, j, l)) continue;
      const int lit = l < f ? x[l] : 1 - x[l - f];
      if (lit == 0) return 0;
    }
    return 1;
  }

  int vote_sum(std::uint32_t c, const BoolVector& x) const {
    int sum = 0;
    for (std::uint32_t j = 0; j < clauses_; ++j)
      sum += clause_polarity(j) * clause_output(c, j, x);
    return sum;
  }

  std::uint32_t literals() const { return literals_; }

private:
  std::size_t index(std::uint32_t c, std::uint32_t j, std::uint32_t l) const {
    return (std::size_t{c} * clauses_ + j) * literals_ + l;
  }

  std::uint32_t classes_;
  std::uint32_t clauses_;
  std::uint32_t literals_;
  int n_;
  std::vector<std::int32_t> states_;
};

void type_i_feedback(TrainState& st, std::uint32_t c, std::uint32_t j,
                     const BoolVector& x, int output, double s,
                     std::mt19937_64& rng) {
  const std::uint32_t f = static_cast<std::uint32_t>(x.size());
  const double p_strong = (s - 1.0) / s;
  const double p_weak = 1.0 / s;
  for (std::uint32_t l = 0; l < st.literals(); ++l) {
    const int lit = l < f ? x[l] : 1 - x[l - f];
    if (output == 1 && lit == 1) {
      if (uniform01(rng) < p_strong) st.bump(c, j, l, +1);
    } else {
      if (uniform01(rng) < p_weak) st.bump(c, j, l, -1);
    }
  }
}

void type_ii_feedback(TrainState& st, std::uint32_t c, std::uint32_t j,
                      const BoolVector& x, int output) {
  if (output == 0) return;
  const std::uint32_t f = static_cast<std::uint32_t>(x.size());
  for (std::uint32_t l = 0; l < st.literals(); ++l) {
    const int lit = l < f ? x[l] : 1 - x[l - f];
    if (lit == 0 && !st.include(c, j, l)) st.bump(c, j, l, +1);
  }
}

}  // namespace

TmModel train(const Dataset& dataset, std::uint32_t num_classes,
              std::uint32_t clauses_per_class, std::uint32_t num_features,
              const TrainConfig& config) {
  if (config.epochs < 1) fail(ErrorKind::InvalidConfig, "epochs must be >= 1");
  if (config.s <= 1.0) fail(ErrorKind::InvalidConfig, "s must be > 1");
  if (config.vote_clamp < 1) fail(ErrorKind::InvalidConfig, "T must be >= 1");
  if (config.states_per_action < 1)
    fail(ErrorKind::InvalidConfig, "states per action must be >= 1");
  if (num_classes < 2)
    fail(ErrorKind::InvalidConfig, "training needs >= 2 classes");
  if (dataset.inputs.empty() || dataset.inputs.size() != dataset.labels.size())
    fail(ErrorKind::InvalidDataset, "dataset inputs/labels mismatch");
  for (const auto& x : dataset.inputs)
    if (x.size() != num_features)
      fail(ErrorKind::InvalidDataset,
           "datapoint length differs from the declared feature count");
  for (std::uint32_t y : dataset.labels)
    if (y >= num_classes)
      fail(ErrorKind::InvalidDataset, "label outside the class range");

  TmModel shape_check(num_classes, clauses_per_class, num_features);
  (void)shape_check;  // validates the architecture bounds

  std::mt19937_64 rng(config.rng_seed);
  TrainState st(num_classes, clauses_per_class, num_features,
                config.states_per_action);
  const int t = config.vote_clamp;

  std::vector<std::size_t> order(dataset.inputs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with the shared generator keeps runs seed-reproducible.
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng() % i]);

    for (std::size_t idx : order) {
      const BoolVector& x = dataset.inputs[idx];
      const std::uint32_t target = dataset.labels[idx];

      const int target_sum = std::clamp(st.vote_sum(target, x), -t, t);
      const double p_target = static_cast<double>(t - target_sum) / (2.0 * t);
      for (std::uint32_t j = 0; j < clauses_per_class; ++j) {
        if (uniform01(rng) >= p_target) continue;
        const int out = st.clause_output(target, j, x);
        if (clause_polarity(j) > 0)
          type_i_feedback(st, target, j, x, out, config.s, rng);
        else
          type_ii_feedback(st, target, j, x, out);
      }

      if (num_classes < 2) continue;
      std::uint32_t other = static_cast<std::uint32_t>(rng() % (num_classes - 1));
      if (other >= target) ++other;
      const int other_sum = std::clamp(st.vote_sum(other, x), -t, t);
      const double p_other = static_cast<double>(t + other_sum) / (2.0 * t);
      for (std::uint32_t j = 0; j < clauses_per_class; ++j) {
        if (uniform01(rng) >= p_other) continue;
        const int out = st.clause_output(other, j, x);
        if (clause_polarity(j) > 0)
          type_ii_feedback(st, other, j, x, out);
        else
          type_i_feedback(st, other, j, x, out, config.s, rng);
      }
    }
  }

  TmModel model(num_classes, clauses_per_class, num_features);
  for (std::uint32_t c = 0; c < num_classes; ++c)
    for (std::uint32_t j = 0; j < clauses_per_class; ++j)
      for (std::uint32_t l = 0; l < 2 * num_features; ++l)
        model.set_action(c, j, l, st.include(c, j, l));
  return model;
}

double accuracy(const TmModel& model, const Dataset& dataset) {
  if (dataset.inputs.empty())
    fail(ErrorKind::InvalidDataset, "empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < dataset.inputs.size(); ++i)
    if (predict(model, dataset.inputs[i]) == dataset.labels[i]) ++correct;
  return static_cast<double>(correct) /
         static_cast<double>(dataset.inputs.size());
}

}  // namespace tmrt
