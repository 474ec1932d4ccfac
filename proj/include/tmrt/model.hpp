#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tmrt/error.hpp"

namespace tmrt {

// One Booleanized datapoint: F feature bits. Literals are derived on the
// fly: literal l < F is feature l, literal F <= l < 2F is the complement of
// feature l - F. Complements are never stored.
using BoolVector = std::vector<std::uint8_t>;

// Dense trained Tsetlin Machine model: one Include/Exclude action per
// (class, clause, literal). Clause polarity alternates: even clause index
// votes +1, odd votes -1.
class TmModel {
public:
  TmModel() = default;
  TmModel(std::uint32_t num_classes, std::uint32_t clauses_per_class,
          std::uint32_t num_features);

  std::uint32_t num_classes() const { return classes_; }
  std::uint32_t clauses_per_class() const { return clauses_; }
  std::uint32_t num_features() const { return features_; }
  std::uint32_t num_literals() const { return 2 * features_; }
  std::uint64_t total_automata() const {
    return std::uint64_t{classes_} * clauses_ * num_literals();
  }

  bool action(std::uint32_t cls, std::uint32_t clause,
              std::uint32_t literal) const {
    return actions_[index(cls, clause, literal)] != 0;
  }
  void set_action(std::uint32_t cls, std::uint32_t clause,
                  std::uint32_t literal, bool include) {
    actions_[index(cls, clause, literal)] = include ? 1 : 0;
  }

  std::uint64_t include_count() const;
  const std::vector<std::uint8_t>& actions() const { return actions_; }

  bool operator==(const TmModel&) const = default;

private:
  std::size_t index(std::uint32_t cls, std::uint32_t clause,
                    std::uint32_t literal) const;

  std::uint32_t classes_ = 0;
  std::uint32_t clauses_ = 0;
  std::uint32_t features_ = 0;
  std::vector<std::uint8_t> actions_;  // class-major, clause-major, literal-minor
};

// Maximum feature count expressible by the 12-bit instruction offset field.
inline constexpr std::uint32_t kMaxFeatures = 4096;

// +1 for even clause indices, -1 for odd.
inline int clause_polarity(std::uint32_t clause) {
  return (clause % 2 == 0) ? +1 : -1;
}

// Threshold a raw numeric datapoint into Boolean features. thresholds[d] is
// the ordered threshold list for raw dimension d; bit k is 1 iff the raw
// value meets its threshold. Total output length is the total threshold
// count (a single threshold per dimension gives plain binarization; several
// give a thermometer code).
BoolVector booleanize(std::span<const double> raw,
                      const std::vector<std::vector<double>>& thresholds);

// Value of literal l for input x: x[l] for l < F, 1 - x[l - F] otherwise.
int literal_value(const BoolVector& x, std::uint32_t literal);

// AND over the literals whose actions are Include. A clause with zero
// Includes outputs 0 so that dense inference matches the compressed stream,
// which carries no instructions for it.
int clause_output(const TmModel& model, std::uint32_t cls, std::uint32_t clause,
                  const BoolVector& x);

// Polarity-weighted clause vote totals, one per class.
std::vector<int> class_sums(const TmModel& model, const BoolVector& x);

// Smallest class index attaining the maximum class sum.
std::uint32_t predict(const TmModel& model, const BoolVector& x);

// Fraction of automata whose action is Include.
double sparsity(const TmModel& model);

// Model files: ".json" paths get the JSON mirror, everything else the
// packed binary format (magic "TMM1", then M/Cl/F as u32 LE, then the
// action tensor 1 bit per automaton, LSB-first, padded to a byte).
void save_model(const TmModel& model, const std::filesystem::path& path);
TmModel load_model(const std::filesystem::path& path);

}  // namespace tmrt
