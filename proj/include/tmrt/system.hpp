#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tmrt/core.hpp"

namespace tmrt {

// Contiguous class range [begin, end) handled by one core.
struct ClassRange {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;

  std::uint32_t size() const { return end - begin; }
  bool operator==(const ClassRange&) const = default;
};

struct SystemConfig {
  std::uint32_t num_cores = 1;
  CoreConfig core;
  // Optional fixed partition; empty means a balanced contiguous partition is
  // derived from each programmed model's class count.
  std::vector<ClassRange> class_partition;
};

// Contiguous ranges covering [0, num_classes); the first classes % cores
// ranges take the extra class. Cores beyond the class count get empty ranges.
std::vector<ClassRange> balanced_partition(std::uint32_t num_classes,
                                           std::uint32_t num_cores);

// Carve a stream into per-core streams of non-overlapping classes. Each
// substream keeps its words verbatim except that cc and e are re-based so the
// first instruction reads cc=0, e=0; concatenating the per-core include sets
// in partition order reproduces the original include set.
std::vector<InstructionStream> split_instructions(
    const InstructionStream& stream, std::span<const ClassRange> partition);

// Class-partitioned multi-core composition: instruction streams split across
// base cores, features broadcast to all of them, class sums merged for a
// global argmax. Models hot-swap through reprogram() with no core
// re-instantiation; the generation counter increments once per successful
// reprogram.
class TmSystem {
public:
  explicit TmSystem(SystemConfig config);

  // Validate and program a model stream; returns the new generation.
  // A malformed stream throws and leaves the active model untouched.
  std::uint64_t reprogram(const InstructionStream& stream,
                          std::string model_id = {});

  // Queue a validated stream to be applied at the start of the next run, so
  // a swap can never land mid-batch.
  void queue_reprogram(InstructionStream stream, std::string model_id = {});

  struct SystemRun {
    std::vector<std::uint32_t> classifications;
    std::uint64_t datapoints = 0;
    std::uint64_t cycles = 0;  // max core cycles + M merge cycles per batch
    std::vector<std::uint64_t> core_cycles;
    std::uint64_t generation = 0;
  };

  SystemRun run(std::span<const BoolVector> datapoints);
  RunReport report(const SystemRun& run) const;

  bool programmed() const { return generation_ > 0; }
  std::uint64_t generation() const { return generation_; }
  const std::string& active_model_id() const { return model_id_; }
  std::uint32_t num_classes() const { return num_classes_; }

  std::size_t num_cores() const { return cores_.size(); }
  const Core& core(std::size_t i) const { return *cores_[i]; }

private:
  void apply(const InstructionStream& stream, std::string model_id);

  SystemConfig config_;
  std::vector<std::unique_ptr<Core>> cores_;
  std::vector<ClassRange> partition_;
  std::uint32_t num_classes_ = 0;
  std::uint64_t generation_ = 0;
  std::string model_id_;
  struct Pending {
    InstructionStream stream;
    std::string model_id;
  };
  std::optional<Pending> pending_;
};

}  // namespace tmrt
