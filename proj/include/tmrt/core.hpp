#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "tmrt/stream.hpp"

namespace tmrt {

struct CoreConfig {
  std::uint32_t instr_mem_depth = 32768;   // 16-bit words
  std::uint32_t feature_mem_depth = 4096;  // 32-lane words
  unsigned header_width = 32;              // 16, 32 or 64
  double clock_hz = 200e6;                 // base configuration frequency
  double power_watts = 0.351;              // average power for the energy model
};

enum class Phase { Idle, LoadingInstructions, LoadingFeatures, Executing };

struct FeedResult {
  Phase phase = Phase::Idle;   // phase after the word was consumed
  bool did_reset = false;      // a NEW-bit header reset the machine
  bool executed_batch = false; // this word completed a batch (Executing ran)
};

// Closed-form cycle count: payload words load at one per cycle; each batch
// runs its instructions through the 4-stage pipeline (depth fill 3 + one
// cycle per instruction), then an M-cycle argmax scan and one FIFO push.
std::uint64_t cycle_model(std::uint64_t n_instr, std::uint64_t num_classes,
                          std::uint64_t load_words, std::uint64_t batches);

// One base accelerator core: header-driven reconfiguration, instruction and
// feature memories, 32-lane batched clause/class accumulation, argmax and
// output FIFO, with a cycle counter following cycle_model exactly.
class Core {
public:
  explicit Core(CoreConfig config);

  FeedResult feed(StreamWord word);
  // Convenience: serialize at the configured width and feed every word.
  void feed_packet(const StreamPacket& packet);

  // Run the instruction stream over the batch currently resident in feature
  // memory. feed() calls this automatically when a batch completes; exposed
  // for direct drive in tests.
  std::array<std::uint32_t, kBatchLanes> execute_batch();

  Phase phase() const { return phase_; }
  std::uint64_t cycle_count() const { return cycle_count_; }
  bool model_loaded() const { return model_loaded_; }
  std::uint32_t model_classes() const { return num_classes_; }
  std::uint32_t model_clauses() const { return num_clauses_; }
  std::uint32_t instruction_count() const { return num_instructions_; }

  // Stored class sums of the most recently executed batch, row-major
  // [class][lane]; valid until the next batch executes.
  std::span<const std::int32_t> batch_sums() const { return stored_sums_; }

  std::size_t fifo_size() const { return out_fifo_.size(); }
  std::vector<std::uint32_t> drain_fifo();

  const CoreConfig& config() const { return config_; }

  void reset();

  // Test hook: place one transposed batch in feature memory directly.
  void load_batch(std::span<const std::uint32_t> words);

private:
  void handle_header(const Header& header);
  void commit_clause(bool positive);

  CoreConfig config_;
  Phase phase_ = Phase::Idle;
  std::uint64_t cycle_count_ = 0;

  std::vector<std::uint16_t> instr_mem_;
  std::vector<std::uint32_t> feature_mem_;

  // Architecture latched from the last instruction header.
  bool model_loaded_ = false;
  std::uint32_t num_classes_ = 0;
  std::uint32_t num_clauses_ = 0;
  std::uint32_t num_instructions_ = 0;

  // Feature-packet progress.
  std::uint32_t words_per_batch_ = 0;
  std::uint32_t batch_count_ = 0;
  std::uint32_t batches_done_ = 0;
  std::uint32_t load_pos_ = 0;

  // In-flight header words (multi-word headers in 16-bit mode).
  std::vector<std::uint64_t> pending_header_;

  std::uint32_t clause_reg_ = 0xFFFFFFFFu;
  std::array<std::int32_t, kBatchLanes> class_sums_{};
  std::vector<std::int32_t> stored_sums_;  // num_classes x 32
  std::deque<std::uint32_t> out_fifo_;     // capacity 32
};

// Per-inference-run results and the latency/energy/throughput model over
// them (latency = cycles/clock, energy = power x latency).
struct RunReport {
  std::vector<std::uint32_t> classifications;
  std::uint64_t datapoints = 0;
  std::uint64_t cycles = 0;
  double latency_s = 0.0;
  double energy_j = 0.0;
  double throughput_inf_per_s = 0.0;
};

RunReport make_report(const CoreConfig& config, std::uint64_t cycles,
                      std::vector<std::uint32_t> classifications);

// Feed one feature packet and collect its classifications, trimmed to the
// populated datapoint count; cycles cover this packet only.
RunReport run_feature_packet(Core& core, const StreamPacket& packet,
                             std::uint64_t datapoints);

}  // namespace tmrt
