#include "tmrt/core.hpp"

#include <algorithm>

namespace tmrt {

std::uint64_t cycle_model(std::uint64_t n_instr, std::uint64_t num_classes,
                          std::uint64_t load_words, std::uint64_t batches) {
  return load_words + batches * (n_instr + 3 + num_classes + 1);
}

Core::Core(CoreConfig config) : config_(config) {
  if (config_.instr_mem_depth < 1 || config_.feature_mem_depth < 1)
    fail(ErrorKind::InvalidConfig, "memory depths must be >= 1");
  if (config_.clock_hz <= 0)
    fail(ErrorKind::InvalidConfig, "clock frequency must be positive");
  if (config_.power_watts < 0)
    fail(ErrorKind::InvalidConfig, "average power must be >= 0");
  header_word_count(config_.header_width, false);  // validates the width
  instr_mem_.assign(config_.instr_mem_depth, 0);
  feature_mem_.assign(config_.feature_mem_depth, 0);
}

void Core::reset() {
  phase_ = Phase::Idle;
  cycle_count_ = 0;
  load_pos_ = 0;
  batches_done_ = 0;
  pending_header_.clear();
  clause_reg_ = 0xFFFFFFFFu;
  class_sums_.fill(0);
  stored_sums_.clear();
  out_fifo_.clear();
  // Memory contents and the latched architecture survive a reset; the next
  // instruction header/payload rewrites them.
}

FeedResult Core::feed(StreamWord word) {
  FeedResult result;
  if (word.is_header) {
    if (pending_header_.empty()) {
      // First word of a header. The NEW bit resets the machine wherever it
      // arrives; without it a header is only legal between payloads.
      const bool new_stream = (word.bits >> (config_.header_width - 1)) & 1;
      if (new_stream) {
        reset();
        result.did_reset = true;
      } else if (phase_ != Phase::Idle) {
        fail(ErrorKind::Protocol,
             "premature header: previous payload is incomplete");
      }
    }
    pending_header_.push_back(word.bits);
    const bool feature =
        (pending_header_[0] >> (config_.header_width - 2)) & 1;
    if (pending_header_.size() <
        header_word_count(config_.header_width, feature)) {
      result.phase = phase_;
      return result;
    }
    const Header header = decode_header(pending_header_, config_.header_width);
    pending_header_.clear();
    handle_header(header);
    result.phase = phase_;
    return result;
  }

  switch (phase_) {
    case Phase::LoadingInstructions:
      if (word.bits > 0xFFFF)
        fail(ErrorKind::Protocol, "instruction word exceeds 16 bits");
      instr_mem_[load_pos_++] = static_cast<std::uint16_t>(word.bits);
      ++cycle_count_;
      if (load_pos_ == num_instructions_) {
        model_loaded_ = true;
        phase_ = Phase::Idle;
      }
      break;
    case Phase::LoadingFeatures:
      if (word.bits > 0xFFFFFFFFu)
        fail(ErrorKind::Protocol, "feature word exceeds 32 bits");
      feature_mem_[load_pos_++] = static_cast<std::uint32_t>(word.bits);
      ++cycle_count_;
      if (load_pos_ == words_per_batch_) {
        load_pos_ = 0;
        execute_batch();
        result.executed_batch = true;
        ++batches_done_;
        if (batches_done_ == batch_count_) phase_ = Phase::Idle;
      }
      break;
    default:
      fail(ErrorKind::Protocol, "payload word while no payload is expected");
  }
  result.phase = phase_;
  return result;
}

void Core::handle_header(const Header& header) {
  if (const auto* ih = std::get_if<InstructionHeader>(&header)) {
    if (ih->num_classes == 0 || ih->num_clauses == 0 ||
        ih->num_instructions == 0)
      fail(ErrorKind::Protocol, "instruction header with a zero field");
    if (ih->num_instructions > config_.instr_mem_depth)
      fail(ErrorKind::Capacity,
           "model needs " + std::to_string(ih->num_instructions) +
               " instruction words but the memory depth is " +
               std::to_string(config_.instr_mem_depth));
    num_classes_ = ih->num_classes;
    num_clauses_ = ih->num_clauses;
    num_instructions_ = ih->num_instructions;
    model_loaded_ = false;
    load_pos_ = 0;
    phase_ = Phase::LoadingInstructions;
    return;
  }
  const auto& fh = std::get<FeatureHeader>(header);
  if (fh.words_per_batch == 0 || fh.batch_count == 0)
    fail(ErrorKind::Protocol, "feature header with a zero field");
  if (!model_loaded_)
    fail(ErrorKind::State, "feature stream arrived before any model");
  if (fh.words_per_batch > config_.feature_mem_depth)
    fail(ErrorKind::Capacity,
         "batch needs " + std::to_string(fh.words_per_batch) +
             " feature words but the memory depth is " +
             std::to_string(config_.feature_mem_depth));
  words_per_batch_ = fh.words_per_batch;
  batch_count_ = fh.batch_count;
  batches_done_ = 0;
  load_pos_ = 0;
  phase_ = Phase::LoadingFeatures;
}

void Core::commit_clause(bool positive) {
  for (std::uint32_t lane = 0; lane < kBatchLanes; ++lane) {
    const std::int32_t bit = (clause_reg_ >> lane) & 1;
    class_sums_[lane] += positive ? bit : -bit;
  }
  clause_reg_ = 0xFFFFFFFFu;
}

std::array<std::uint32_t, kBatchLanes> Core::execute_batch() {
  if (!model_loaded_)
    fail(ErrorKind::State, "execute requested with no model loaded");
  if (words_per_batch_ == 0)
    fail(ErrorKind::State, "execute requested with no batch resident");
  const Phase resume = phase_;
  phase_ = Phase::Executing;

  clause_reg_ = 0xFFFFFFFFu;
  class_sums_.fill(0);
  stored_sums_.assign(std::size_t{num_classes_} * kBatchLanes, 0);
  std::uint32_t cls = 0;
  std::uint32_t clauses_in_class = 1;
  IncludeInstruction prev{};

  auto store_class = [&] {
    for (std::uint32_t lane = 0; lane < kBatchLanes; ++lane)
      stored_sums_[std::size_t{cls} * kBatchLanes + lane] = class_sums_[lane];
    class_sums_.fill(0);
  };

  for (std::uint32_t i = 0; i < num_instructions_; ++i) {
    const IncludeInstruction ins = unpack_instruction(instr_mem_[i]);
    if (ins.offset >= words_per_batch_)
      fail(ErrorKind::FaultingInstruction,
           "instruction offset " + std::to_string(ins.offset) +
               " outside the loaded feature range");
    if (i == 0) {
      if (ins.clause_toggle || ins.class_toggle)
        fail(ErrorKind::MalformedModel,
             "first instruction must have cc=0, e=0");
    } else {
      const bool class_flip = ins.class_toggle != prev.class_toggle;
      const bool clause_flip = ins.clause_toggle != prev.clause_toggle;
      if (class_flip) {
        if (clause_flip)
          fail(ErrorKind::MalformedModel,
               "cc and e toggled on the same instruction");
        commit_clause(prev.positive);
        store_class();
        if (++cls >= num_classes_)
          fail(ErrorKind::MalformedModel,
               "instruction stream encodes more classes than declared");
        clauses_in_class = 1;
      } else if (clause_flip) {
        commit_clause(prev.positive);
        if (++clauses_in_class > num_clauses_)
          fail(ErrorKind::MalformedModel,
               "instruction stream encodes more clauses than declared");
      }
    }
    std::uint32_t selected = feature_mem_[ins.offset];
    if (ins.complement) selected = ~selected;
    clause_reg_ &= selected;
    prev = ins;
  }
  commit_clause(prev.positive);
  store_class();
  if (cls + 1 != num_classes_)
    fail(ErrorKind::MalformedModel,
         "instruction stream encodes fewer classes than declared");

  std::array<std::uint32_t, kBatchLanes> results{};
  for (std::uint32_t lane = 0; lane < kBatchLanes; ++lane) {
    std::uint32_t best = 0;
    std::int32_t best_sum = stored_sums_[lane];
    for (std::uint32_t c = 1; c < num_classes_; ++c) {
      const std::int32_t sum = stored_sums_[std::size_t{c} * kBatchLanes + lane];
      if (sum > best_sum) {
        best = c;
        best_sum = sum;
      }
    }
    results[lane] = best;
  }
  // The FIFO holds at most 32 entries; the consumer must drain per batch.
  if (!out_fifo_.empty())
    fail(ErrorKind::Capacity, "output FIFO not drained before the next batch");
  for (std::uint32_t r : results) out_fifo_.push_back(r);

  cycle_count_ += cycle_model(num_instructions_, num_classes_, 0, 1);
  phase_ = resume;
  return results;
}

std::vector<std::uint32_t> Core::drain_fifo() {
  std::vector<std::uint32_t> out(out_fifo_.begin(), out_fifo_.end());
  out_fifo_.clear();
  return out;
}

void Core::feed_packet(const StreamPacket& packet) {
  for (const StreamWord& word :
       serialize_packet(packet, config_.header_width)) {
    const FeedResult r = feed(word);
    if (r.executed_batch) drain_fifo();
  }
}

void Core::load_batch(std::span<const std::uint32_t> words) {
  if (words.size() > config_.feature_mem_depth)
    fail(ErrorKind::Capacity, "batch exceeds feature memory depth");
  if (words.empty()) fail(ErrorKind::InvalidBatch, "empty batch");
  std::copy(words.begin(), words.end(), feature_mem_.begin());
  words_per_batch_ = static_cast<std::uint32_t>(words.size());
}

RunReport make_report(const CoreConfig& config, std::uint64_t cycles,
                      std::vector<std::uint32_t> classifications) {
  RunReport report;
  report.datapoints = classifications.size();
  report.classifications = std::move(classifications);
  report.cycles = cycles;
  report.latency_s = static_cast<double>(cycles) / config.clock_hz;
  report.energy_j = config.power_watts * report.latency_s;
  report.throughput_inf_per_s =
      report.latency_s > 0
          ? static_cast<double>(report.datapoints) / report.latency_s
          : 0.0;
  return report;
}

RunReport run_feature_packet(Core& core, const StreamPacket& packet,
                             std::uint64_t datapoints) {
  if (!header_is_feature(packet.header))
    fail(ErrorKind::Protocol, "run_feature_packet needs a feature packet");
  const std::uint64_t start_cycles = core.cycle_count();
  std::vector<std::uint32_t> classifications;
  bool was_reset = false;
  for (const StreamWord& word :
       serialize_packet(packet, core.config().header_width)) {
    const FeedResult r = core.feed(word);
    was_reset = was_reset || r.did_reset;
    if (r.executed_batch) {
      const auto lanes = core.drain_fifo();
      classifications.insert(classifications.end(), lanes.begin(), lanes.end());
    }
  }
  if (datapoints > classifications.size())
    fail(ErrorKind::InvalidBatch,
         "requested datapoint count exceeds the streamed lanes");
  classifications.resize(datapoints);
  const std::uint64_t cycles =
      was_reset ? core.cycle_count() : core.cycle_count() - start_cycles;
  return make_report(core.config(), cycles, std::move(classifications));
}

}  // namespace tmrt
