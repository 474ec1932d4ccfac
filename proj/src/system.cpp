#include "tmrt/system.hpp"

#include <algorithm>

namespace tmrt {

std::vector<ClassRange> balanced_partition(std::uint32_t num_classes,
                                           std::uint32_t num_cores) {
  if (num_cores < 1) fail(ErrorKind::InvalidConfig, "need >= 1 core");
  std::vector<ClassRange> ranges;
  const std::uint32_t base = num_classes / num_cores;
  const std::uint32_t extra = num_classes % num_cores;
  std::uint32_t begin = 0;
  for (std::uint32_t i = 0; i < num_cores; ++i) {
    const std::uint32_t len = base + (i < extra ? 1 : 0);
    ranges.push_back({begin, begin + len});
    begin += len;
  }
  return ranges;
}

namespace {

void validate_partition(std::span<const ClassRange> partition,
                        std::uint32_t num_classes) {
  if (partition.empty())
    fail(ErrorKind::InvalidConfig, "empty class partition");
  std::uint32_t expect = 0;
  for (const ClassRange& r : partition) {
    if (r.begin != expect || r.end < r.begin)
      fail(ErrorKind::InvalidConfig,
           "class partition must be contiguous ascending ranges");
    expect = r.end;
  }
  if (expect != num_classes)
    fail(ErrorKind::InvalidConfig,
         "class partition does not cover the model's classes");
}

}  // namespace

std::vector<InstructionStream> split_instructions(
    const InstructionStream& stream, std::span<const ClassRange> partition) {
  validate_partition(partition, stream.num_classes);

  // Word span of each class, located via the e toggles.
  std::vector<std::pair<std::size_t, std::size_t>> class_spans;
  if (!stream.words.empty()) {
    bool last_e = unpack_instruction(stream.words[0]).class_toggle;
    std::size_t start = 0;
    for (std::size_t i = 1; i < stream.words.size(); ++i) {
      const bool e = unpack_instruction(stream.words[i]).class_toggle;
      if (e != last_e) {
        class_spans.emplace_back(start, i);
        start = i;
        last_e = e;
      }
    }
    class_spans.emplace_back(start, stream.words.size());
  }
  if (class_spans.size() != stream.num_classes)
    fail(ErrorKind::MalformedStream,
         "stream does not contain one segment per declared class");

  std::vector<InstructionStream> out;
  for (const ClassRange& range : partition) {
    InstructionStream sub;
    sub.num_classes = range.size();
    sub.clauses_per_class = stream.clauses_per_class;
    sub.num_features = stream.num_features;
    if (range.size() > 0) {
      const std::size_t first_word = class_spans[range.begin].first;
      const IncludeInstruction first =
          unpack_instruction(stream.words[first_word]);
      // Re-base both toggles so the substream starts at cc=0, e=0; XOR
      // preserves every transition.
      const std::uint16_t toggle_mask = static_cast<std::uint16_t>(
          (first.clause_toggle ? 1u << 14 : 0u) |
          (first.class_toggle ? 1u << 13 : 0u));
      for (std::uint32_t c = range.begin; c < range.end; ++c)
        for (std::size_t i = class_spans[c].first; i < class_spans[c].second;
             ++i)
          sub.words.push_back(stream.words[i] ^ toggle_mask);
    }
    out.push_back(std::move(sub));
  }
  return out;
}

TmSystem::TmSystem(SystemConfig config) : config_(std::move(config)) {
  if (config_.num_cores < 1) fail(ErrorKind::InvalidConfig, "need >= 1 core");
  for (std::uint32_t i = 0; i < config_.num_cores; ++i)
    cores_.push_back(std::make_unique<Core>(config_.core));
}

void TmSystem::apply(const InstructionStream& stream, std::string model_id) {
  decode(stream);  // full validation before any core is touched

  std::vector<ClassRange> partition =
      config_.class_partition.empty()
          ? balanced_partition(stream.num_classes, config_.num_cores)
          : config_.class_partition;
  if (partition.size() != cores_.size())
    fail(ErrorKind::InvalidConfig,
         "partition must assign exactly one range per core");
  auto subs = split_instructions(stream, partition);

  for (std::size_t i = 0; i < cores_.size(); ++i) {
    if (partition[i].size() == 0) continue;  // idle core, no classes assigned
    cores_[i]->feed_packet(make_instruction_packet(subs[i], true));
  }
  partition_ = std::move(partition);
  num_classes_ = stream.num_classes;
  model_id_ = std::move(model_id);
  ++generation_;
}

std::uint64_t TmSystem::reprogram(const InstructionStream& stream,
                                  std::string model_id) {
  apply(stream, std::move(model_id));
  return generation_;
}

void TmSystem::queue_reprogram(InstructionStream stream,
                               std::string model_id) {
  decode(stream);  // reject malformed streams at queue time
  pending_ = Pending{std::move(stream), std::move(model_id)};
}

TmSystem::SystemRun TmSystem::run(std::span<const BoolVector> datapoints) {
  if (pending_) {
    Pending p = std::move(*pending_);
    pending_.reset();
    apply(p.stream, std::move(p.model_id));
  }
  if (!programmed())
    fail(ErrorKind::State, "system has no programmed model");
  if (datapoints.empty()) fail(ErrorKind::InvalidBatch, "no datapoints");

  const StreamPacket packet = make_feature_packet(datapoints, false);
  const auto words = serialize_packet(packet, config_.core.header_width);

  std::vector<std::uint64_t> start(cores_.size());
  for (std::size_t i = 0; i < cores_.size(); ++i)
    start[i] = cores_[i]->cycle_count();

  SystemRun out;
  out.generation = generation_;
  std::uint64_t batches = 0;
  std::vector<std::int32_t> merged(std::size_t{num_classes_} * kBatchLanes);

  for (const StreamWord& word : words) {
    bool executed = false;
    for (std::size_t i = 0; i < cores_.size(); ++i) {
      if (partition_[i].size() == 0) continue;
      const FeedResult r = cores_[i]->feed(word);
      executed = r.executed_batch;
      if (r.executed_batch) cores_[i]->drain_fifo();
    }
    if (!executed) continue;
    ++batches;
    // Merge the stored class sums of every core into the global table.
    for (std::size_t i = 0; i < cores_.size(); ++i) {
      if (partition_[i].size() == 0) continue;
      const auto sums = cores_[i]->batch_sums();
      std::copy(sums.begin(), sums.end(),
                merged.begin() +
                    std::size_t{partition_[i].begin} * kBatchLanes);
    }
    for (std::uint32_t lane = 0; lane < kBatchLanes; ++lane) {
      std::uint32_t best = 0;
      std::int32_t best_sum = merged[lane];
      for (std::uint32_t c = 1; c < num_classes_; ++c) {
        const std::int32_t sum = merged[std::size_t{c} * kBatchLanes + lane];
        if (sum > best_sum) {
          best = c;
          best_sum = sum;
        }
      }
      out.classifications.push_back(best);
    }
  }

  out.classifications.resize(datapoints.size());
  out.datapoints = datapoints.size();
  std::uint64_t max_core = 0;
  for (std::size_t i = 0; i < cores_.size(); ++i) {
    const std::uint64_t used = cores_[i]->cycle_count() - start[i];
    out.core_cycles.push_back(used);
    max_core = std::max(max_core, used);
  }
  out.cycles = max_core + batches * num_classes_;
  return out;
}

RunReport TmSystem::report(const SystemRun& run) const {
  return make_report(config_.core, run.cycles, run.classifications);
}

}  // namespace tmrt
