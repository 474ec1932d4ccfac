#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "test_support.hpp"
#include "tmrt/core.hpp"

using namespace tmrt;
namespace tst = tmrt::testing;

namespace {

void program(Core& core, const TmModel& model) {
  core.feed_packet(make_instruction_packet(encode(model), true));
}

std::vector<std::uint32_t> classify(Core& core,
                                    const std::vector<BoolVector>& inputs) {
  const RunReport report =
      run_feature_packet(core, make_feature_packet(inputs, false),
                         inputs.size());
  return report.classifications;
}

TmModel worked_model() {
  TmModel model(1, 2, 2);
  model.set_action(0, 0, 0, true);
  model.set_action(0, 0, 3, true);
  model.set_action(0, 1, 1, true);
  return model;
}

// Two mirrored classes: class 0 fires on [1,0], class 1 on [0,1].
TmModel mirror_model() {
  TmModel model(2, 2, 2);
  model.set_action(0, 0, 0, true);
  model.set_action(0, 0, 3, true);
  model.set_action(1, 0, 1, true);
  model.set_action(1, 0, 2, true);
  return model;
}

}  // namespace

TEST_CASE("feed walks IDLE -> LOADING_INSTR -> IDLE -> LOADING_FEAT -> EXECUTING -> IDLE") {
  Core core(CoreConfig{});
  CHECK(core.phase() == Phase::Idle);

  const auto instr_words =
      serialize_packet(make_instruction_packet(encode(worked_model()), true),
                       core.config().header_width);
  REQUIRE(instr_words.size() == 4);  // header + 3 instructions
  CHECK(core.feed(instr_words[0]).phase == Phase::LoadingInstructions);
  CHECK(core.feed(instr_words[1]).phase == Phase::LoadingInstructions);
  CHECK(core.feed(instr_words[2]).phase == Phase::LoadingInstructions);
  CHECK(core.feed(instr_words[3]).phase == Phase::Idle);
  CHECK(core.model_loaded());

  const std::vector<BoolVector> batch = {{1, 0}};
  const auto feat_words = serialize_packet(make_feature_packet(batch, false),
                                           core.config().header_width);
  REQUIRE(feat_words.size() == 3);  // header + 2 feature words
  CHECK(core.feed(feat_words[0]).phase == Phase::LoadingFeatures);
  CHECK(core.feed(feat_words[1]).phase == Phase::LoadingFeatures);
  const FeedResult last = core.feed(feat_words[2]);
  CHECK(last.executed_batch);  // passed through Executing
  CHECK(last.phase == Phase::Idle);
  CHECK(core.fifo_size() == kBatchLanes);
}

TEST_CASE("premature continuation header is a protocol error") {
  Core core(CoreConfig{});
  const auto words =
      serialize_packet(make_instruction_packet(encode(worked_model()), true),
                       core.config().header_width);
  core.feed(words[0]);
  core.feed(words[1]);  // 1 of 3 declared instruction words
  const auto header2 =
      encode_header(FeatureHeader{false, 2, 1}, core.config().header_width);
  try {
    core.feed({true, header2[0]});
    FAIL("expected protocol error");
  } catch (const TmError& e) {
    CHECK(e.kind() == ErrorKind::Protocol);
  }
}

TEST_CASE("payload beyond the declared count is a protocol error") {
  Core core(CoreConfig{});
  program(core, worked_model());
  try {
    core.feed({false, 0x1234});
    FAIL("expected protocol error");
  } catch (const TmError& e) {
    CHECK(e.kind() == ErrorKind::Protocol);
  }
}

TEST_CASE("NEW-bit header mid-stream fully resets the machine") {
  Core core(CoreConfig{});
  program(core, worked_model());
  // Start a feature payload but do not finish it.
  const std::vector<BoolVector> one = {{1, 0}};
  const auto feat = serialize_packet(make_feature_packet(one, false),
                                     core.config().header_width);
  core.feed(feat[0]);
  core.feed(feat[1]);
  CHECK(core.phase() == Phase::LoadingFeatures);
  CHECK(core.cycle_count() > 0);

  const auto reset_header =
      encode_header(InstructionHeader{true, 1, 2, 3},
                    core.config().header_width);
  const FeedResult r = core.feed({true, reset_header[0]});
  CHECK(r.did_reset);
  CHECK(core.cycle_count() == 0);
  CHECK(core.fifo_size() == 0);
}

TEST_CASE("reset clears observable state") {
  Core core(CoreConfig{});
  program(core, worked_model());
  classify(core, {{1, 0}});
  core.reset();
  CHECK(core.phase() == Phase::Idle);
  CHECK(core.cycle_count() == 0);
  CHECK(core.fifo_size() == 0);
}

TEST_CASE("capacity errors map to the provisioned memory depths") {
  CoreConfig small;
  small.instr_mem_depth = 2;
  small.feature_mem_depth = 4;
  Core core(small);
  try {
    program(core, worked_model());  // needs 3 instruction words
    FAIL("expected capacity error");
  } catch (const TmError& e) {
    CHECK(e.kind() == ErrorKind::Capacity);
  }

  TmModel tiny(1, 2, 2);
  tiny.set_action(0, 0, 0, true);
  program(core, tiny);
  std::vector<BoolVector> wide_batch = {BoolVector(8, 1)};
  try {
    classify(core, wide_batch);  // 8 feature words > depth 4
    FAIL("expected capacity error");
  } catch (const TmError& e) {
    CHECK(e.kind() == ErrorKind::Capacity);
  }
}

TEST_CASE("features before any model are a state error") {
  Core core(CoreConfig{});
  try {
    classify(core, {{1, 0}});
    FAIL("expected state error");
  } catch (const TmError& e) {
    CHECK(e.kind() == ErrorKind::State);
  }
}

TEST_CASE("worked single-class model accumulates +1 in lane 0") {
  Core core(CoreConfig{});
  program(core, worked_model());
  const auto cls = classify(core, {{1, 0}});
  CHECK(cls == std::vector<std::uint32_t>{0});
  const auto sums = core.batch_sums();
  REQUIRE(sums.size() == kBatchLanes);  // one class
  CHECK(sums[0] == 1);
}

TEST_CASE("two-class mirror model classifies both lanes per the oracle") {
  Core core(CoreConfig{});
  const TmModel model = mirror_model();
  program(core, model);
  const std::vector<BoolVector> batch = {{1, 0}, {0, 1}};
  CHECK(classify(core, batch) == std::vector<std::uint32_t>{0, 1});
  CHECK(predict(model, batch[0]) == 0);
  CHECK(predict(model, batch[1]) == 1);
}

TEST_CASE("a batch of 32 identical datapoints classifies identically") {
  Core core(CoreConfig{});
  program(core, mirror_model());
  const std::vector<BoolVector> batch(32, BoolVector{0, 1});
  const auto cls = classify(core, batch);
  REQUIRE(cls.size() == 32);
  for (std::uint32_t c : cls) CHECK(c == 1);
}

TEST_CASE("instruction offset outside the feature range faults") {
  Core core(CoreConfig{});
  TmModel model(1, 2, 4);
  model.set_action(0, 0, 3, true);  // offset 3
  program(core, model);
  std::vector<BoolVector> narrow = {{1, 0}};  // only 2 feature words
  try {
    classify(core, narrow);
    FAIL("expected faulting instruction");
  } catch (const TmError& e) {
    CHECK(e.kind() == ErrorKind::FaultingInstruction);
  }
}

TEST_CASE("toggle sequence inconsistent with the declared class count") {
  Core core(CoreConfig{});
  // Declare 2 classes but stream only one class segment.
  StreamPacket packet;
  packet.header = InstructionHeader{true, 2, 2, 1};
  packet.payload = {0x8000};
  core.feed_packet(packet);
  try {
    classify(core, {{1, 0}});
    FAIL("expected malformed model");
  } catch (const TmError& e) {
    CHECK(e.kind() == ErrorKind::MalformedModel);
  }
}

TEST_CASE("lane independence: batched equals 32 single-lane runs") {
  std::mt19937_64 rng(79);
  for (int rep = 0; rep < 30; ++rep) {
    const std::uint32_t f = 1 + rng() % 24;
    const TmModel model = tst::random_sparse_model(
        rng, 1 + rng() % 6, 2 + 2 * (rng() % 10), f, {0.02, 0.15});
    std::vector<BoolVector> batch;
    for (int i = 0; i < 32; ++i) batch.push_back(tst::random_input(rng, f));

    Core batched(CoreConfig{});
    program(batched, model);
    const auto together = classify(batched, batch);

    Core single(CoreConfig{});
    program(single, model);
    for (int i = 0; i < 32; ++i) {
      const auto alone = classify(single, {batch[i]});
      CHECK(alone[0] == together[i]);
    }
  }
}

TEST_CASE("emulator matches the dense oracle on random sparse models") {
  std::mt19937_64 rng(83);
  for (int rep = 0; rep < 50; ++rep) {
    const std::uint32_t f = 1 + rng() % 64;
    const TmModel model = tst::random_sparse_model(
        rng, 1 + rng() % 8, 2 + 2 * (rng() % 16), f, {0.01, 0.10});
    Core core(CoreConfig{});
    program(core, model);
    std::vector<BoolVector> inputs;
    for (int i = 0; i < 40; ++i) inputs.push_back(tst::random_input(rng, f));
    const auto got = classify(core, inputs);
    for (std::size_t i = 0; i < inputs.size(); ++i)
      CHECK(got[i] == predict(model, inputs[i]));
  }
}

TEST_CASE("reprogramming soundness: model B fully displaces model A") {
  // A maps [1,0] -> 0; B disagrees on the same probe.
  const TmModel a = mirror_model();
  TmModel b(2, 2, 2);
  b.set_action(0, 0, 1, true);  // class 0 now fires on f1
  b.set_action(1, 0, 0, true);  // class 1 fires on f0
  const std::vector<BoolVector> probes = {{1, 0}, {0, 1}};
  REQUIRE(predict(a, probes[0]) != predict(b, probes[0]));

  Core core(CoreConfig{});
  program(core, a);
  CHECK(classify(core, probes) ==
        std::vector<std::uint32_t>{predict(a, probes[0]),
                                   predict(a, probes[1])});
  program(core, b);
  const auto after = classify(core, probes);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    CHECK(after[i] == predict(b, probes[i]));
    CHECK(after[i] != predict(a, probes[i]));
  }
}

TEST_CASE("single-instruction, single-class run costs exactly 6 cycles") {
  CHECK(cycle_model(1, 1, 0, 1) == 6);
  TmModel model(1, 2, 1);
  model.set_action(0, 0, 0, true);
  Core core(CoreConfig{});
  program(core, model);
  core.load_batch(std::vector<std::uint32_t>{1});
  const std::uint64_t before = core.cycle_count();
  core.execute_batch();
  CHECK(core.cycle_count() - before == 6);
}

TEST_CASE("cycle formula spot values") {
  CHECK(cycle_model(0, 5, 0, 1) == 3 + 5 + 1);
  CHECK(cycle_model(100, 10, 0, 2) == 228);
}

TEST_CASE("counted cycles equal the closed form on randomized runs") {
  std::mt19937_64 rng(89);
  for (int rep = 0; rep < 60; ++rep) {
    const std::uint32_t f = 1 + rng() % 32;
    const TmModel model = tst::random_sparse_model(
        rng, 1 + rng() % 6, 2 + 2 * (rng() % 8), f, {0.02, 0.2});
    const InstructionStream stream = encode(model);
    const std::uint32_t n_dp = 1 + rng() % 90;
    std::vector<BoolVector> inputs;
    for (std::uint32_t i = 0; i < n_dp; ++i)
      inputs.push_back(tst::random_input(rng, f));

    Core core(CoreConfig{});
    core.feed_packet(make_instruction_packet(stream, true));
    run_feature_packet(core, make_feature_packet(inputs, false), n_dp);

    const std::uint64_t batches = (n_dp + kBatchLanes - 1) / kBatchLanes;
    const std::uint64_t load_words = stream.words.size() + batches * f;
    CHECK(core.cycle_count() ==
          cycle_model(stream.words.size(), model.num_classes(), load_words,
                      batches));
  }
}

TEST_CASE("cycle model strictly increases in instructions and batches") {
  std::mt19937_64 rng(97);
  for (int rep = 0; rep < 200; ++rep) {
    const std::uint64_t n = rng() % 1000;
    const std::uint64_t m = 1 + rng() % 64;
    const std::uint64_t load = rng() % 1000;
    const std::uint64_t batches = 1 + rng() % 8;
    CHECK(cycle_model(n + 1, m, load, batches) >
          cycle_model(n, m, load, batches));
    CHECK(cycle_model(n, m, load, batches + 1) >
          cycle_model(n, m, load, batches));
  }
}

TEST_CASE("report converts cycles to latency, energy and throughput") {
  CoreConfig cfg;
  cfg.clock_hz = 200e6;
  cfg.power_watts = 0.351;
  RunReport r = make_report(cfg, 1488, std::vector<std::uint32_t>(32, 0));
  CHECK(r.latency_s == doctest::Approx(7.44e-6));
  CHECK(r.energy_j == doctest::Approx(2.61144e-6).epsilon(1e-4));
  CHECK(r.throughput_inf_per_s == doctest::Approx(32 / 7.44e-6));

  cfg.power_watts = 0.0;
  CHECK(make_report(cfg, 1488, {}).energy_j == 0.0);

  cfg.power_watts = 0.351;
  cfg.clock_hz = 400e6;
  RunReport fast = make_report(cfg, 1488, {});
  CHECK(fast.latency_s == doctest::Approx(7.44e-6 / 2));
  CHECK(fast.energy_j == doctest::Approx(cfg.power_watts * fast.latency_s));
}

TEST_CASE("output FIFO must be drained between batches") {
  Core core(CoreConfig{});
  program(core, mirror_model());
  const std::vector<BoolVector> inputs(40, BoolVector{1, 0});
  const auto words = serialize_packet(make_feature_packet(inputs, false),
                                      core.config().header_width);
  // Feed without draining: the second batch completion must overflow.
  CHECK_THROWS_AS(
      [&] {
        for (const auto& w : words) core.feed(w);
      }(),
      TmError);
}
