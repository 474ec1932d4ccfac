#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tmrt/model.hpp"

namespace tmrt {

// One 16-bit compressed model word. Bit layout, MSB to LSB:
//   [15] pol   clause polarity, 1 = positive
//   [14] cc    toggles at each emitted clause boundary within a class
//   [13] e     toggles at each class boundary (cc is untouched there)
//   [12:1] offset   Boolean-feature index selected by the instruction
//   [0]  l     0 = the feature itself, 1 = its complement
struct IncludeInstruction {
  bool positive = false;
  bool clause_toggle = false;
  bool class_toggle = false;
  std::uint16_t offset = 0;  // < 4096
  bool complement = false;

  bool operator==(const IncludeInstruction&) const = default;
};

std::uint16_t pack_instruction(const IncludeInstruction& ins);
IncludeInstruction unpack_instruction(std::uint16_t word);

// A compressed model: the packed instruction words plus the architecture
// needed to rebuild the dense action tensor.
struct InstructionStream {
  std::uint32_t num_classes = 0;
  std::uint32_t clauses_per_class = 0;
  std::uint32_t num_features = 0;
  std::vector<std::uint16_t> words;

  bool operator==(const InstructionStream&) const = default;
};

// Compress a dense model: one instruction per Include action, classes
// ascending, clauses ascending, (offset, complement) ascending within a
// clause. All-Exclude clauses are skipped entirely (the toggle between their
// neighbors flips once); an all-Exclude class cannot be expressed and is
// rejected with a degenerate-class error.
InstructionStream encode(const TmModel& model);

// Rebuild the dense model. Each emitted clause is placed at the smallest
// polarity-consistent clause index after its predecessor, which reproduces
// the encoded model exactly whenever no two consecutive same-parity clause
// slots are empty (always true when every clause has an Include).
TmModel decode(const InstructionStream& stream);

struct CompressionReport {
  std::uint64_t include_count = 0;
  std::uint64_t instruction_bytes = 0;   // 2 bytes per instruction
  std::uint64_t dense_state_bytes = 0;   // 8-bit TA state baseline
  double ratio = 0.0;                    // 1 - instruction/dense
};

CompressionReport compression_report(const TmModel& model);

// Instruction stream files: magic "TMI1", then M/Cl/F/count as u32 LE, then
// the packed 16-bit words LE.
void save_instructions(const InstructionStream& stream,
                       const std::filesystem::path& path);
InstructionStream load_instructions(const std::filesystem::path& path);

}  // namespace tmrt
