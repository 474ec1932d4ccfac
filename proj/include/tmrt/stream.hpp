#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "tmrt/instructions.hpp"
#include "tmrt/model.hpp"

namespace tmrt {

// Datapoints processed per batch, one per bit of the 32-bit datapath words.
inline constexpr std::uint32_t kBatchLanes = 32;

// Programming headers. The MSB of the first word is the NEW bit (resets the
// machine), the next bit the TYPE bit (0 = instructions, 1 = features).
// Field layouts per width:
//   32-bit instr:   [29:24] classes (6b)  [23:16] clauses (8b)  [15:0] count (16b)
//   32-bit feature: [29:16] words/batch (14b)                   [15:0] batches (16b)
//   64-bit instr:   [59:48] classes (12b) [47:32] clauses (16b) [31:0] count (32b)
//   64-bit feature: [59:32] words/batch (28b)                   [31:0] batches (32b)
//                   (64-bit slack bits [61:60] are reserved-zero)
//   16-bit: word0 carries the first field in [13:0]; extension words carry
//   the remaining fields in [13:0] with [15:14] reserved-zero (instruction
//   headers are 3 words total, feature headers 2).
struct InstructionHeader {
  bool new_stream = true;
  std::uint32_t num_classes = 0;
  std::uint32_t num_clauses = 0;
  std::uint32_t num_instructions = 0;

  bool operator==(const InstructionHeader&) const = default;
};

struct FeatureHeader {
  bool new_stream = false;
  std::uint32_t words_per_batch = 0;
  std::uint32_t batch_count = 0;

  bool operator==(const FeatureHeader&) const = default;
};

using Header = std::variant<InstructionHeader, FeatureHeader>;

bool header_is_new_stream(const Header& h);
bool header_is_feature(const Header& h);

// Number of words a header occupies at the given width.
unsigned header_word_count(unsigned width, bool is_feature);

// Word count declared by a header's payload (instructions, or
// words_per_batch x batch_count feature words).
std::uint64_t header_payload_words(const Header& h);

std::vector<std::uint64_t> encode_header(const Header& h, unsigned width);
Header decode_header(std::span<const std::uint64_t> words, unsigned width);

// Transpose up to 32 datapoints (same F) into F lane words: bit b of word i
// is feature i of datapoint b. Missing lanes are zero-filled.
std::vector<std::uint32_t> transpose_batch(std::span<const BoolVector> datapoints);

// Inverse of transpose_batch for the first `lanes` datapoints.
std::vector<BoolVector> extract_lanes(std::span<const std::uint32_t> words,
                                      std::uint32_t lanes);

// One header plus its payload words (16-bit instruction words or 32-bit
// feature words, stored zero-extended).
struct StreamPacket {
  Header header;
  std::vector<std::uint32_t> payload;
};

StreamPacket make_instruction_packet(const InstructionStream& stream,
                                     bool new_stream = true);

// Packetize pre-transposed batches (each F lane words).
StreamPacket packetize_features(
    const std::vector<std::vector<std::uint32_t>>& batches,
    bool new_stream = false);

// Packetize raw datapoints: chunks of 32 lanes, final batch zero-padded.
StreamPacket make_feature_packet(std::span<const BoolVector> datapoints,
                                 bool new_stream = false);

// One word of the modeled AXI-Stream queue. Ordering is lossless and the
// header/payload distinction rides the sideband tag; widths are implied
// (headers use the configured width, instruction payloads 16 bits, feature
// payloads 32).
struct StreamWord {
  bool is_header = false;
  std::uint64_t bits = 0;
};

std::vector<StreamWord> serialize_packet(const StreamPacket& packet,
                                         unsigned width);

// Incremental count-driven parser over untagged words: headers are
// self-describing, so packet boundaries are recoverable with no out-of-band
// state beyond the configured width.
class StreamParser {
public:
  explicit StreamParser(unsigned width);

  struct Expected {
    bool header = true;
    unsigned bits = 0;
  };
  // What the next pushed word must be (and how wide it is on disk).
  Expected expected() const;

  // Consume one word; returns a completed packet when one closes.
  std::optional<StreamPacket> push(std::uint64_t word);

  bool idle() const { return header_words_.empty() && !in_payload_; }
  unsigned width() const { return width_; }

private:
  unsigned width_;
  std::vector<std::uint64_t> header_words_;
  bool in_payload_ = false;
  Header header_{};
  std::uint64_t payload_remaining_ = 0;
  std::vector<std::uint32_t> payload_;
};

// Stream files: magic "TMF1", one byte holding the header width in bits,
// then the raw words back to back, each little-endian in its natural byte
// width (headers width/8, instruction words 2, feature words 4).
struct StreamFile {
  unsigned width = 32;
  std::vector<StreamPacket> packets;
};

void save_stream_file(const StreamFile& file, const std::filesystem::path& path);
StreamFile load_stream_file(const std::filesystem::path& path);

}  // namespace tmrt
