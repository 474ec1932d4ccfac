#include "tmrt/instructions.hpp"

#include <algorithm>
#include <fstream>

namespace tmrt {

std::uint16_t pack_instruction(const IncludeInstruction& ins) {
  if (ins.offset >= kMaxFeatures)
    fail(ErrorKind::OffsetOverflow, "offset does not fit 12 bits");
  return static_cast<std::uint16_t>(
      (ins.positive ? 1u << 15 : 0u) | (ins.clause_toggle ? 1u << 14 : 0u) |
      (ins.class_toggle ? 1u << 13 : 0u) |
      (static_cast<unsigned>(ins.offset) << 1) | (ins.complement ? 1u : 0u));
}

IncludeInstruction unpack_instruction(std::uint16_t word) {
  IncludeInstruction ins;
  ins.positive = (word >> 15) & 1;
  ins.clause_toggle = (word >> 14) & 1;
  ins.class_toggle = (word >> 13) & 1;
  ins.offset = static_cast<std::uint16_t>((word >> 1) & 0xFFF);
  ins.complement = word & 1;
  return ins;
}

InstructionStream encode(const TmModel& model) {
  if (model.num_features() > kMaxFeatures)
    fail(ErrorKind::OffsetOverflow,
         "model has " + std::to_string(model.num_features()) +
             " features; the 12-bit offset field caps F at 4096");
  InstructionStream stream;
  stream.num_classes = model.num_classes();
  stream.clauses_per_class = model.clauses_per_class();
  stream.num_features = model.num_features();

  const std::uint32_t f = model.num_features();
  bool cc = false;
  bool e = false;
  for (std::uint32_t c = 0; c < model.num_classes(); ++c) {
    bool class_has_clause = false;
    for (std::uint32_t j = 0; j < model.clauses_per_class(); ++j) {
      // (offset, complement) ascending: feature include before its complement.
      std::vector<IncludeInstruction> clause_words;
      for (std::uint32_t off = 0; off < f; ++off) {
        if (model.action(c, j, off))
          clause_words.push_back({clause_polarity(j) > 0, false, false,
                                  static_cast<std::uint16_t>(off), false});
        if (model.action(c, j, off + f))
          clause_words.push_back({clause_polarity(j) > 0, false, false,
                                  static_cast<std::uint16_t>(off), true});
      }
      if (clause_words.empty()) continue;  // skipped clause, no toggle burned
      if (class_has_clause) cc = !cc;
      class_has_clause = true;
      for (auto& ins : clause_words) {
        ins.clause_toggle = cc;
        ins.class_toggle = e;
        stream.words.push_back(pack_instruction(ins));
      }
    }
    if (!class_has_clause)
      fail(ErrorKind::DegenerateClass,
           "class " + std::to_string(c) +
               " has no Include actions and cannot be encoded");
    if (c + 1 < model.num_classes()) e = !e;
  }
  return stream;
}

namespace {

// Smallest clause index after `prev` whose polarity matches.
std::uint32_t next_clause_slot(std::int64_t prev, bool positive,
                               std::uint32_t clauses_per_class) {
  std::int64_t slot = prev + 1;
  const int want = positive ? 0 : 1;
  if (slot % 2 != want) ++slot;
  if (slot >= static_cast<std::int64_t>(clauses_per_class))
    fail(ErrorKind::MalformedStream,
         "stream encodes more clauses of one polarity than the declared "
         "clause count admits");
  return static_cast<std::uint32_t>(slot);
}

}  // namespace

TmModel decode(const InstructionStream& stream) {
  if (stream.num_features > kMaxFeatures)
    fail(ErrorKind::MalformedStream, "declared F exceeds the offset range");
  TmModel model(stream.num_classes, stream.clauses_per_class,
                stream.num_features);
  if (stream.words.empty())
    fail(ErrorKind::MalformedStream, "empty instruction stream");

  IncludeInstruction prev = unpack_instruction(stream.words[0]);
  if (prev.clause_toggle || prev.class_toggle)
    fail(ErrorKind::MalformedStream, "first instruction must have cc=0, e=0");

  std::uint32_t cls = 0;
  std::int64_t clause_slot = -1;
  IncludeInstruction last = prev;
  bool at_clause_start = true;

  auto place = [&](const IncludeInstruction& ins) {
    if (ins.offset >= stream.num_features)
      fail(ErrorKind::MalformedStream, "offset >= declared feature count");
    if (at_clause_start) {
      clause_slot = next_clause_slot(clause_slot, ins.positive,
                                     stream.clauses_per_class);
      at_clause_start = false;
    } else {
      if (ins.positive != last.positive)
        fail(ErrorKind::MalformedStream,
             "polarity changed without a clause toggle");
      const auto key = [](const IncludeInstruction& i) {
        return (static_cast<std::uint32_t>(i.offset) << 1) |
               (i.complement ? 1u : 0u);
      };
      if (key(ins) == key(last))
        fail(ErrorKind::DuplicateInclude,
             "duplicate include within a clause");
      if (key(ins) < key(last))
        fail(ErrorKind::MalformedStream,
             "includes not in ascending (offset, complement) order");
    }
    const std::uint32_t literal =
        ins.offset + (ins.complement ? stream.num_features : 0);
    model.set_action(cls, static_cast<std::uint32_t>(clause_slot), literal,
                     true);
    last = ins;
  };

  place(prev);
  for (std::size_t i = 1; i < stream.words.size(); ++i) {
    const IncludeInstruction ins = unpack_instruction(stream.words[i]);
    const bool class_flip = ins.class_toggle != last.class_toggle;
    const bool clause_flip = ins.clause_toggle != last.clause_toggle;
    if (class_flip) {
      if (clause_flip)
        fail(ErrorKind::MalformedStream,
             "cc and e toggled on the same instruction");
      if (++cls >= stream.num_classes)
        fail(ErrorKind::MalformedStream,
             "stream encodes more classes than declared");
      clause_slot = -1;
      at_clause_start = true;
    } else if (clause_flip) {
      at_clause_start = true;
    }
    place(ins);
  }
  if (cls + 1 != stream.num_classes)
    fail(ErrorKind::MalformedStream,
         "stream encodes fewer classes than declared (a class without "
         "Includes is not expressible)");
  return model;
}

CompressionReport compression_report(const TmModel& model) {
  CompressionReport report;
  report.include_count = model.include_count();
  report.instruction_bytes = 2 * report.include_count;
  report.dense_state_bytes = model.total_automata();  // 1 byte per TA state
  report.ratio = 1.0 - static_cast<double>(report.instruction_bytes) /
                           static_cast<double>(report.dense_state_bytes);
  return report;
}

namespace {

constexpr char kInstrMagic[4] = {'T', 'M', 'I', '1'};

void write_u32le(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF),
                         static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF),
                         static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

std::uint32_t read_u32le(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) fail(ErrorKind::Parse, "truncated file");
  return static_cast<std::uint32_t>(bytes[0]) |
         (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

}  // namespace

void save_instructions(const InstructionStream& stream,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(kInstrMagic, 4);
  write_u32le(out, stream.num_classes);
  write_u32le(out, stream.clauses_per_class);
  write_u32le(out, stream.num_features);
  write_u32le(out, static_cast<std::uint32_t>(stream.words.size()));
  for (std::uint16_t w : stream.words) {
    const char bytes[2] = {static_cast<char>(w & 0xFF),
                           static_cast<char>((w >> 8) & 0xFF)};
    out.write(bytes, 2);
  }
  if (!out) fail(ErrorKind::Io, "short write to " + path.string());
}

InstructionStream load_instructions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kInstrMagic))
    fail(ErrorKind::Parse, path.string() + ": not a TMI1 instruction file");
  InstructionStream stream;
  stream.num_classes = read_u32le(in);
  stream.clauses_per_class = read_u32le(in);
  stream.num_features = read_u32le(in);
  const std::uint32_t count = read_u32le(in);
  stream.words.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    unsigned char bytes[2];
    in.read(reinterpret_cast<char*>(bytes), 2);
    if (!in) fail(ErrorKind::Parse, path.string() + ": truncated word list");
    stream.words.push_back(static_cast<std::uint16_t>(
        bytes[0] | (static_cast<std::uint16_t>(bytes[1]) << 8)));
  }
  return stream;
}

}  // namespace tmrt
