#include "tmrt/stream.hpp"

#include <fstream>

namespace tmrt {

bool header_is_new_stream(const Header& h) {
  return std::visit([](const auto& v) { return v.new_stream; }, h);
}

bool header_is_feature(const Header& h) {
  return std::holds_alternative<FeatureHeader>(h);
}

unsigned header_word_count(unsigned width, bool is_feature) {
  if (width == 16) return is_feature ? 2 : 3;
  if (width == 32 || width == 64) return 1;
  fail(ErrorKind::InvalidConfig, "header width must be 16, 32 or 64");
}

std::uint64_t header_payload_words(const Header& h) {
  if (const auto* ih = std::get_if<InstructionHeader>(&h))
    return ih->num_instructions;
  const auto& fh = std::get<FeatureHeader>(h);
  return std::uint64_t{fh.words_per_batch} * fh.batch_count;
}

namespace {

void check_fits(std::uint64_t value, unsigned bits, const char* field) {
  if (bits < 64 && value > ((std::uint64_t{1} << bits) - 1))
    fail(ErrorKind::HeaderOverflow,
         std::string(field) + " does not fit " + std::to_string(bits) +
             " header bits");
}

constexpr std::uint64_t mask(unsigned bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

}  // namespace

std::vector<std::uint64_t> encode_header(const Header& h, unsigned width) {
  if (width != 16 && width != 32 && width != 64)
    fail(ErrorKind::InvalidConfig, "header width must be 16, 32 or 64");
  const bool feature = header_is_feature(h);
  const std::uint64_t new_bit = header_is_new_stream(h) ? 1 : 0;
  const std::uint64_t type_bit = feature ? 1 : 0;

  std::uint64_t fields[3] = {0, 0, 0};
  unsigned nfields = 0;
  if (feature) {
    const auto& fh = std::get<FeatureHeader>(h);
    fields[0] = fh.words_per_batch;
    fields[1] = fh.batch_count;
    nfields = 2;
  } else {
    const auto& ih = std::get<InstructionHeader>(h);
    fields[0] = ih.num_classes;
    fields[1] = ih.num_clauses;
    fields[2] = ih.num_instructions;
    nfields = 3;
  }

  if (width == 16) {
    for (unsigned i = 0; i < nfields; ++i)
      check_fits(fields[i], 14, "16-bit header field");
    std::vector<std::uint64_t> words;
    words.push_back((new_bit << 15) | (type_bit << 14) | fields[0]);
    for (unsigned i = 1; i < nfields; ++i) words.push_back(fields[i]);
    return words;
  }

  // Field bit widths, MSB-side field first; fields pack contiguously down
  // to bit 0, leaving 64-bit slack bits reserved-zero.
  unsigned widths[3];
  if (width == 32) {
    if (feature) {
      widths[0] = 14; widths[1] = 16;
    } else {
      widths[0] = 6; widths[1] = 8; widths[2] = 16;
    }
  } else {
    if (feature) {
      widths[0] = 28; widths[1] = 32;
    } else {
      widths[0] = 12; widths[1] = 16; widths[2] = 32;
    }
  }
  const char* names[3];
  if (feature) {
    names[0] = "words_per_batch"; names[1] = "batch_count"; names[2] = "";
  } else {
    names[0] = "num_classes"; names[1] = "num_clauses";
    names[2] = "num_instructions";
  }

  std::uint64_t word = (new_bit << (width - 1)) | (type_bit << (width - 2));
  unsigned shift = 0;
  for (unsigned i = 0; i < nfields; ++i)
    shift += widths[i];
  for (unsigned i = 0; i < nfields; ++i) {
    check_fits(fields[i], widths[i], names[i]);
    shift -= widths[i];
    word |= fields[i] << shift;
  }
  return {word};
}

Header decode_header(std::span<const std::uint64_t> words, unsigned width) {
  if (width != 16 && width != 32 && width != 64)
    fail(ErrorKind::InvalidConfig, "header width must be 16, 32 or 64");
  if (words.empty()) fail(ErrorKind::MalformedHeader, "empty header");
  const std::uint64_t w0 = words[0];
  if (w0 > mask(width))
    fail(ErrorKind::MalformedHeader, "header word wider than stream width");
  const bool new_stream = (w0 >> (width - 1)) & 1;
  const bool feature = (w0 >> (width - 2)) & 1;
  if (words.size() != header_word_count(width, feature))
    fail(ErrorKind::MalformedHeader, "wrong header word count");

  if (width == 16) {
    std::uint64_t fields[3] = {w0 & mask(14), 0, 0};
    for (std::size_t i = 1; i < words.size(); ++i) {
      if (words[i] & ~mask(14))
        fail(ErrorKind::MalformedHeader,
             "reserved bits set in 16-bit header extension word");
      fields[i] = words[i];
    }
    if (feature)
      return FeatureHeader{new_stream, static_cast<std::uint32_t>(fields[0]),
                           static_cast<std::uint32_t>(fields[1])};
    return InstructionHeader{new_stream, static_cast<std::uint32_t>(fields[0]),
                             static_cast<std::uint32_t>(fields[1]),
                             static_cast<std::uint32_t>(fields[2])};
  }

  if (width == 64 && ((w0 >> 60) & 0x3) != 0)
    fail(ErrorKind::MalformedHeader, "reserved bits [61:60] set in 64-bit header");

  if (width == 32) {
    if (feature)
      return FeatureHeader{new_stream,
                           static_cast<std::uint32_t>((w0 >> 16) & mask(14)),
                           static_cast<std::uint32_t>(w0 & mask(16))};
    return InstructionHeader{new_stream,
                             static_cast<std::uint32_t>((w0 >> 24) & mask(6)),
                             static_cast<std::uint32_t>((w0 >> 16) & mask(8)),
                             static_cast<std::uint32_t>(w0 & mask(16))};
  }
  if (feature)
    return FeatureHeader{new_stream,
                         static_cast<std::uint32_t>((w0 >> 32) & mask(28)),
                         static_cast<std::uint32_t>(w0 & mask(32))};
  return InstructionHeader{new_stream,
                           static_cast<std::uint32_t>((w0 >> 48) & mask(12)),
                           static_cast<std::uint32_t>((w0 >> 32) & mask(16)),
                           static_cast<std::uint32_t>(w0 & mask(32))};
}

std::vector<std::uint32_t> transpose_batch(
    std::span<const BoolVector> datapoints) {
  if (datapoints.empty())
    fail(ErrorKind::InvalidBatch, "batch has no datapoints");
  if (datapoints.size() > kBatchLanes)
    fail(ErrorKind::InvalidBatch, "batch exceeds 32 lanes");
  const std::size_t f = datapoints[0].size();
  std::vector<std::uint32_t> words(f, 0);
  for (std::size_t lane = 0; lane < datapoints.size(); ++lane) {
    if (datapoints[lane].size() != f)
      fail(ErrorKind::InvalidBatch, "inconsistent feature count across lanes");
    for (std::size_t i = 0; i < f; ++i)
      if (datapoints[lane][i]) words[i] |= std::uint32_t{1} << lane;
  }
  return words;
}

std::vector<BoolVector> extract_lanes(std::span<const std::uint32_t> words,
                                      std::uint32_t lanes) {
  if (lanes > kBatchLanes) fail(ErrorKind::InvalidBatch, "more than 32 lanes");
  std::vector<BoolVector> out(lanes, BoolVector(words.size(), 0));
  for (std::size_t i = 0; i < words.size(); ++i)
    for (std::uint32_t lane = 0; lane < lanes; ++lane)
      out[lane][i] = (words[i] >> lane) & 1;
  return out;
}

StreamPacket make_instruction_packet(const InstructionStream& stream,
                                     bool new_stream) {
  StreamPacket packet;
  packet.header = InstructionHeader{
      new_stream, stream.num_classes, stream.clauses_per_class,
      static_cast<std::uint32_t>(stream.words.size())};
  packet.payload.assign(stream.words.begin(), stream.words.end());
  return packet;
}

StreamPacket packetize_features(
    const std::vector<std::vector<std::uint32_t>>& batches, bool new_stream) {
  if (batches.empty()) fail(ErrorKind::InvalidBatch, "no batches to packetize");
  const std::size_t wpb = batches[0].size();
  if (wpb == 0) fail(ErrorKind::InvalidBatch, "batches have zero words");
  StreamPacket packet;
  for (const auto& batch : batches) {
    if (batch.size() != wpb)
      fail(ErrorKind::InvalidBatch, "inconsistent words-per-batch");
    packet.payload.insert(packet.payload.end(), batch.begin(), batch.end());
  }
  packet.header = FeatureHeader{new_stream, static_cast<std::uint32_t>(wpb),
                                static_cast<std::uint32_t>(batches.size())};
  return packet;
}

StreamPacket make_feature_packet(std::span<const BoolVector> datapoints,
                                 bool new_stream) {
  if (datapoints.empty())
    fail(ErrorKind::InvalidBatch, "no datapoints to packetize");
  std::vector<std::vector<std::uint32_t>> batches;
  for (std::size_t start = 0; start < datapoints.size(); start += kBatchLanes) {
    const std::size_t n = std::min<std::size_t>(kBatchLanes,
                                                datapoints.size() - start);
    batches.push_back(transpose_batch(datapoints.subspan(start, n)));
  }
  return packetize_features(batches, new_stream);
}

std::vector<StreamWord> serialize_packet(const StreamPacket& packet,
                                         unsigned width) {
  if (packet.payload.size() != header_payload_words(packet.header))
    fail(ErrorKind::Protocol,
         "payload length disagrees with the declared header count");
  std::vector<StreamWord> words;
  for (std::uint64_t w : encode_header(packet.header, width))
    words.push_back({true, w});
  const bool feature = header_is_feature(packet.header);
  for (std::uint32_t w : packet.payload) {
    if (!feature && w > 0xFFFF)
      fail(ErrorKind::Protocol, "instruction payload word exceeds 16 bits");
    words.push_back({false, w});
  }
  return words;
}

StreamParser::StreamParser(unsigned width) : width_(width) {
  header_word_count(width, false);  // validates the width
}

StreamParser::Expected StreamParser::expected() const {
  if (in_payload_)
    return {false, header_is_feature(header_) ? 32u : 16u};
  return {true, width_};
}

std::optional<StreamPacket> StreamParser::push(std::uint64_t word) {
  if (!in_payload_) {
    if (word > mask(width_))
      fail(ErrorKind::MalformedHeader, "header word wider than stream width");
    header_words_.push_back(word);
    const bool feature = (header_words_[0] >> (width_ - 2)) & 1;
    if (header_words_.size() < header_word_count(width_, feature))
      return std::nullopt;
    header_ = decode_header(header_words_, width_);
    header_words_.clear();
    payload_remaining_ = header_payload_words(header_);
    payload_.clear();
    if (payload_remaining_ == 0) return StreamPacket{header_, {}};
    in_payload_ = true;
    return std::nullopt;
  }
  const unsigned bits = header_is_feature(header_) ? 32 : 16;
  if (word > mask(bits))
    fail(ErrorKind::Protocol, "payload word wider than its declared kind");
  payload_.push_back(static_cast<std::uint32_t>(word));
  if (--payload_remaining_ == 0) {
    in_payload_ = false;
    return StreamPacket{header_, std::move(payload_)};
  }
  return std::nullopt;
}

namespace {

constexpr char kStreamMagic[4] = {'T', 'M', 'F', '1'};

void write_word_le(std::ostream& out, std::uint64_t word, unsigned bits) {
  for (unsigned i = 0; i < bits / 8; ++i)
    out.put(static_cast<char>((word >> (8 * i)) & 0xFF));
}

}  // namespace

void save_stream_file(const StreamFile& file,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(kStreamMagic, 4);
  out.put(static_cast<char>(file.width));
  for (const auto& packet : file.packets) {
    for (std::uint64_t w : encode_header(packet.header, file.width))
      write_word_le(out, w, file.width);
    if (packet.payload.size() != header_payload_words(packet.header))
      fail(ErrorKind::Protocol,
           "payload length disagrees with the declared header count");
    const unsigned bits = header_is_feature(packet.header) ? 32 : 16;
    for (std::uint32_t w : packet.payload) write_word_le(out, w, bits);
  }
  if (!out) fail(ErrorKind::Io, "short write to " + path.string());
}

StreamFile load_stream_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kStreamMagic))
    fail(ErrorKind::Parse, path.string() + ": not a TMF1 stream file");
  const int width_byte = in.get();
  if (width_byte != 16 && width_byte != 32 && width_byte != 64)
    fail(ErrorKind::Parse, path.string() + ": bad stream width byte");

  StreamFile file;
  file.width = static_cast<unsigned>(width_byte);
  StreamParser parser(file.width);
  while (true) {
    const auto want = parser.expected();
    std::uint64_t word = 0;
    unsigned char byte = 0;
    unsigned i = 0;
    for (; i < want.bits / 8; ++i) {
      const int c = in.get();
      if (c == EOF) break;
      byte = static_cast<unsigned char>(c);
      word |= static_cast<std::uint64_t>(byte) << (8 * i);
    }
    if (i == 0) break;  // clean EOF at a word boundary
    if (i < want.bits / 8)
      fail(ErrorKind::Parse, path.string() + ": truncated stream word");
    if (auto packet = parser.push(word)) file.packets.push_back(*packet);
  }
  if (!parser.idle())
    fail(ErrorKind::Parse, path.string() + ": stream ends mid-packet");
  return file;
}

}  // namespace tmrt
