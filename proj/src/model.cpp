#include "tmrt/model.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace tmrt {

TmModel::TmModel(std::uint32_t num_classes, std::uint32_t clauses_per_class,
                 std::uint32_t num_features)
    : classes_(num_classes), clauses_(clauses_per_class),
      features_(num_features) {
  if (classes_ < 1) fail(ErrorKind::InvalidConfig, "model needs >= 1 class");
  if (clauses_ < 2 || clauses_ % 2 != 0)
    fail(ErrorKind::InvalidConfig,
         "clauses per class must be even and >= 2 so polarities balance");
  if (features_ < 1) fail(ErrorKind::InvalidConfig, "model needs >= 1 feature");
  actions_.assign(total_automata(), 0);
}

std::size_t TmModel::index(std::uint32_t cls, std::uint32_t clause,
                           std::uint32_t literal) const {
  if (cls >= classes_ || clause >= clauses_ || literal >= num_literals())
    fail(ErrorKind::IndexRange, "action index out of range");
  return (std::size_t{cls} * clauses_ + clause) * num_literals() + literal;
}

std::uint64_t TmModel::include_count() const {
  return static_cast<std::uint64_t>(
      std::count(actions_.begin(), actions_.end(), std::uint8_t{1}));
}

BoolVector booleanize(std::span<const double> raw,
                      const std::vector<std::vector<double>>& thresholds) {
  if (thresholds.empty())
    fail(ErrorKind::InvalidConfig, "booleanize: empty threshold set");
  if (raw.size() != thresholds.size())
    fail(ErrorKind::InvalidConfig,
         "booleanize: one threshold list required per raw dimension");
  BoolVector out;
  for (std::size_t d = 0; d < raw.size(); ++d) {
    if (thresholds[d].empty())
      fail(ErrorKind::InvalidConfig,
           "booleanize: dimension " + std::to_string(d) + " has no thresholds");
    for (double t : thresholds[d]) out.push_back(raw[d] >= t ? 1 : 0);
  }
  return out;
}

int literal_value(const BoolVector& x, std::uint32_t literal) {
  const auto f = static_cast<std::uint32_t>(x.size());
  if (literal >= 2 * f) fail(ErrorKind::IndexRange, "literal index out of range");
  return literal < f ? x[literal] : 1 - x[literal - f];
}

int clause_output(const TmModel& model, std::uint32_t cls, std::uint32_t clause,
                  const BoolVector& x) {
  bool any_include = false;
  for (std::uint32_t l = 0; l < model.num_literals(); ++l) {
    if (!model.action(cls, clause, l)) continue;
    any_include = true;
    if (literal_value(x, l) == 0) return 0;
  }
  return any_include ? 1 : 0;
}

std::vector<int> class_sums(const TmModel& model, const BoolVector& x) {
  std::vector<int> sums(model.num_classes(), 0);
  for (std::uint32_t c = 0; c < model.num_classes(); ++c)
    for (std::uint32_t j = 0; j < model.clauses_per_class(); ++j)
      sums[c] += clause_polarity(j) * clause_output(model, c, j, x);
  return sums;
}

std::uint32_t predict(const TmModel& model, const BoolVector& x) {
  const auto sums = class_sums(model, x);
  std::uint32_t best = 0;
  for (std::uint32_t c = 1; c < sums.size(); ++c)
    if (sums[c] > sums[best]) best = c;
  return best;
}

double sparsity(const TmModel& model) {
  return static_cast<double>(model.include_count()) /
         static_cast<double>(model.total_automata());
}

namespace {

constexpr char kModelMagic[4] = {'T', 'M', 'M', '1'};

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

bool is_json_path(const std::filesystem::path& path) {
  return path.extension() == ".json";
}

void save_model_json(const TmModel& model, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["num_classes"] = model.num_classes();
  doc["clauses_per_class"] = model.clauses_per_class();
  doc["num_features"] = model.num_features();
  auto& actions = doc["actions"] = nlohmann::json::array();
  for (std::uint32_t c = 0; c < model.num_classes(); ++c) {
    nlohmann::json per_class = nlohmann::json::array();
    for (std::uint32_t j = 0; j < model.clauses_per_class(); ++j) {
      nlohmann::json per_clause = nlohmann::json::array();
      for (std::uint32_t l = 0; l < model.num_literals(); ++l)
        per_clause.push_back(model.action(c, j, l) ? 1 : 0);
      per_class.push_back(std::move(per_clause));
    }
    actions.push_back(std::move(per_class));
  }
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << doc.dump(1, '\t') << '\n';
}

TmModel load_model_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
    TmModel model(doc.at("num_classes").get<std::uint32_t>(),
                  doc.at("clauses_per_class").get<std::uint32_t>(),
                  doc.at("num_features").get<std::uint32_t>());
    const auto& actions = doc.at("actions");
    if (actions.size() != model.num_classes())
      fail(ErrorKind::Parse, "actions/class count mismatch");
    for (std::uint32_t c = 0; c < model.num_classes(); ++c) {
      if (actions[c].size() != model.clauses_per_class())
        fail(ErrorKind::Parse, "actions/clause count mismatch");
      for (std::uint32_t j = 0; j < model.clauses_per_class(); ++j) {
        if (actions[c][j].size() != model.num_literals())
          fail(ErrorKind::Parse, "actions/literal count mismatch");
        for (std::uint32_t l = 0; l < model.num_literals(); ++l)
          model.set_action(c, j, l, actions[c][j][l].get<int>() != 0);
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

}  // namespace

void save_model(const TmModel& model, const std::filesystem::path& path) {
  if (is_json_path(path)) {
    save_model_json(model, path);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(kModelMagic, 4);
  write_u32le(out, model.num_classes());
  write_u32le(out, model.clauses_per_class());
  write_u32le(out, model.num_features());
  const auto& actions = model.actions();
  std::uint8_t byte = 0;
  int nbits = 0;
  for (std::uint8_t a : actions) {
    byte |= static_cast<std::uint8_t>(a << nbits);
    if (++nbits == 8) {
      out.put(static_cast<char>(byte));
      byte = 0;
      nbits = 0;
    }
  }
  if (nbits > 0) out.put(static_cast<char>(byte));
  if (!out) fail(ErrorKind::Io, "short write to " + path.string());
}

TmModel load_model(const std::filesystem::path& path) {
  if (is_json_path(path)) return load_model_json(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kModelMagic))
    fail(ErrorKind::Parse, path.string() + ": not a TMM1 model file");
  const std::uint32_t classes = read_u32le(in);
  const std::uint32_t clauses = read_u32le(in);
  const std::uint32_t features = read_u32le(in);
  TmModel model(classes, clauses, features);
  const std::uint64_t total = model.total_automata();
  const std::uint64_t nbytes = (total + 7) / 8;
  std::vector<unsigned char> packed(nbytes);
  in.read(reinterpret_cast<char*>(packed.data()),
          static_cast<std::streamsize>(nbytes));
  if (!in) fail(ErrorKind::Parse, path.string() + ": truncated action tensor");
  std::uint64_t i = 0;
  for (std::uint32_t c = 0; c < classes; ++c)
    for (std::uint32_t j = 0; j < clauses; ++j)
      for (std::uint32_t l = 0; l < model.num_literals(); ++l, ++i)
        model.set_action(c, j, l, (packed[i / 8] >> (i % 8)) & 1);
  return model;
}

}  // namespace tmrt
