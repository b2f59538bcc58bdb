#include "driftbench/streams.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <unordered_map>

#include "driftbench/config_file.hpp"

namespace driftbench {

namespace {

std::string lower(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return text;
}

std::string unquote(const std::string& text) {
  const std::string t = trim(text);
  if (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front()) return t.substr(1, t.size() - 2);
  return t;
}

// Comma-separated fields; commas inside single or double quotes do not split.
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  char quote = 0;
  for (char c : line) {
    if (quote) {
      current += c;
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
      current += c;
    } else if (c == ',') {
      fields.push_back(unquote(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(unquote(current));
  return fields;
}

bool is_missing(const std::string& field) { return field.empty() || field == "?"; }

class Encoder {
 public:
  int encode(const std::string& value) {
    const auto [it, inserted] = codes_.try_emplace(value, static_cast<int>(names_.size()));
    if (inserted) names_.push_back(value);
    return it->second;
  }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::unordered_map<std::string, int> codes_;
  std::vector<std::string> names_;
};

enum class ColumnType { unknown, numeric, nominal };

// Shared row decoding for both formats once the header is known.
class RowDecoder {
 public:
  RowDecoder(std::string source, std::vector<std::string> names, std::vector<ColumnType> types,
             std::vector<std::vector<std::string>> allowed)
      : source_(std::move(source)), names_(std::move(names)), types_(std::move(types)), allowed_(std::move(allowed)),
        encoders_(names_.size()) {}

  LabeledInstance decode(const std::vector<std::string>& fields, std::size_t line, std::size_t index) {
    if (fields.size() != names_.size()) {
      throw ParseError(source_, line, "expected " + std::to_string(names_.size()) + " fields, got " +
                                          std::to_string(fields.size()));
    }
    LabeledInstance instance;
    instance.index = index;
    instance.features.reserve(names_.size() - 1);
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string& field = fields[c];
      if (is_missing(field)) throw ParseError(source_, line, "missing value in column '" + names_[c] + "'");
      if (!allowed_[c].empty() && std::find(allowed_[c].begin(), allowed_[c].end(), field) == allowed_[c].end()) {
        throw ParseError(source_, line, "value '" + field + "' not declared for attribute '" + names_[c] + "'");
      }
      const bool label = c + 1 == fields.size();
      if (label) {
        instance.label = encoders_[c].encode(field);
        break;
      }
      double value = 0.0;
      const bool numeric = try_parse_real(field, value);
      if (types_[c] == ColumnType::unknown) types_[c] = numeric ? ColumnType::numeric : ColumnType::nominal;
      if (types_[c] == ColumnType::numeric) {
        if (!numeric) throw ParseError(source_, line, "non-numeric value '" + field + "' in column '" + names_[c] + "'");
        instance.features.push_back(value);
      } else {
        instance.features.push_back(static_cast<double>(encoders_[c].encode(field)));
      }
    }
    return instance;
  }

  Stream finish(std::string name, std::vector<LabeledInstance> instances) const {
    Stream stream;
    stream.name = std::move(name);
    stream.feature_names.assign(names_.begin(), names_.end() - 1);
    stream.label_name = names_.back();
    stream.labels = encoders_.back().names();
    stream.instances = std::move(instances);
    return stream;
  }

 private:
  std::string source_;
  std::vector<std::string> names_;
  std::vector<ColumnType> types_;
  std::vector<std::vector<std::string>> allowed_;
  std::vector<Encoder> encoders_;
};

bool reached(std::optional<std::size_t> max_instances, std::size_t count) {
  return max_instances && count >= *max_instances;
}

std::string format_real(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

}  // namespace

std::vector<std::size_t> GroundTruth::change_points() const {
  std::vector<std::size_t> points;
  for (std::size_t i = 1; i < segments.size(); ++i) points.push_back(segments[i].start);
  return points;
}

nlohmann::json GroundTruth::to_json() const {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : segments) segs.push_back({{"start", s.start}, {"length", s.length}, {"concept", s.concept_name}});
  return {{"change_points", change_points()}, {"segments", std::move(segs)}};
}

GroundTruth GroundTruth::from_json(const nlohmann::json& doc) {
  GroundTruth truth;
  for (const auto& s : doc.at("segments")) {
    truth.segments.push_back({s.at("start").get<std::size_t>(), s.at("length").get<std::size_t>(),
                              s.at("concept").get<std::string>()});
  }
  return truth;
}

FileFormat format_from_path(const std::filesystem::path& path) {
  return lower(path.extension().string()) == ".arff" ? FileFormat::arff : FileFormat::csv;
}

FileFormat file_format_from_string(const std::string& name) {
  const std::string n = lower(name);
  if (n == "csv") return FileFormat::csv;
  if (n == "arff") return FileFormat::arff;
  throw UsageError("unknown file format '" + name + "' (expected csv or arff)");
}

Stream load_stream(const std::filesystem::path& path, std::optional<FileFormat> format,
                   std::optional<std::size_t> max_instances) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  const FileFormat fmt = format.value_or(format_from_path(path));
  Stream stream = fmt == FileFormat::arff ? parse_arff(in, path.string(), max_instances)
                                          : parse_csv(in, path.string(), max_instances);
  stream.name = path.stem().string();
  return stream;
}

Stream parse_csv(std::istream& in, const std::string& name, std::optional<std::size_t> max_instances) {
  std::string line;
  std::size_t number = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    header = split_fields(line);
    break;
  }
  if (header.empty()) throw ParseError(name, std::max<std::size_t>(number, 1), "empty file, expected a header row");
  if (header.size() < 2) throw ParseError(name, number, "need at least one feature column and a label column");

  RowDecoder decoder(name, header, std::vector<ColumnType>(header.size(), ColumnType::unknown),
                     std::vector<std::vector<std::string>>(header.size()));
  std::vector<LabeledInstance> instances;
  while (!reached(max_instances, instances.size()) && std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    instances.push_back(decoder.decode(split_fields(line), number, instances.size()));
  }
  return decoder.finish(name, std::move(instances));
}

Stream parse_arff(std::istream& in, const std::string& name, std::optional<std::size_t> max_instances) {
  std::vector<std::string> names;
  std::vector<ColumnType> types;
  std::vector<std::vector<std::string>> allowed;
  std::string line;
  std::size_t number = 0;
  bool in_data = false;
  while (!in_data && std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '%') continue;
    const std::string head = lower(t.substr(0, t.find_first_of(" \t")));
    if (head == "@relation") continue;
    if (head == "@data") {
      in_data = true;
      break;
    }
    if (head != "@attribute") throw ParseError(name, number, "unexpected header line '" + t + "'");

    std::string rest = trim(t.substr(head.size()));
    std::string attr;
    if (!rest.empty() && (rest.front() == '\'' || rest.front() == '"')) {
      const auto close = rest.find(rest.front(), 1);
      if (close == std::string::npos) throw ParseError(name, number, "unterminated attribute name");
      attr = rest.substr(1, close - 1);
      rest = trim(rest.substr(close + 1));
    } else {
      const auto space = rest.find_first_of(" \t");
      if (space == std::string::npos) throw ParseError(name, number, "attribute without a type");
      attr = rest.substr(0, space);
      rest = trim(rest.substr(space));
    }
    names.push_back(attr);
    if (!rest.empty() && rest.front() == '{') {
      if (rest.back() != '}') throw ParseError(name, number, "unterminated nominal value list");
      types.push_back(ColumnType::nominal);
      allowed.push_back(split_fields(rest.substr(1, rest.size() - 2)));
      continue;
    }
    const std::string type = lower(rest);
    if (type == "numeric" || type == "real" || type == "integer") {
      types.push_back(ColumnType::numeric);
      allowed.emplace_back();
      continue;
    }
    throw ParseError(name, number, "unsupported attribute type '" + rest + "' (numeric and nominal only)");
  }
  if (!in_data) throw ParseError(name, number, "missing @data section");
  if (names.size() < 2) throw ParseError(name, number, "need at least one feature attribute and a class attribute");

  RowDecoder decoder(name, names, types, allowed);
  std::vector<LabeledInstance> instances;
  while (!reached(max_instances, instances.size()) && std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '%') continue;
    if (t.front() == '{') throw ParseError(name, number, "sparse ARFF rows are not supported");
    instances.push_back(decoder.decode(split_fields(t), number, instances.size()));
  }
  return decoder.finish(name, std::move(instances));
}

void write_csv(const Stream& stream, std::ostream& out) {
  for (const auto& feature : stream.feature_names) out << feature << ',';
  out << stream.label_name << '\n';
  for (const auto& instance : stream.instances) {
    for (double v : instance.features) out << format_real(v) << ',';
    out << stream.labels.at(static_cast<std::size_t>(instance.label)) << '\n';
  }
}

void write_csv(const Stream& stream, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(stream, out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string to_string(ConceptKind kind) { return kind == ConceptKind::gaussian ? "gaussian" : "linear"; }

ConceptKind concept_kind_from_string(const std::string& name) {
  if (name == "linear") return ConceptKind::linear;
  if (name == "gaussian") return ConceptKind::gaussian;
  throw UsageError("unknown concept kind '" + name + "' (expected linear or gaussian)");
}

int hadamard_sign(std::size_t row, std::size_t col) { return std::popcount(row & col) % 2 ? -1 : 1; }

std::vector<std::string> SynthSpec::concept_names() const {
  std::vector<std::string> names;
  for (const auto& c : order) {
    if (std::find(names.begin(), names.end(), c) == names.end()) names.push_back(c);
  }
  return names;
}

std::size_t SynthSpec::segment_length(std::size_t segment) const {
  return lengths.size() == 1 ? lengths.front() : lengths.at(segment);
}

void SynthSpec::validate(std::size_t min_segment) const {
  if (features == 0) throw UsageError("synthetic streams need at least one feature");
  if (!(separation >= 0.0)) throw UsageError("separation must be non-negative");
  if (!(noise > 0.0)) throw UsageError("noise must be positive");
  if (order.empty()) throw UsageError("order must list at least one concept");
  for (const auto& c : order) {
    if (c.empty()) throw UsageError("order contains an empty concept name");
  }
  if (lengths.size() != 1 && lengths.size() != order.size()) {
    throw UsageError("lengths must have one entry or one per segment (" + std::to_string(order.size()) + ")");
  }
  for (std::size_t s = 0; s < order.size(); ++s) {
    if (segment_length(s) < std::max<std::size_t>(min_segment, 1)) {
      throw UsageError("segment " + std::to_string(s) + " is shorter than the minimum of " +
                       std::to_string(std::max<std::size_t>(min_segment, 1)));
    }
  }
  const auto names = concept_names();
  for (const auto& [name, concept_spec] : concepts) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw UsageError("concept '" + name + "' is configured but not used in order");
    }
    if (concept_spec.feature && *concept_spec.feature >= features) {
      throw UsageError("concept '" + name + "' feature index out of range");
    }
    if (concept_spec.kind == ConceptKind::gaussian && concept_spec.labels < 2) {
      throw UsageError("gaussian concept '" + name + "' needs at least 2 labels");
    }
    if (!(concept_spec.gap >= 0.0)) throw UsageError("concept '" + name + "' gap must be non-negative");
  }
}

void SynthSpec::apply(const std::string& key, const std::string& value) {
  if (key == "features") {
    features = parse_unsigned(value, key);
  } else if (key == "separation") {
    separation = parse_real(value, key);
  } else if (key == "noise") {
    noise = parse_real(value, key);
  } else if (key == "seed") {
    seed = parse_unsigned(value, key);
  } else if (key == "order") {
    order = split(value, ',');
  } else if (key == "length") {
    lengths = {parse_unsigned(value, key)};
  } else if (key == "lengths") {
    lengths.clear();
    for (const auto& part : split(value, ',')) lengths.push_back(parse_unsigned(part, key));
  } else if (key.rfind("concept.", 0) == 0) {
    const std::string rest = key.substr(8);
    const auto dot = rest.rfind('.');
    if (dot == std::string::npos || dot == 0) throw UsageError("expected concept.<name>.<field>, got '" + key + "'");
    ConceptSpec& c = concepts[rest.substr(0, dot)];
    const std::string field = rest.substr(dot + 1);
    if (field == "kind") {
      c.kind = concept_kind_from_string(value);
    } else if (field == "feature") {
      c.feature = parse_unsigned(value, key);
    } else if (field == "labels") {
      c.labels = parse_unsigned(value, key);
    } else if (field == "gap") {
      c.gap = parse_real(value, key);
    } else {
      throw UsageError("unknown concept field '" + field + "' (kind, feature, labels, gap)");
    }
  } else {
    throw UsageError("unknown synthetic stream key '" + key +
                     "' (features, separation, noise, seed, order, length, lengths, concept.<name>.*)");
  }
}

SynthSpec SynthSpec::parse(std::istream& in, const std::string& source) {
  SynthSpec spec;
  for (const auto& entry : read_key_values(in, source)) {
    try {
      spec.apply(entry.key, entry.value);
    } catch (const UsageError& err) {
      throw ParseError(source, entry.line, err.what());
    }
  }
  return spec;
}

SynthSpec SynthSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open synthetic stream config " + path.string());
  return parse(in, path.string());
}

Stream synth_recurring(const SynthSpec& spec) {
  spec.validate();
  const auto names = spec.concept_names();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;

  Stream stream;
  stream.name = "synthetic";
  for (std::size_t f = 0; f < spec.features; ++f) stream.feature_names.push_back("x" + std::to_string(f));
  stream.truth.emplace();
  Encoder labels;

  std::size_t index = 0;
  for (std::size_t s = 0; s < spec.order.size(); ++s) {
    const std::string& name = spec.order[s];
    const auto position = static_cast<std::size_t>(std::find(names.begin(), names.end(), name) - names.begin());
    const auto found = spec.concepts.find(name);
    const ConceptSpec concept_spec = found == spec.concepts.end() ? ConceptSpec{} : found->second;
    const std::size_t feature = concept_spec.feature.value_or(position % spec.features);

    std::vector<double> mean(spec.features);
    for (std::size_t f = 0; f < spec.features; ++f) {
      mean[f] = 0.5 * spec.separation * spec.noise * hadamard_sign(position + 1, f);
    }
    std::uniform_int_distribution<std::size_t> pick(0, concept_spec.labels - 1);

    const std::size_t length = spec.segment_length(s);
    stream.truth->segments.push_back({index, length, name});
    for (std::size_t i = 0; i < length; ++i, ++index) {
      LabeledInstance instance;
      instance.index = index;
      instance.features.resize(spec.features);
      for (std::size_t f = 0; f < spec.features; ++f) instance.features[f] = mean[f] + spec.noise * normal(rng);
      std::size_t raw = 0;
      if (concept_spec.kind == ConceptKind::linear) {
        raw = instance.features[feature] > mean[feature] ? 1 : 0;
      } else {
        raw = pick(rng);
        const double centre = 0.5 * static_cast<double>(concept_spec.labels - 1);
        instance.features[feature] += (static_cast<double>(raw) - centre) * concept_spec.gap * spec.noise;
      }
      instance.label = labels.encode(std::to_string(raw));
      stream.instances.push_back(std::move(instance));
    }
  }
  stream.labels = labels.names();
  return stream;
}

}  // namespace driftbench
