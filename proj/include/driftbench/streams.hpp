#ifndef DRIFTBENCH_STREAMS_HPP
#define DRIFTBENCH_STREAMS_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftbench/types.hpp"

namespace driftbench {

struct Segment {
  std::size_t start = 0;
  std::size_t length = 0;
  std::string concept_name;

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Known segment layout of a synthetic stream.
struct GroundTruth {
  std::vector<Segment> segments;

  /// Start index of every segment after the first.
  std::vector<std::size_t> change_points() const;

  nlohmann::json to_json() const;
  static GroundTruth from_json(const nlohmann::json& doc);

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct Stream {
  std::string name;
  std::vector<std::string> feature_names;
  std::string label_name = "label";
  std::vector<std::string> labels;  // label index -> original name
  std::vector<LabeledInstance> instances;
  std::optional<GroundTruth> truth;

  std::size_t feature_count() const { return feature_names.size(); }
  std::size_t label_count() const { return labels.size(); }
};

enum class FileFormat { csv, arff };

/// Picks the format from the extension (.arff, otherwise csv).
FileFormat format_from_path(const std::filesystem::path& path);
FileFormat file_format_from_string(const std::string& name);

/// CSV: header row, comma separated, last column is the label. ARFF: numeric
/// and nominal attributes only, last attribute is the label. Nominal values
/// (labels included) are encoded by order of first appearance. Missing
/// values are rejected.
Stream load_stream(const std::filesystem::path& path, std::optional<FileFormat> format = std::nullopt,
                   std::optional<std::size_t> max_instances = std::nullopt);
Stream parse_csv(std::istream& in, const std::string& name, std::optional<std::size_t> max_instances = std::nullopt);
Stream parse_arff(std::istream& in, const std::string& name, std::optional<std::size_t> max_instances = std::nullopt);

/// Writes features with round-trip precision and labels by name.
void write_csv(const Stream& stream, std::ostream& out);
void write_csv(const Stream& stream, const std::filesystem::path& path);

enum class ConceptKind { linear, gaussian };

std::string to_string(ConceptKind kind);
ConceptKind concept_kind_from_string(const std::string& name);

/// One synthetic concept. Every concept has its own feature mean: the
/// Hadamard row of its order of first appearance scaled by separation/2,
/// so any two concepts differ by `separation` noise sigmas on half of the
/// features.
///   linear:   label = 1 if x[feature] > concept mean of that feature
///   gaussian: label uniform in [0, labels); feature `feature` is shifted by
///             (label - (labels-1)/2) * gap
struct ConceptSpec {
  ConceptKind kind = ConceptKind::linear;
  std::optional<std::size_t> feature;  // defaults to the concept's position
  std::size_t labels = 2;
  double gap = 4.0;

  friend bool operator==(const ConceptSpec&, const ConceptSpec&) = default;
};

struct SynthSpec {
  std::size_t features = 32;
  double separation = 4.0;
  double noise = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::string> order{"A", "B", "A", "B"};
  std::vector<std::size_t> lengths{2000};  // one entry for all segments, or one per segment
  std::map<std::string, ConceptSpec> concepts;  // concepts not listed use the defaults

  /// Throws UsageError; `min_segment` is the shortest allowed segment.
  void validate(std::size_t min_segment = 1) const;
  std::size_t segment_length(std::size_t segment) const;
  /// Concept names in order of first appearance.
  std::vector<std::string> concept_names() const;

  /// Flat `key = value` lines; `#` starts a comment. Keys: features,
  /// separation, noise, seed, order (comma list), length, lengths (comma
  /// list), concept.<NAME>.kind|feature|labels|gap.
  static SynthSpec parse(std::istream& in, const std::string& source = "<config>");
  static SynthSpec load(const std::filesystem::path& path);
  void apply(const std::string& key, const std::string& value);
};

Stream synth_recurring(const SynthSpec& spec);

/// Hadamard-pattern sign, (-1)^popcount(row & col).
int hadamard_sign(std::size_t row, std::size_t col);

}  // namespace driftbench

#endif  // DRIFTBENCH_STREAMS_HPP
