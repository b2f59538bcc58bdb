#ifndef DRIFTBENCH_TYPES_HPP
#define DRIFTBENCH_TYPES_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace driftbench {

using FeatureVector = std::vector<double>;

/// Index into the discriminator outputs. 0 is the catch-all "unseen" class,
/// 1..n are registered distributions.
using DistributionId = int;
inline constexpr DistributionId kUnseen = 0;

struct LabeledInstance {
  FeatureVector features;
  int label = -1;  // -1 when the label is not (yet) known
  std::size_t index = 0;

  friend bool operator==(const LabeledInstance&, const LabeledInstance&) = default;
};

/// Caller passed arguments outside an operation's contract.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file; the message carries the source and line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class DriftKind { none, recurring, new_distribution };

std::string to_string(DriftKind kind);
DriftKind drift_kind_from_string(const std::string& name);

struct DriftEvent {
  std::size_t instance_index = 0;
  DriftKind kind = DriftKind::none;
  DistributionId distribution = kUnseen;

  friend bool operator==(const DriftEvent&, const DriftEvent&) = default;
};

}  // namespace driftbench

#endif  // DRIFTBENCH_TYPES_HPP
