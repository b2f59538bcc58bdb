#ifndef DRIFTBENCH_CONFIG_FILE_HPP
#define DRIFTBENCH_CONFIG_FILE_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace driftbench {

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// Reads flat `key = value` lines. Blank lines and `#` comments are skipped;
/// a line without `=` or with an empty key is a ParseError.
std::vector<KeyValue> read_key_values(std::istream& in, const std::string& source);
std::vector<KeyValue> read_key_values(const std::filesystem::path& path);

/// Whitespace-trimmed copy.
std::string trim(const std::string& text);
std::vector<std::string> split(const std::string& text, char separator);

/// Strict whole-string number parsing; non-finite values are rejected.
bool try_parse_real(const std::string& text, double& out);
/// As above but throw UsageError naming `what`.
double parse_real(const std::string& text, const std::string& what);
std::uint64_t parse_unsigned(const std::string& text, const std::string& what);

}  // namespace driftbench

#endif  // DRIFTBENCH_CONFIG_FILE_HPP
