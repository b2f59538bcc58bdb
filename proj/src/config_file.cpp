#include "driftbench/config_file.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "driftbench/types.hpp"

namespace driftbench {

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& text, char separator) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(separator, start);
    parts.push_back(trim(text.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

bool try_parse_real(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), out);
  return ec == std::errc{} && ptr == t.data() + t.size() && std::isfinite(out);
}

double parse_real(const std::string& text, const std::string& what) {
  double value = 0.0;
  if (!try_parse_real(text, value)) throw UsageError(what + ": expected a finite number, got '" + text + "'");
  return value;
}

std::uint64_t parse_unsigned(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
    throw UsageError(what + ": expected a non-negative integer, got '" + text + "'");
  }
  return value;
}

std::vector<KeyValue> read_key_values(std::istream& in, const std::string& source) {
  std::vector<KeyValue> entries;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(source, number, "expected key = value");
    KeyValue entry{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), number};
    if (entry.key.empty()) throw ParseError(source, number, "empty key");
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<KeyValue> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  return read_key_values(in, path.string());
}

}  // namespace driftbench
