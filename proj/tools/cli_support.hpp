#pragma once

// CSV output and key = value config files for the diffract tool.

#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace diffract::cli {

inline constexpr const char* version = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip text for doubles; locale independent.
inline std::string number(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string number(std::int64_t v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

using Cell = std::variant<double, std::int64_t, std::string, bool>;

/// Writes `# key=value` metadata, one header row, then rows of a fixed width.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void metadata(const std::vector<std::pair<std::string, std::string>>& kv, bool reproducible) {
    os_ << "# version=" << version;
    for (const auto& [k, v] : kv) os_ << ' ' << k << '=' << v;
    os_ << '\n';
    if (!reproducible) {
      const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
      std::tm tm{};
      gmtime_r(&now, &tm);
      os_ << "# timestamp=" << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << '\n';
    }
  }

  void comment(const std::string& key, const std::string& value) { os_ << "# " << key << '=' << value << '\n'; }

  void header(const std::vector<std::string>& cols) {
    width_ = cols.size();
    write_joined(cols);
  }

  void row(const std::vector<Cell>& cells) {
    if (cells.size() != width_) throw std::logic_error("CSV row width differs from header");
    std::vector<std::string> text;
    text.reserve(cells.size());
    for (const auto& c : cells) {
      if (const auto* d = std::get_if<double>(&c)) text.push_back(number(*d));
      else if (const auto* i = std::get_if<std::int64_t>(&c)) text.push_back(number(*i));
      else if (const auto* b = std::get_if<bool>(&c)) text.push_back(*b ? "true" : "false");
      else text.push_back(std::get<std::string>(c));
    }
    write_joined(text);
  }

 private:
  void write_joined(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) os_ << (i ? "," : "") << cols[i];
    os_ << '\n';
  }

  std::ostream& os_;
  std::size_t width_ = 0;
};

/// Reads `key = value` lines. Blank lines and lines starting with # are skipped.
inline std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError(path + ":" + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

}  // namespace diffract::cli
