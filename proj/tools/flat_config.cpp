#include "flat_config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "adsep/common/error.hpp"

namespace adsep::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string strip_comment(const std::string& line) {
  for (std::size_t i = 0; i < line.size(); ++i)
    if (line[i] == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) return line.substr(0, i);
  return line;
}

}  // namespace

FlatConfig parse_flat_config(const std::string& text, const std::string& origin) {
  FlatConfig out;
  std::istringstream is(text);
  std::string line;
  for (std::size_t n = 1; std::getline(is, line); ++n) {
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    const auto where = origin + ":" + std::to_string(n) + ": ";
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(where + "expected 'key = value'");
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument(where + "empty key");
    std::replace(key.begin(), key.end(), '_', '-');
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!out.emplace(key, value).second) throw std::invalid_argument(where + "duplicate key '" + key + "'");
  }
  return out;
}

FlatConfig read_flat_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError(path.string() + ": cannot read config file");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_flat_config(ss.str(), path.string());
}

}  // namespace adsep::cli
