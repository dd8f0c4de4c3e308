#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace adsep::cli {

// Flat "key = value" text. '#' starts a comment at the beginning of a line or
// after whitespace; blank lines are ignored; surrounding double quotes are
// stripped from values. Underscores in keys are read as dashes so both
// "learning_rate" and "learning-rate" name the --learning-rate flag.
using FlatConfig = std::map<std::string, std::string>;

// Throws std::invalid_argument("path:line: ...") on malformed lines or
// duplicate keys, DataError when the file cannot be read.
FlatConfig read_flat_config(const std::filesystem::path& path);
FlatConfig parse_flat_config(const std::string& text, const std::string& origin);

}  // namespace adsep::cli
