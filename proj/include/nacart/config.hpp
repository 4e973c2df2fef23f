#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace nacart {

/// Reads `key = value` lines. Blank lines and lines starting with '#' are
/// skipped; keys may be written with or without a leading "--". Order is kept.
/// Throws ConfigError on a line without '=' or with an empty key.
std::vector<std::pair<std::string, std::string>> read_config(std::istream& is);
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

}  // namespace nacart
