#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "facereid/types.hpp"

namespace facereid {

// Parse error carrying the 1-based line it refers to (0 when not line bound).
class ConfigError : public InvalidArgument {
 public:
  ConfigError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct KvEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct KvSection {
  std::string name;  // empty for entries before the first [section]
  int line = 0;
  std::vector<KvEntry> entries;
};

// Minimal INI-like grammar shared by params files and scenario scripts:
//
//   # comment            (also ';')
//   [section]            sections may repeat
//   key = value          whitespace around key and value is trimmed
//
// Blank lines are ignored. Anything else is a ConfigError.
std::vector<KvSection> parse_kv(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);

// Sets one EngineParams field by name. Errors name the field.
void apply_param(EngineParams& params, std::string_view key, std::string_view value);

// Flat `key = value` file whose keys are EngineParams field names. Keys not
// present keep their defaults. The result is validated.
EngineParams parse_params(std::string_view text, EngineParams base = {});
EngineParams load_params_file(const std::filesystem::path& path, EngineParams base = {});
std::string format_params(const EngineParams& params);

// Value helpers shared with the scenario parser.
double parse_double(std::string_view key, std::string_view value);
std::int64_t parse_int(std::string_view key, std::string_view value);
std::uint64_t parse_uint64(std::string_view key, std::string_view value);
bool parse_bool(std::string_view key, std::string_view value);
std::vector<double> parse_doubles(std::string_view key, std::string_view value);

}  // namespace facereid
