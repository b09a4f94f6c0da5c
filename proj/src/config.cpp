#include "facereid/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace facereid {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

ConfigError::ConfigError(int line, const std::string& message)
    : InvalidArgument(line > 0 ? fmt::format("line {}: {}", line, message) : message),
      line_(line) {}

std::vector<KvSection> parse_kv(std::string_view text) {
  std::vector<KvSection> sections(1);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    const auto raw = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;

    const auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "unterminated section header");
      const auto name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) throw ConfigError(line_no, "empty section name");
      sections.push_back({std::string(name), line_no, {}});
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(line_no, fmt::format("expected 'key = value', got '{}'", line));
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(line_no, "missing key before '='");
    sections.back().entries.push_back(
        {std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
  }
  return sections;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_double(std::string_view key, std::string_view value) {
  double v = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end || value.empty() || !std::isfinite(v)) {
    throw InvalidArgument(fmt::format("{}: expected a number, got '{}'", key, value));
  }
  return v;
}

std::int64_t parse_int(std::string_view key, std::string_view value) {
  std::int64_t v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end || value.empty()) {
    throw InvalidArgument(fmt::format("{}: expected an integer, got '{}'", key, value));
  }
  return v;
}

std::uint64_t parse_uint64(std::string_view key, std::string_view value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end || value.empty()) {
    throw InvalidArgument(fmt::format("{}: expected an unsigned integer, got '{}'", key, value));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw InvalidArgument(fmt::format("{}: expected true or false, got '{}'", key, value));
}

std::vector<double> parse_doubles(std::string_view key, std::string_view value) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < value.size()) {
    const auto next = value.find_first_of(" \t,", pos);
    const auto tok = value.substr(pos, next == std::string_view::npos ? value.size() - pos
                                                                      : next - pos);
    if (!tok.empty()) out.push_back(parse_double(key, tok));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

void apply_param(EngineParams& p, std::string_view key, std::string_view value) {
  if (key == "sigma_h") {
    p.sigma_h = parse_double(key, value);
  } else if (key == "tau_d") {
    p.tau_d = parse_double(key, value);
  } else if (key == "tau_iou") {
    p.tau_iou = parse_double(key, value);
  } else if (key == "t_min") {
    p.t_min = parse_int(key, value);
  } else if (key == "min_hold_appearances") {
    p.min_hold_appearances = parse_int(key, value);
  } else if (key == "embedding_dim") {
    p.embedding_dim = parse_int(key, value);
  } else if (key == "validation_policy") {
    p.validation_policy = validation_policy_from_string(value);
  } else if (key == "exclusive_match") {
    p.exclusive_match = parse_bool(key, value);
  } else if (key == "t_lookback") {
    p.t_lookback = parse_int(key, value);
  } else {
    throw InvalidArgument(fmt::format("unknown parameter '{}'", key));
  }
}

EngineParams parse_params(std::string_view text, EngineParams base) {
  const auto sections = parse_kv(text);
  if (sections.size() > 1) {
    throw ConfigError(sections[1].line, "params files do not take [sections]");
  }
  for (const auto& e : sections.front().entries) {
    try {
      apply_param(base, e.key, e.value);
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidArgument& err) {
      throw ConfigError(e.line, err.what());
    }
  }
  validate_params(base);
  return base;
}

EngineParams load_params_file(const std::filesystem::path& path, EngineParams base) {
  return parse_params(read_text_file(path), base);
}

std::string format_params(const EngineParams& p) {
  return fmt::format(
      "sigma_h = {}\ntau_d = {}\ntau_iou = {}\nt_min = {}\nmin_hold_appearances = {}\n"
      "embedding_dim = {}\nvalidation_policy = {}\nexclusive_match = {}\nt_lookback = {}\n",
      p.sigma_h, p.tau_d, p.tau_iou, p.t_min, p.min_hold_appearances, p.embedding_dim,
      to_string(p.validation_policy), p.exclusive_match, p.t_lookback);
}

}  // namespace facereid
