#include "etas/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "etas/csv.hpp"
#include "etas/error.hpp"

namespace etas {

namespace {

double to_number(const std::string& key, std::string_view text) {
  const auto v = csv::parse_double(csv::trim(text));
  if (!v) {
    throw Error(ErrorKind::config,
                "key '" + key + "': expected a number, got '" + std::string(text) + "'");
  }
  return *v;
}

std::uint64_t to_unsigned(const std::string& key, std::string_view text) {
  text = csv::trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorKind::config, "key '" + key + "': expected a non-negative integer, got '" +
                                       std::string(text) + "'");
  }
  return v;
}

}  // namespace

RunConfig RunConfig::parse(std::istream& in, std::string_view source_name) {
  RunConfig out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = csv::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    const auto where = std::string(source_name) + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::config, where + ": expected 'key = value'");
    }
    const std::string key(csv::trim(text.substr(0, eq)));
    if (key.empty()) throw Error(ErrorKind::config, where + ": empty key");
    if (out.has(key)) throw Error(ErrorKind::config, where + ": duplicate key '" + key + "'");
    out.values_[key] = std::string(csv::trim(text.substr(eq + 1)));
  }
  return out;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config file " + path.string());
  return parse(in, path.string());
}

void RunConfig::set(const std::string& key, std::string value) { values_[key] = std::move(value); }

void RunConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || csv::trim(assignment.substr(0, eq)).empty()) {
    throw Error(ErrorKind::config,
                "override '" + std::string(assignment) + "' is not of the form key=value");
  }
  set(std::string(csv::trim(assignment.substr(0, eq))),
      std::string(csv::trim(assignment.substr(eq + 1))));
}

std::optional<std::string> RunConfig::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string RunConfig::require(const std::string& key) const {
  auto v = find(key);
  if (!v || v->empty()) throw Error(ErrorKind::config, "missing required key '" + key + "'");
  return *v;
}

double RunConfig::require_number(const std::string& key) const {
  return to_number(key, require(key));
}

std::string RunConfig::string_or(const std::string& key, const std::string& fallback) {
  return values_.try_emplace(key, fallback).first->second;
}

double RunConfig::number_or(const std::string& key, double fallback) {
  if (auto v = find(key)) return to_number(key, *v);
  set(key, csv::format_double(fallback));
  return fallback;
}

std::size_t RunConfig::count_or(const std::string& key, std::size_t fallback) {
  return static_cast<std::size_t>(u64_or(key, fallback));
}

std::uint64_t RunConfig::u64_or(const std::string& key, std::uint64_t fallback) {
  if (auto v = find(key)) return to_unsigned(key, *v);
  set(key, std::to_string(fallback));
  return fallback;
}

bool RunConfig::flag_or(const std::string& key, bool fallback) {
  const auto v = find(key);
  if (!v) {
    set(key, fallback ? "true" : "false");
    return fallback;
  }
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw Error(ErrorKind::config, "key '" + key + "': expected true or false, got '" + *v + "'");
}

std::optional<double> RunConfig::optional_number(const std::string& key) const {
  const auto v = find(key);
  if (!v || v->empty()) return std::nullopt;
  return to_number(key, *v);
}

std::vector<double> RunConfig::numbers(const std::string& key) const {
  std::vector<double> out;
  const auto v = find(key);
  if (!v || v->empty()) return out;
  for (const auto field : csv::split_fields(*v)) out.push_back(to_number(key, field));
  return out;
}

void RunConfig::check_keys(std::span<const std::string_view> allowed) const {
  for (const auto& [key, value] : values_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorKind::config, "unknown key '" + key + "'");
    }
  }
}

void RunConfig::write(std::ostream& out) const {
  for (const auto& [key, value] : values_) out << key << " = " << value << "\n";
}

}  // namespace etas
