#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace etas {

/// Flat `key = value` settings. Blank lines and lines starting with `#` are
/// ignored. The `*_or` getters store the default they fall back to, so
/// write() echoes the fully resolved configuration.
class RunConfig {
 public:
  static RunConfig parse(std::istream& in, std::string_view source_name = "<config>");
  static RunConfig load(const std::filesystem::path& path);

  void set(const std::string& key, std::string value);
  /// `key=value`; later assignments win.
  void apply_override(std::string_view assignment);

  [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) > 0; }
  [[nodiscard]] std::optional<std::string> find(const std::string& key) const;
  [[nodiscard]] std::string require(const std::string& key) const;
  [[nodiscard]] double require_number(const std::string& key) const;

  std::string string_or(const std::string& key, const std::string& fallback);
  double number_or(const std::string& key, double fallback);
  std::size_t count_or(const std::string& key, std::size_t fallback);
  std::uint64_t u64_or(const std::string& key, std::uint64_t fallback);
  bool flag_or(const std::string& key, bool fallback);
  [[nodiscard]] std::optional<double> optional_number(const std::string& key) const;
  /// Comma-separated numbers; empty when the key is absent.
  [[nodiscard]] std::vector<double> numbers(const std::string& key) const;

  /// Throws Error(config) naming the first key not in `allowed`.
  void check_keys(std::span<const std::string_view> allowed) const;

  void write(std::ostream& out) const;
  [[nodiscard]] const std::map<std::string, std::string>& entries() const noexcept {
    return values_;
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace etas
