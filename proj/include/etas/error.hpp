#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace etas {

/// Coarse failure category. The CLI prints it as the first token of its
/// one-line error message so scripts can branch on it.
enum class ErrorKind { config, io, data, domain, numeric };

[[nodiscard]] std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace etas
