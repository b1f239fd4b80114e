#include "etas/error.hpp"

namespace etas {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    case ErrorKind::data: return "data";
    case ErrorKind::domain: return "domain";
    case ErrorKind::numeric: return "numeric";
  }
  return "unknown";
}

}  // namespace etas
