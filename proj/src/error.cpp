#include "trimsum/error.hpp"

namespace trimsum {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::degenerate_scale: return "degenerate_scale";
    case ErrorKind::schedule: return "schedule";
    case ErrorKind::trim: return "trim";
    case ErrorKind::unsupported_region: return "unsupported_region";
    case ErrorKind::condition: return "condition";
    case ErrorKind::inversion: return "inversion";
    case ErrorKind::too_small_n: return "too_small_n";
    case ErrorKind::empty_summary: return "empty_summary";
    case ErrorKind::ingestion: return "ingestion";
  }
  return "unknown";
}

}  // namespace trimsum
