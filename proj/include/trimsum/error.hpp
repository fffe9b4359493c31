#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trimsum {

enum class ErrorKind {
  domain,
  configuration,
  precondition,
  numerical,
  degenerate_scale,
  schedule,
  trim,
  unsupported_region,
  condition,
  inversion,
  too_small_n,
  empty_summary,
  ingestion,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base exception for every failure raised by the library. The kind is
/// what callers (and the CLI exit-code mapping) dispatch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Quadrature or root-finding failure; carries the achieved error estimate.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double error_estimate)
      : Error(ErrorKind::numerical, what), error_estimate_(error_estimate) {}

  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double error_estimate_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace trimsum
