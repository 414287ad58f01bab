#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lmkg {

enum class ErrorCode {
    malformed_input,
    invalid_encoding,    // non-UTF-8 bytes
    out_of_range,
    unknown_term,
    unsupported_topology,
    unsupported_variable_reuse,
    overflow,
    population_exceeds_limit,
    no_instance,
    retry_budget_exhausted,
    shape_mismatch,
    capacity_exceeded,
    non_finite,
    invalid_argument,
    no_route,
    ambiguous_route,
    version_mismatch,
    truncated,
    checksum_mismatch,
    io,
};

const char *to_string(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

/// A malformed N-Triples line; carries the 1-based line number.
class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string &what)
        : Error(ErrorCode::malformed_input, "line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

} // namespace lmkg
