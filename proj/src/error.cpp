#include "lmkg/error.hpp"

namespace lmkg {

const char *to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::malformed_input: return "malformed input";
    case ErrorCode::invalid_encoding: return "invalid encoding";
    case ErrorCode::out_of_range: return "out of range";
    case ErrorCode::unknown_term: return "unknown term";
    case ErrorCode::unsupported_topology: return "unsupported topology";
    case ErrorCode::unsupported_variable_reuse: return "unsupported variable reuse";
    case ErrorCode::overflow: return "overflow";
    case ErrorCode::population_exceeds_limit: return "population exceeds limit";
    case ErrorCode::no_instance: return "no instance";
    case ErrorCode::retry_budget_exhausted: return "retry budget exhausted";
    case ErrorCode::shape_mismatch: return "shape mismatch";
    case ErrorCode::capacity_exceeded: return "capacity exceeded";
    case ErrorCode::non_finite: return "non-finite value";
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::no_route: return "no route";
    case ErrorCode::ambiguous_route: return "ambiguous route";
    case ErrorCode::version_mismatch: return "version mismatch";
    case ErrorCode::truncated: return "truncated";
    case ErrorCode::checksum_mismatch: return "checksum mismatch";
    case ErrorCode::io: return "i/o error";
    }
    return "unknown";
}

} // namespace lmkg
