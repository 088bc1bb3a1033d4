#ifndef VSCUC_COMMON_HPP
#define VSCUC_COMMON_HPP

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vscuc
{

using Complex = std::complex< double >;

inline constexpr double kInf = std::numeric_limits< double >::infinity();

enum class ErrorCode
{
    Schema,
    DanglingReference,
    Disconnected,
    DuplicateReference,
    InvalidArgument,
    Singular,
    IllConditioned,
    RankDeficient,
    DimensionMismatch,
    UnknownNode,
    Infeasible,
    Unbounded,
    NumericFailure,
    Io,
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code)
    {
    case ErrorCode::Schema: return "SCHEMA";
    case ErrorCode::DanglingReference: return "DANGLING_REFERENCE";
    case ErrorCode::Disconnected: return "DISCONNECTED";
    case ErrorCode::DuplicateReference: return "DUPLICATE_REFERENCE";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::Singular: return "SINGULAR";
    case ErrorCode::IllConditioned: return "ILL_CONDITIONED";
    case ErrorCode::RankDeficient: return "RANK_DEFICIENT";
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::UnknownNode: return "UNKNOWN_NODE";
    case ErrorCode::Infeasible: return "INFEASIBLE";
    case ErrorCode::Unbounded: return "UNBOUNDED";
    case ErrorCode::NumericFailure: return "NUMERIC_FAILURE";
    case ErrorCode::Io: return "IO";
    }
    return "UNKNOWN";
}

/// Library-wide exception. `code()` identifies the failure class; the message
/// carries the location (field path, node id, ...) when one exists.
class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace vscuc

#endif // VSCUC_COMMON_HPP
