#ifndef HSIKME_ERROR_HPP
#define HSIKME_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace hsikme {

/// Error categories surfaced by every module. The CLI maps these onto exit codes.
enum class ErrorKind {
    format,          ///< malformed or contradictory input file
    truncation,      ///< binary payload shorter/longer than its header declares
    shape,           ///< dimension mismatch between operands
    parameter,       ///< out-of-range hyperparameter
    infeasible,      ///< request cannot be satisfied (e.g. more classes than pixels)
    contract,        ///< caller violated a documented precondition
    capacity,        ///< configured size cap exceeded
    degenerate_data, ///< data cannot support the requested fit
    undefined_input, ///< statistic undefined on the given input
    numerical,       ///< solver failed to produce finite output
    io               ///< file system failure
};

inline std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::format: return "format error";
    case ErrorKind::truncation: return "truncation error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::parameter: return "parameter error";
    case ErrorKind::infeasible: return "infeasible error";
    case ErrorKind::contract: return "contract violation";
    case ErrorKind::capacity: return "capacity error";
    case ErrorKind::degenerate_data: return "degenerate-data error";
    case ErrorKind::undefined_input: return "undefined-input error";
    case ErrorKind::numerical: return "numerical failure";
    case ErrorKind::io: return "i/o error";
    }
    return "error";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

template <ErrorKind K>
class KindError : public Error {
public:
    explicit KindError(const std::string& what) : Error(K, what) {}
};

using FormatError = KindError<ErrorKind::format>;
using TruncationError = KindError<ErrorKind::truncation>;
using ShapeError = KindError<ErrorKind::shape>;
using ParameterError = KindError<ErrorKind::parameter>;
using InfeasibleError = KindError<ErrorKind::infeasible>;
using ContractViolation = KindError<ErrorKind::contract>;
using CapacityError = KindError<ErrorKind::capacity>;
using DegenerateDataError = KindError<ErrorKind::degenerate_data>;
using UndefinedInputError = KindError<ErrorKind::undefined_input>;
using NumericalError = KindError<ErrorKind::numerical>;
using IoError = KindError<ErrorKind::io>;

/// Throws the concrete subclass matching `kind`, so callers can rethrow
/// with extra context without losing the catchable type.
[[noreturn]] inline void raise(ErrorKind kind, const std::string& what)
{
    switch (kind) {
    case ErrorKind::format: throw FormatError(what);
    case ErrorKind::truncation: throw TruncationError(what);
    case ErrorKind::shape: throw ShapeError(what);
    case ErrorKind::parameter: throw ParameterError(what);
    case ErrorKind::infeasible: throw InfeasibleError(what);
    case ErrorKind::contract: throw ContractViolation(what);
    case ErrorKind::capacity: throw CapacityError(what);
    case ErrorKind::degenerate_data: throw DegenerateDataError(what);
    case ErrorKind::undefined_input: throw UndefinedInputError(what);
    case ErrorKind::numerical: throw NumericalError(what);
    case ErrorKind::io: throw IoError(what);
    }
    throw Error(kind, what);
}

} // namespace hsikme

#endif // HSIKME_ERROR_HPP
