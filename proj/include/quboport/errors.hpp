#pragma once

#include <stdexcept>
#include <string>

namespace quboport {

/// Base error type. Every failure mode carries a stable machine-readable
/// code (the class name) so CLI consumers can dispatch without parsing
/// the human-readable message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define QUBOPORT_DEFINE_ERROR(Name)                                     \
    class Name : public Error {                                         \
    public:                                                             \
        explicit Name(const std::string& what) : Error(#Name, what) {}  \
    }

// Data ingestion and statistics
QUBOPORT_DEFINE_ERROR(MalformedData);
QUBOPORT_DEFINE_ERROR(InsufficientHistory);
QUBOPORT_DEFINE_ERROR(DomainError);
QUBOPORT_DEFINE_ERROR(DegenerateMarket);
QUBOPORT_DEFINE_ERROR(EmptyUniverse);
QUBOPORT_DEFINE_ERROR(NotRepairable);

// Scoring
QUBOPORT_DEFINE_ERROR(EmptyPortfolio);
QUBOPORT_DEFINE_ERROR(DegeneratePortfolio);

// QUBO compilation
QUBOPORT_DEFINE_ERROR(UnsupportedSize);
QUBOPORT_DEFINE_ERROR(ParamOutOfRange);
QUBOPORT_DEFINE_ERROR(InvalidPhaseOrder);
QUBOPORT_DEFINE_ERROR(DimensionError);
QUBOPORT_DEFINE_ERROR(DegenerateTransform);
QUBOPORT_DEFINE_ERROR(BudgetRequired);

// Solvers
QUBOPORT_DEFINE_ERROR(BudgetExceeded);
QUBOPORT_DEFINE_ERROR(InsufficientPool);
QUBOPORT_DEFINE_ERROR(InsufficientStars);

// I/O
QUBOPORT_DEFINE_ERROR(IoError);

#undef QUBOPORT_DEFINE_ERROR

}  // namespace quboport
