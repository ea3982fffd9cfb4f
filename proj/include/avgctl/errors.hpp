#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace avgctl {

// Base for every error the library raises deliberately. kind() gives a
// stable machine-checkable tag; what() carries the human message.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define AVGCTL_DEFINE_ERROR(Name)                                  \
    class Name : public Error {                                    \
      public:                                                      \
        using Error::Error;                                        \
        const char* kind() const noexcept override { return #Name; } \
    }

AVGCTL_DEFINE_ERROR(DimensionError);
AVGCTL_DEFINE_ERROR(DomainError);
AVGCTL_DEFINE_ERROR(SchemaError);
AVGCTL_DEFINE_ERROR(RankError);
AVGCTL_DEFINE_ERROR(BoundViolation);
AVGCTL_DEFINE_ERROR(EvaluationError);
AVGCTL_DEFINE_ERROR(NumericalFailure);
AVGCTL_DEFINE_ERROR(SteeringIllConditioned);
AVGCTL_DEFINE_ERROR(ScheduleInfeasible);

#undef AVGCTL_DEFINE_ERROR

// Raised by the expression parser; carries the byte offset of the offending
// token and a coarse code so tests can assert the exact failure.
class ParseError : public Error {
  public:
    enum class Code { Syntax, UnknownIdentifier, OutOfRangeIndex, ArityMismatch, DepthExceeded };

    ParseError(Code code, std::size_t offset, const std::string& msg)
        : Error(msg + " (at offset " + std::to_string(offset) + ")"),
          code_(code),
          offset_(offset) {}

    const char* kind() const noexcept override { return "ParseError"; }
    Code code() const noexcept { return code_; }
    std::size_t offset() const noexcept { return offset_; }

  private:
    Code code_;
    std::size_t offset_;
};

}  // namespace avgctl
