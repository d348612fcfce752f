#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace loa {

enum class ErrorCode {
  Shape,
  SymmetryViolation,
  EigenFailure,
  Eval,
  Dimension,
  Singular,
  Parse,
  Divergence,
  Role,
  Capability,
  LineSearchFailure,
  StationaryStart,
  Format,
  NonFiniteLoss,
  TrainingDiverged,
  Usage,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define LOA_DEFINE_ERROR(Name, Code)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(ErrorCode::Code, what) {} \
  };

LOA_DEFINE_ERROR(ShapeError, Shape)
LOA_DEFINE_ERROR(SymmetryViolation, SymmetryViolation)
LOA_DEFINE_ERROR(EigenFailure, EigenFailure)
LOA_DEFINE_ERROR(EvalError, Eval)
LOA_DEFINE_ERROR(DimensionError, Dimension)
LOA_DEFINE_ERROR(SingularError, Singular)
LOA_DEFINE_ERROR(RoleError, Role)
LOA_DEFINE_ERROR(CapabilityError, Capability)
LOA_DEFINE_ERROR(LineSearchFailure, LineSearchFailure)
LOA_DEFINE_ERROR(StationaryStartError, StationaryStart)
LOA_DEFINE_ERROR(FormatError, Format)
LOA_DEFINE_ERROR(UsageError, Usage)
LOA_DEFINE_ERROR(IoError, Io)

#undef LOA_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorCode::Parse, "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NonFiniteLoss : public Error {
 public:
  explicit NonFiniteLoss(int iterate)
      : Error(ErrorCode::NonFiniteLoss,
              "non-finite value in unrolled loss at iterate " + std::to_string(iterate)),
        iterate_(iterate) {}
  int iterate() const noexcept { return iterate_; }

 private:
  int iterate_;
};

}  // namespace loa
