#pragma once

#include <stdexcept>
#include <string>

namespace jetvar {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define JETVAR_DEFINE_ERROR(Name)          \
  class Name : public Error {              \
   public:                                 \
    explicit Name(const std::string& what) \
        : Error(std::string(#Name ": ") + what) {} \
  }

JETVAR_DEFINE_ERROR(UnknownAtom);
JETVAR_DEFINE_ERROR(UnboundAtom);
JETVAR_DEFINE_ERROR(MissingPartial);
JETVAR_DEFINE_ERROR(DomainError);
JETVAR_DEFINE_ERROR(DimensionMismatch);
JETVAR_DEFINE_ERROR(NotAPartition);
JETVAR_DEFINE_ERROR(OrderOverflow);
JETVAR_DEFINE_ERROR(DegreeError);
JETVAR_DEFINE_ERROR(UnknownDescriptor);
JETVAR_DEFINE_ERROR(ModeError);
JETVAR_DEFINE_ERROR(MissingLift);
JETVAR_DEFINE_ERROR(NotLinear);
JETVAR_DEFINE_ERROR(NotASymmetry);
JETVAR_DEFINE_ERROR(CertificateFailure);
JETVAR_DEFINE_ERROR(DecompositionObstructed);
JETVAR_DEFINE_ERROR(ConstraintUnsatisfiable);
JETVAR_DEFINE_ERROR(SemanticError);
JETVAR_DEFINE_ERROR(Cancelled);

#undef JETVAR_DEFINE_ERROR

// Problem-file syntax error with a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& message)
      : Error("ParseError at " + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column),
        message_(message) {}

  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  int column_;
  std::string message_;
};

}  // namespace jetvar
