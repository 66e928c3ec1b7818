#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmhand {

enum class ErrorKind {
  Parameter,
  ProjectionDegenerate,
  DegenerateHull,
  DegeneratePose,
  ShapeMismatch,
  Validation,
  Decode,
  Io,
  NonFinite,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception; the kind decides the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace mmhand
