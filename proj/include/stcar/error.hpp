#pragma once

#include <stdexcept>
#include <string>

namespace stcar {

// Error taxonomy shared by the library and the CLI. Each class maps to a
// stable process exit code so scripts can dispatch on failures.
enum class ErrorClass {
  Schema = 2,     // malformed input files, missing columns, bad headers
  Value = 3,      // values outside their domain (weights, probabilities, ...)
  Numerical = 4,  // factorization breakdown, overflow guards
  Io = 5,         // filesystem and serialization failures
};

inline const char* error_class_name(ErrorClass c) {
  switch (c) {
    case ErrorClass::Schema: return "schema";
    case ErrorClass::Value: return "value";
    case ErrorClass::Numerical: return "numerical";
    case ErrorClass::Io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& msg)
      : std::runtime_error(msg), cls_(cls) {}

  ErrorClass error_class() const { return cls_; }
  int exit_code() const { return static_cast<int>(cls_); }

 private:
  ErrorClass cls_;
};

[[noreturn]] inline void throw_schema(const std::string& msg) {
  throw Error(ErrorClass::Schema, msg);
}
[[noreturn]] inline void throw_value(const std::string& msg) {
  throw Error(ErrorClass::Value, msg);
}
[[noreturn]] inline void throw_numerical(const std::string& msg) {
  throw Error(ErrorClass::Numerical, msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(ErrorClass::Io, msg);
}

}  // namespace stcar
