#pragma once

#include <stdexcept>
#include <string>

namespace hyperwalk {

// Error classes map 1:1 onto CLI exit codes.
enum class ErrorCategory : int {
  internal = 1,
  usage = 2,
  config = 3,
  missing_artifact = 4,
  hash_mismatch = 5,
  data_format = 6,
  invalid_argument = 7,
  numeric = 8,
  reproducibility = 9,
};

inline const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::internal: return "internal";
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::config: return "config";
    case ErrorCategory::missing_artifact: return "missing-artifact";
    case ErrorCategory::hash_mismatch: return "hash-mismatch";
    case ErrorCategory::data_format: return "data-format";
    case ErrorCategory::invalid_argument: return "invalid-argument";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::reproducibility: return "reproducibility";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& what) { throw Error(c, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCategory::invalid_argument, what);
}

}  // namespace hyperwalk
