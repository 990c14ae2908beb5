#pragma once

#include <stdexcept>
#include <string>

namespace paretotune {

// Bad input from a caller or a user-supplied file (space docs, flags, configs).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SpaceError : public UsageError {
 public:
  using UsageError::UsageError;
};

// The evaluator could not be run or produced too many failures.
class EvaluatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A session journal that cannot be replayed.
class JournalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace paretotune
