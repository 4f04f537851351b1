#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace salient {

// Base of every error thrown by the library. Messages are single-line so
// the CLI can print them verbatim as machine-parseable errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string subject, std::vector<std::string> violations);

  const std::string& subject() const noexcept { return subject_; }
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::string subject_;
  std::vector<std::string> violations_;
};

class SchemaMismatchError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

}  // namespace salient
