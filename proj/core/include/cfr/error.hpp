#pragma once

#include <stdexcept>
#include <string>

namespace cfr {

/// Broad failure category. The CLI maps each category onto its own exit code.
enum class ErrorKind {
  kInvalidArgument,  // caller violated a precondition
  kParse,            // malformed input data
  kInsufficientData, // not enough observations for the requested quantity
  kAssumption,       // a model assumption required by the estimator fails
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cfr
