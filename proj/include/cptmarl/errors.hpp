#pragma once

#include <stdexcept>
#include <string>

namespace cptmarl {

/// Runtime condition that invalidates a result without being a usage error,
/// such as a subjective visitation system that is not a contraction.
class DiagnosticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An aggregate distribution was requested for a state never observed.
class InsufficientExploration : public DiagnosticError {
 public:
  explicit InsufficientExploration(int state)
      : DiagnosticError("no aggregate observations at state " + std::to_string(state)),
        state_(state) {}

  int state() const { return state_; }

 private:
  int state_;
};

}  // namespace cptmarl
