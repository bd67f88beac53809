#pragma once

#include <stdexcept>
#include <string>

namespace gvps {

// Base for all library errors. Carries the name of the module that raised it
// so the CLI can report "error [segmentation]: ..." style diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message);

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

// Caller supplied something outside an operation's precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

// Internal state became invalid (non-finite parameters, diverged update, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace gvps
