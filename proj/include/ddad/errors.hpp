#pragma once

#include <stdexcept>
#include <string>

namespace ddad {

// Bad user input: malformed files, out-of-range configs, shape mismatches.
// The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse: a precondition the caller is responsible for (missing
// uncertainty head, wrong channel count, ...). Exit code 2.
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Filesystem / decode failures. Exit code 1.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss during training; carries member/epoch context in the
// message. Exit code 1.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ddad
