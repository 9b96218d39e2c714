#pragma once

#include <stdexcept>
#include <string>

namespace shdl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised while a module is being described: bad declarations, misplaced
// statements, section nesting mistakes, name collisions.
class ElaborationError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

// Array / BRAM / bit-select index outside the declared range.
class AddressError : public Error {
 public:
  using Error::Error;
};

// Misuse of a standard interface protocol at simulation time, e.g. consuming
// BRAM read data that was never requested.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Two distinct leaves wrote the same state element in the same cycle.
class ConflictError : public Error {
 public:
  ConflictError(std::string target, std::string first_leaf,
                std::string second_leaf, unsigned long long cycle)
      : Error("write conflict on '" + target + "' in cycle " +
              std::to_string(cycle) + ": leaves '" + first_leaf + "' and '" +
              second_leaf + "' both write it"),
        target_(std::move(target)),
        first_(std::move(first_leaf)),
        second_(std::move(second_leaf)),
        cycle_(cycle) {}

  const std::string& target() const { return target_; }
  const std::string& first_leaf() const { return first_; }
  const std::string& second_leaf() const { return second_; }
  unsigned long long cycle() const { return cycle_; }

 private:
  std::string target_;
  std::string first_;
  std::string second_;
  unsigned long long cycle_;
};

}  // namespace shdl
