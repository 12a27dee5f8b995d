#pragma once

#include <stdexcept>
#include <string>

namespace chaoslab {

/// A rejected input: a violated precondition or an invalid configuration.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A failure while evaluating a functional on a simulated pattern. Carries
/// the stream descriptor of the replication that produced the pattern.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, std::string seed)
      : std::runtime_error(what + " [seed " + seed + "]"), seed_(std::move(seed)) {}
  const std::string& seed() const { return seed_; }

 private:
  std::string seed_;
};

#define CHAOSLAB_REQUIRE(cond, msg)                 \
  do {                                              \
    if (!(cond)) throw ::chaoslab::InvalidInput(msg); \
  } while (false)

}  // namespace chaoslab
