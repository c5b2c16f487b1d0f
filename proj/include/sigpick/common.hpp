#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sigpick {

/// Numerical tolerances. `geom` governs membership and point merging in the
/// belief simplex; `tie` governs argmax-set membership and is in payoff units.
struct Tolerances {
  double geom = 1e-12;
  double tie = 1e-9;
};

/// A point or argument lies outside the domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A distribution over posteriors whose mean differs from the prior.
class InducibilityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Builtin generator parameters outside their admissible range.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation exceeded a configured size limit.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Aggregate of every violated invariant of an input.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : std::invalid_argument(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "invalid input:";
    for (const auto& s : p) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> problems_;
};

}  // namespace sigpick
