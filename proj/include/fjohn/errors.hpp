#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fjohn {

enum class ErrorKind {
  DimensionMismatch,
  NonPositiveCorner,
  PointOutsideBall,
  SingularA,
  ZeroValue,
  SubgradientAmbiguous,
  NotProper,
  NotJohnPosition,
  PointOnBoundary,
  InfeasibleWeights,
  BadR,
  AtomOffContactSet,
  ZeroValueAtom,
  NotConverged,
  DivergingIterates,
  AllWeightsZero,
  NotInBr,
  InvalidInput,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` distinguishes failures.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fjohn
