#ifndef MMSE_TYPES_HPP
#define MMSE_TYPES_HPP

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace mmse {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Categories of failure surfaced by the library. The CLI maps these onto
/// exit codes, so keep the set closed.
enum class ErrorKind {
  NonSymmetric,
  NotPositiveDefinite,
  DimensionMismatch,
  NonPositiveWeight,
  NegativeRadius,
  SingularSum,
  SingularReference,
  LostPositiveDefiniteness,
  NoConvergence,
  BracketFailure,
  FisherUndefined,
  DegenerateSample,
  DegenerateWeights,
  InvalidArgument,
  InvariantViolation,
  Config,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::optional<std::size_t> channel = std::nullopt)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), channel_(channel) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Index of the offending channel, when the error concerns one.
  std::optional<std::size_t> channel() const noexcept { return channel_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> channel_;
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NonSymmetric: return "NonSymmetric";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorKind::NegativeRadius: return "NegativeRadius";
    case ErrorKind::SingularSum: return "SingularSum";
    case ErrorKind::SingularReference: return "SingularReference";
    case ErrorKind::LostPositiveDefiniteness: return "LostPositiveDefiniteness";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::BracketFailure: return "BracketFailure";
    case ErrorKind::FisherUndefined: return "FisherUndefined";
    case ErrorKind::DegenerateSample: return "DegenerateSample";
    case ErrorKind::DegenerateWeights: return "DegenerateWeights";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

}  // namespace mmse

#endif  // MMSE_TYPES_HPP
