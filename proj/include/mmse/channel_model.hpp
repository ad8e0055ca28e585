#ifndef MMSE_CHANNEL_MODEL_HPP
#define MMSE_CHANNEL_MODEL_HPP

#include <mmse/types.hpp>

#include <Eigen/Cholesky>

#include <string>
#include <utility>
#include <vector>

namespace mmse {

/// One additive Gaussian noise channel Y = X + N, N ~ N(0, noise_covariance).
template <typename Scalar>
struct Channel {
  Matrix<Scalar> noise_covariance;
  Scalar weight{1};

  bool operator==(const Channel& other) const {
    return weight == other.weight && noise_covariance.rows() == other.noise_covariance.rows() &&
           noise_covariance.cols() == other.noise_covariance.cols() &&
           noise_covariance == other.noise_covariance;
  }
};

template <typename Scalar>
struct ChannelEnsemble {
  std::vector<Channel<Scalar>> channels;

  Eigen::Index dimension() const { return channels.empty() ? 0 : channels.front().noise_covariance.rows(); }
  std::size_t count() const { return channels.size(); }

  bool operator==(const ChannelEnsemble&) const = default;
};

template <typename Scalar>
struct GaussianReference {
  Vector<Scalar> mean;
  Matrix<Scalar> covariance;

  Eigen::Index dimension() const { return covariance.rows(); }

  bool operator==(const GaussianReference& other) const {
    return mean.size() == other.mean.size() && covariance.rows() == other.covariance.rows() &&
           covariance.cols() == other.covariance.cols() && mean == other.mean && covariance == other.covariance;
  }
};

template <typename Scalar>
struct DivergenceBall {
  GaussianReference<Scalar> reference;
  Scalar radius{0};  // nats

  bool operator==(const DivergenceBall&) const = default;
};

namespace detail {

inline constexpr double kSymmetryTolerance = 1e-12;

template <typename Scalar>
bool is_symmetric(const Matrix<Scalar>& m) {
  const Scalar scale = m.norm();
  if (scale == Scalar(0)) return true;
  return (m - m.transpose()).norm() <= Scalar(kSymmetryTolerance) * scale;
}

template <typename Scalar>
Matrix<Scalar> symmetrized(const Matrix<Scalar>& m) {
  return (m + m.transpose()) / Scalar(2);
}

template <typename Scalar>
bool is_positive_definite(const Matrix<Scalar>& m) {
  if (!m.allFinite()) return false;
  Eigen::LLT<Matrix<Scalar>> llt(m);
  return llt.info() == Eigen::Success;
}

// Symmetrize and check positive definiteness; `what` names the matrix in messages.
template <typename Scalar>
Matrix<Scalar> checked_spd(const Matrix<Scalar>& m, Eigen::Index dim, const std::string& what,
                           std::optional<std::size_t> channel) {
  if (m.rows() != dim || m.cols() != dim) {
    throw Error(ErrorKind::DimensionMismatch,
                what + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ", expected " +
                    std::to_string(dim) + "x" + std::to_string(dim),
                channel);
  }
  if (!is_symmetric(m)) throw Error(ErrorKind::NonSymmetric, what + " is not symmetric", channel);
  Matrix<Scalar> s = symmetrized(m);
  if (!is_positive_definite(s)) throw Error(ErrorKind::NotPositiveDefinite, what + " is not positive definite", channel);
  return s;
}

inline std::string channel_label(std::size_t j) { return "channel " + std::to_string(j) + " noise covariance"; }

}  // namespace detail

/// A validated problem: ensemble and divergence ball whose invariants have
/// been checked, with the reference precision cached. Immutable.
template <typename Scalar>
class Problem {
 public:
  const ChannelEnsemble<Scalar>& ensemble() const { return ensemble_; }
  const DivergenceBall<Scalar>& ball() const { return ball_; }
  const GaussianReference<Scalar>& reference() const { return ball_.reference; }
  Scalar epsilon() const { return ball_.radius; }
  Eigen::Index dimension() const { return ball_.reference.dimension(); }

  /// Sigma_0^{-1}, computed once.
  const Matrix<Scalar>& reference_precision() const { return reference_precision_; }

  /// Same channels and reference, different radius. The radius is checked.
  Problem with_epsilon(Scalar epsilon) const {
    if (!(epsilon >= Scalar(0))) throw Error(ErrorKind::NegativeRadius, "divergence radius must be >= 0");
    Problem copy = *this;
    copy.ball_.radius = epsilon;
    return copy;
  }

  /// Single-channel problem {(Sigma_{N_j}, 1)} used by the local bounds.
  Problem single_channel(std::size_t j) const {
    if (j >= ensemble_.count()) throw Error(ErrorKind::InvalidArgument, "channel index out of range", j);
    Problem copy = *this;
    copy.ensemble_.channels = {Channel<Scalar>{ensemble_.channels[j].noise_covariance, Scalar(1)}};
    return copy;
  }

  bool operator==(const Problem& other) const { return ensemble_ == other.ensemble_ && ball_ == other.ball_; }

 private:
  template <typename S>
  friend Problem<S> validate_problem(const ChannelEnsemble<S>&, const DivergenceBall<S>&);

  ChannelEnsemble<Scalar> ensemble_;
  DivergenceBall<Scalar> ball_;
  Matrix<Scalar> reference_precision_;
};

/// Checks every invariant of the problem data and returns a handle holding
/// symmetrized copies. Throws mmse::Error naming the offending channel.
template <typename Scalar>
Problem<Scalar> validate_problem(const ChannelEnsemble<Scalar>& ensemble, const DivergenceBall<Scalar>& ball) {
  const Eigen::Index dim = ball.reference.covariance.rows();
  if (dim < 1) throw Error(ErrorKind::DimensionMismatch, "reference covariance is empty");
  if (ensemble.channels.empty()) throw Error(ErrorKind::DimensionMismatch, "ensemble has no channels");
  if (ball.reference.mean.size() != dim) {
    throw Error(ErrorKind::DimensionMismatch, "reference mean has length " + std::to_string(ball.reference.mean.size()) +
                                                  ", expected " + std::to_string(dim));
  }
  if (!ball.reference.mean.allFinite()) throw Error(ErrorKind::InvalidArgument, "reference mean is not finite");
  if (!(ball.radius >= Scalar(0))) throw Error(ErrorKind::NegativeRadius, "divergence radius must be >= 0");

  Problem<Scalar> problem;
  problem.ball_.radius = ball.radius;
  problem.ball_.reference.mean = ball.reference.mean;
  problem.ball_.reference.covariance =
      detail::checked_spd(ball.reference.covariance, dim, "reference covariance", std::nullopt);

  problem.ensemble_.channels.reserve(ensemble.count());
  for (std::size_t j = 0; j < ensemble.count(); ++j) {
    const auto& ch = ensemble.channels[j];
    if (!(ch.weight > Scalar(0))) {
      throw Error(ErrorKind::NonPositiveWeight, "channel " + std::to_string(j) + " has weight <= 0", j);
    }
    problem.ensemble_.channels.push_back(
        {detail::checked_spd(ch.noise_covariance, dim, detail::channel_label(j), j), ch.weight});
  }

  Eigen::LLT<Matrix<Scalar>> llt(problem.ball_.reference.covariance);
  problem.reference_precision_ = llt.solve(Matrix<Scalar>::Identity(dim, dim));
  problem.reference_precision_ = detail::symmetrized(problem.reference_precision_);
  return problem;
}

/// Re-validation of a handle is the identity.
template <typename Scalar>
Problem<Scalar> validate_problem(const Problem<Scalar>& problem) {
  return validate_problem(problem.ensemble(), problem.ball());
}

}  // namespace mmse

#endif  // MMSE_CHANNEL_MODEL_HPP
