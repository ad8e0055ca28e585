#ifndef MMSE_BOUND_SOLVER_HPP
#define MMSE_BOUND_SOLVER_HPP

// Least- and most-favourable Gaussian priors in a KL ball.
//
// The extremal covariance satisfies
//
//   Sigma_X^{-1} = Sigma_0^{-1} - alpha * sum_j lambda_j W_j^T W_j,
//   D_KL(N(mu0, Sigma_X) || N(mu0, Sigma_0)) = epsilon,
//
// with alpha >= 0 for the upper bound and alpha <= 0 for the lower bound.
// The set of (Sigma_X, alpha) solving the first equation is a curve through
// (Sigma_0, 0). Along that curve alpha is not monotone in general (the curve
// can fold back), so solve_bound follows it by pseudo-arclength continuation
// and stops where the KL divergence reaches epsilon.

#include <mmse/channel_model.hpp>
#include <mmse/gaussian_analytics.hpp>
#include <mmse/types.hpp>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace mmse {

enum class Direction { Upper, Lower };

inline const char* to_string(Direction d) noexcept { return d == Direction::Upper ? "upper" : "lower"; }

template <typename Scalar>
struct SolverOptions {
  Scalar inner_tol = Scalar(1e-11);  // relative Frobenius residual of the fixed point
  int inner_max_iter = 500;
  Scalar outer_tol = Scalar(1e-10);  // |KL - epsilon|
  int outer_max_iter = 200;
  Scalar damping = Scalar(1);  // fixed-point relaxation in sigma_of_alpha
  int max_continuation_steps = 20000;

  void validate() const {
    if (!(inner_tol > 0) || !(outer_tol > 0)) throw Error(ErrorKind::InvalidArgument, "tolerances must be > 0");
    if (inner_max_iter < 1 || outer_max_iter < 1 || max_continuation_steps < 1) {
      throw Error(ErrorKind::InvalidArgument, "iteration caps must be >= 1");
    }
    if (!(damping > 0) || damping > 1) throw Error(ErrorKind::InvalidArgument, "damping must lie in (0, 1]");
  }
};

template <typename Scalar>
struct BoundResult {
  Direction direction{Direction::Upper};
  Scalar alpha{0};
  Matrix<Scalar> sigma_x;
  Scalar bound_value{0};
  MmseSummary<Scalar> summary;
  Scalar kl_at_solution{0};
  int inner_iterations{0};
  int outer_iterations{0};
  Scalar fixed_point_residual{0};
  Scalar kl_residual{0};
  std::vector<std::string> diagnostics;
};

template <typename Scalar>
struct AlphaSolution {
  Matrix<Scalar> sigma_x;
  Scalar residual{0};
  int iterations{0};
};

/// sum_j lambda_j W_j^T W_j at Sigma_X.
template <typename Scalar>
Matrix<Scalar> estimator_curvature(const Matrix<Scalar>& sigma_x, const ChannelEnsemble<Scalar>& ensemble) {
  const auto k = sigma_x.rows();
  Matrix<Scalar> a = Matrix<Scalar>::Zero(k, k);
  for (const auto& ch : ensemble.channels) {
    const Matrix<Scalar> w = weight_matrix(sigma_x, ch.noise_covariance);
    a.noalias() += ch.weight * (w.transpose() * w);
  }
  return detail::symmetrized(a);
}

/// ||Sigma_X - (Sigma_0^{-1} - alpha A(Sigma_X))^{-1}||_F / ||Sigma_X||_F; +inf if
/// the bracketed precision is not positive definite.
template <typename Scalar>
Scalar fixed_point_residual(Scalar alpha, const Matrix<Scalar>& sigma_x, const Problem<Scalar>& problem) {
  const Matrix<Scalar> precision =
      problem.reference_precision() - alpha * estimator_curvature(sigma_x, problem.ensemble());
  Eigen::LLT<Matrix<Scalar>> llt(precision);
  if (llt.info() != Eigen::Success) return std::numeric_limits<Scalar>::infinity();
  const Matrix<Scalar> mapped = llt.solve(Matrix<Scalar>::Identity(sigma_x.rows(), sigma_x.cols()));
  return (sigma_x - mapped).norm() / sigma_x.norm();
}

/// Residual of the additive form
///   Sigma_X = Sigma_0 + alpha (sum_j lambda_j MMSE_j^T MMSE_j) SNR_0^{-1}
/// with alpha on the scale of the inverse form. Relative Frobenius.
template <typename Scalar>
Scalar additive_form_residual(Scalar alpha, const Matrix<Scalar>& sigma_x, const Problem<Scalar>& problem) {
  const auto k = sigma_x.rows();
  Matrix<Scalar> acc = Matrix<Scalar>::Zero(k, k);
  for (const auto& ch : problem.ensemble().channels) {
    const Matrix<Scalar> m = mmse_matrix(sigma_x, ch.noise_covariance);
    acc.noalias() += ch.weight * (m.transpose() * m);
  }
  // SNR_0^{-1} = Sigma_X^{-1} Sigma_0
  Eigen::LLT<Matrix<Scalar>> llt(sigma_x);
  const Matrix<Scalar> snr_inv = llt.solve(problem.reference().covariance);
  const Matrix<Scalar> rhs = problem.reference().covariance + alpha * acc * snr_inv;
  return (sigma_x - rhs).norm() / sigma_x.norm();
}

/// Fixed point of Sigma_X <- (Sigma_0^{-1} - alpha sum_j lambda_j W_j^T W_j)^{-1}
/// started at Sigma_0, with relaxation halved whenever the residual grows.
template <typename Scalar>
AlphaSolution<Scalar> sigma_of_alpha(Scalar alpha, const Problem<Scalar>& problem, const SolverOptions<Scalar>& opts = {}) {
  opts.validate();
  const auto k = problem.dimension();
  const Matrix<Scalar> identity = Matrix<Scalar>::Identity(k, k);
  if (alpha == Scalar(0)) return {problem.reference().covariance, Scalar(0), 1};

  Matrix<Scalar> sigma = problem.reference().covariance;
  Scalar relax = opts.damping;
  Scalar previous = std::numeric_limits<Scalar>::infinity();
  for (int it = 1; it <= opts.inner_max_iter; ++it) {
    const Matrix<Scalar> precision =
        problem.reference_precision() - alpha * estimator_curvature(sigma, problem.ensemble());
    Eigen::LLT<Matrix<Scalar>> llt(precision);
    if (llt.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "Sigma_0^{-1} - alpha*A lost positive definiteness at iteration " << it << " (alpha = " << alpha << ")";
      throw Error(ErrorKind::LostPositiveDefiniteness, msg.str());
    }
    const Matrix<Scalar> mapped = detail::symmetrized(Matrix<Scalar>(llt.solve(identity)));
    const Scalar residual = (mapped - sigma).norm() / mapped.norm();
    if (residual <= opts.inner_tol) {
      const Scalar final_residual = fixed_point_residual(alpha, mapped, problem);
      if (final_residual <= opts.inner_tol) return {mapped, final_residual, it};
    }
    if (residual > previous && relax > Scalar(1) / Scalar(1024)) relax /= Scalar(2);
    previous = residual;
    sigma = (Scalar(1) - relax) * sigma + relax * mapped;
  }
  throw Error(ErrorKind::NoConvergence,
              "fixed point did not converge in " + std::to_string(opts.inner_max_iter) + " iterations");
}

/// KL(N(mu0, Sigma_X(alpha)) || P_0) - epsilon, with Sigma_X(alpha) from sigma_of_alpha.
template <typename Scalar>
Scalar kl_gap(Scalar alpha, const Problem<Scalar>& problem, const SolverOptions<Scalar>& opts = {}) {
  const auto sol = sigma_of_alpha(alpha, problem, opts);
  return kl_same_mean_gaussians(sol.sigma_x, problem.reference().covariance) - problem.epsilon();
}

namespace detail {

// Continuation of F(S, a) = S^{-1} + a*A(S) - I = 0 in coordinates whitened by
// the reference, S = L^{-1} Sigma_X L^{-T}. Unknowns are packed as an
// isometric half-vectorization of S followed by a scaled multiplier.
template <typename Scalar>
class ContinuationPath {
 public:
  using Mat = Matrix<Scalar>;
  using Vec = Vector<Scalar>;

  explicit ContinuationPath(const Problem<Scalar>& problem) {
    k_ = problem.dimension();
    m_ = k_ * (k_ + 1) / 2;
    Eigen::LLT<Mat> llt(problem.reference().covariance);
    chol_ = llt.matrixL();
    gram_ = chol_.transpose() * chol_;
    for (const auto& ch : problem.ensemble().channels) {
      Mat white = chol_.template triangularView<Eigen::Lower>().solve(ch.noise_covariance);
      white = chol_.template triangularView<Eigen::Lower>().solve(white.transpose()).transpose();
      noise_.push_back(symmetrized(white));
      weights_.push_back(ch.weight);
    }
    const Mat a0 = curvature(Mat::Identity(k_, k_));
    alpha_scale_ = a0.norm();
    if (!(alpha_scale_ > 0)) alpha_scale_ = Scalar(1);
  }

  Eigen::Index unknowns() const { return m_ + 1; }
  Eigen::Index equations() const { return m_; }

  Vec start() const {
    Vec u = Vec::Zero(m_ + 1);
    u.head(m_) = pack(Mat::Identity(k_, k_));
    return u;
  }

  Mat unpack(const Vec& u) const {
    Mat s(k_, k_);
    Eigen::Index i = 0;
    for (Eigen::Index c = 0; c < k_; ++c) {
      s(c, c) = u(i++);
      for (Eigen::Index r = c + 1; r < k_; ++r) {
        s(r, c) = s(c, r) = u(i++) / std::sqrt(Scalar(2));
      }
    }
    return s;
  }

  Vec pack(const Mat& s) const {
    Vec v(m_);
    Eigen::Index i = 0;
    for (Eigen::Index c = 0; c < k_; ++c) {
      v(i++) = s(c, c);
      for (Eigen::Index r = c + 1; r < k_; ++r) v(i++) = std::sqrt(Scalar(2)) * s(r, c);
    }
    return v;
  }

  Scalar alpha(const Vec& u) const { return u(m_) / alpha_scale_; }

  Mat sigma_x(const Vec& u) const { return symmetrized(Mat(chol_ * unpack(u.head(m_)) * chol_.transpose())); }

  // Sum_j lambda_j W~_j^T G W~_j with W~_j = N~_j (S + N~_j)^{-1}.
  Mat curvature(const Mat& s) const {
    Mat a = Mat::Zero(k_, k_);
    for (std::size_t j = 0; j < noise_.size(); ++j) {
      const Mat w = weight_of(s, j);
      a.noalias() += weights_[j] * (w.transpose() * gram_ * w);
    }
    return symmetrized(a);
  }

  // Residual F and its Jacobian; false if S is not positive definite.
  bool evaluate(const Vec& u, Vec& residual, Mat* jacobian) const {
    const Mat s = unpack(u.head(m_));
    Eigen::LLT<Mat> llt(s);
    if (llt.info() != Eigen::Success || !s.allFinite()) return false;
    const Mat s_inv = symmetrized(Mat(llt.solve(Mat::Identity(k_, k_))));
    const Scalar a = alpha(u);

    std::vector<Mat> w(noise_.size()), sum_inv(noise_.size());
    Mat curv = Mat::Zero(k_, k_);
    for (std::size_t j = 0; j < noise_.size(); ++j) {
      Eigen::LLT<Mat> sum(s + noise_[j]);
      if (sum.info() != Eigen::Success) return false;
      sum_inv[j] = sum.solve(Mat::Identity(k_, k_));
      w[j] = noise_[j] * sum_inv[j];
      curv.noalias() += weights_[j] * (w[j].transpose() * gram_ * w[j]);
    }
    curv = symmetrized(curv);
    residual = pack(symmetrized(Mat(s_inv + a * curv - Mat::Identity(k_, k_))));
    if (!residual.allFinite()) return false;
    if (jacobian == nullptr) return true;

    jacobian->resize(m_, m_ + 1);
    for (Eigen::Index col = 0; col < m_; ++col) {
      Vec e = Vec::Zero(m_);
      e(col) = 1;
      const Mat basis = unpack(e);
      Mat d = -s_inv * basis * s_inv;
      for (std::size_t j = 0; j < noise_.size(); ++j) {
        const Mat dw = -w[j] * basis * sum_inv[j];
        const Mat term = dw.transpose() * gram_ * w[j];
        d.noalias() += a * weights_[j] * (term + term.transpose());
      }
      jacobian->col(col) = pack(symmetrized(d));
    }
    jacobian->col(m_) = pack(curv) / alpha_scale_;
    return true;
  }

  Scalar kl(const Vec& u) const {
    const Mat s = unpack(u.head(m_));
    Eigen::LLT<Mat> llt(s);
    const Mat l = llt.matrixL();
    const Scalar logdet = Scalar(2) * l.diagonal().array().log().sum();
    return (s.trace() - static_cast<Scalar>(k_) - logdet) / Scalar(2);
  }

  // Unit tangent of the solution curve, oriented along `reference`.
  bool tangent(const Vec& u, const Vec& reference, Vec& out) const {
    Vec r;
    Mat jac;
    if (!evaluate(u, r, &jac)) return false;
    Mat aug(m_ + 1, m_ + 1);
    aug.topRows(m_) = jac;
    aug.row(m_) = reference.transpose();
    Vec rhs = Vec::Zero(m_ + 1);
    rhs(m_) = 1;
    Eigen::FullPivLU<Mat> lu(aug);
    if (!lu.isInvertible()) return false;
    out = lu.solve(rhs);
    const Scalar n = out.norm();
    if (!(n > 0) || !out.allFinite()) return false;
    out /= n;
    return true;
  }

  // Newton on {F(u) = 0, normal . (u - anchor) = 0}. Counts iterations.
  bool correct(Vec& u, const Vec& anchor, const Vec& normal, int max_iter, int& iterations) const {
    Vec r;
    Mat jac;
    Mat aug(m_ + 1, m_ + 1);
    Vec rhs(m_ + 1);
    for (int it = 0; it < max_iter; ++it) {
      ++iterations;
      if (!evaluate(u, r, &jac)) return false;
      const Scalar plane = normal.dot(u - anchor);
      if (r.norm() <= kNewtonTol && std::abs(plane) <= kNewtonTol) return true;
      aug.topRows(m_) = jac;
      aug.row(m_) = normal.transpose();
      rhs.head(m_) = -r;
      rhs(m_) = -plane;
      Eigen::FullPivLU<Mat> lu(aug);
      if (!lu.isInvertible()) return false;
      const Vec step = lu.solve(rhs);
      if (!step.allFinite()) return false;
      u += step;
      if (step.norm() <= kNewtonTol * (Scalar(1) + u.norm())) {
        if (!evaluate(u, r, nullptr)) return false;
        return r.norm() <= Scalar(1e3) * kNewtonTol;
      }
    }
    return false;
  }

  // Newton on {F(u) = 0, KL(u) = target}, used to polish the final point.
  bool polish_on_level(Vec& u, Scalar target, int max_iter, int& iterations) const {
    Vec r;
    Mat jac;
    for (int it = 0; it < max_iter; ++it) {
      ++iterations;
      if (!evaluate(u, r, &jac)) return false;
      const Scalar gap = kl(u) - target;
      if (r.norm() <= kNewtonTol && std::abs(gap) <= kNewtonTol) return true;
      const Mat s = unpack(u.head(m_));
      Eigen::LLT<Mat> llt(s);
      const Mat s_inv = llt.solve(Mat::Identity(k_, k_));
      Vec grad = Vec::Zero(m_ + 1);
      grad.head(m_) = pack(symmetrized(Mat((Mat::Identity(k_, k_) - s_inv) / Scalar(2))));
      Mat aug(m_ + 1, m_ + 1);
      aug.topRows(m_) = jac;
      aug.row(m_) = grad.transpose();
      Vec rhs(m_ + 1);
      rhs.head(m_) = -r;
      rhs(m_) = -gap;
      Eigen::FullPivLU<Mat> lu(aug);
      if (!lu.isInvertible()) return false;
      const Vec step = lu.solve(rhs);
      if (!step.allFinite()) return false;
      u += step;
    }
    return false;
  }

  static constexpr Scalar kNewtonTol = Scalar(1e-13);

 private:
  Mat weight_of(const Mat& s, std::size_t j) const {
    Eigen::LLT<Mat> sum(s + noise_[j]);
    return noise_[j] * sum.solve(Mat::Identity(k_, k_));
  }

  Eigen::Index k_{0};
  Eigen::Index m_{0};
  Mat chol_;
  Mat gram_;
  std::vector<Mat> noise_;
  std::vector<Scalar> weights_;
  Scalar alpha_scale_{1};
};

template <typename Scalar>
BoundResult<Scalar> finish_result(Direction direction, Scalar alpha, Matrix<Scalar> sigma_x,
                                  const Problem<Scalar>& problem) {
  BoundResult<Scalar> out;
  out.direction = direction;
  out.alpha = alpha;
  out.sigma_x = std::move(sigma_x);
  out.summary = weighted_mmse_sum(out.sigma_x, problem);
  out.bound_value = out.summary.weighted_sum;
  out.kl_at_solution = kl_same_mean_gaussians(out.sigma_x, problem.reference().covariance);
  out.kl_residual = std::abs(out.kl_at_solution - problem.epsilon());
  out.fixed_point_residual = alpha == Scalar(0) ? Scalar(0) : fixed_point_residual(alpha, out.sigma_x, problem);
  return out;
}

}  // namespace detail

/// Solves for the extremal Gaussian prior in the KL ball and returns the
/// corresponding bound on sum_j lambda_j mmse_j.
template <typename Scalar>
BoundResult<Scalar> solve_bound(Direction direction, const Problem<Scalar>& problem,
                                const SolverOptions<Scalar>& opts = {}) {
  opts.validate();
  const Scalar epsilon = problem.epsilon();
  if (epsilon == Scalar(0)) {
    auto out = detail::finish_result(direction, Scalar(0), problem.reference().covariance, problem);
    out.inner_iterations = 0;
    out.outer_iterations = 0;
    return out;
  }

  using Vec = Vector<Scalar>;
  const detail::ContinuationPath<Scalar> path(problem);
  const Scalar sign = direction == Direction::Upper ? Scalar(1) : Scalar(-1);
  const Eigen::Index n = path.unknowns();

  int inner = 0;
  int outer = 0;
  std::vector<std::string> diagnostics;

  Vec u = path.start();
  Vec reference = Vec::Zero(n);
  reference(n - 1) = sign;
  Vec t;
  if (!path.tangent(u, reference, t)) throw Error(ErrorKind::NoConvergence, "singular Jacobian at the reference point");

  Scalar kl_prev = 0;
  Scalar h = Scalar(0.02);
  const Scalar h_max = Scalar(0.25);
  const Scalar h_min = Scalar(1e-12);
  bool warned = false;

  for (int step = 0; step < opts.max_continuation_steps; ++step) {
    ++outer;
    Vec candidate = u + h * t;
    const Vec anchor = candidate;
    int used = 0;
    const bool ok = path.correct(candidate, anchor, t, 25, used);
    inner += used;
    if (!ok) {
      h /= Scalar(2);
      if (h < h_min) {
        std::ostringstream msg;
        msg << "continuation stalled at alpha = " << path.alpha(u) << ", KL = " << kl_prev;
        throw Error(ErrorKind::NoConvergence, msg.str());
      }
      continue;
    }
    const Scalar kl_new = path.kl(candidate);
    const Scalar a_new = path.alpha(candidate);
    if (sign * a_new < Scalar(0)) {
      std::ostringstream msg;
      msg << "solution curve crossed alpha = 0 before reaching epsilon = " << epsilon
          << "; largest KL reached " << kl_prev << " at alpha = " << path.alpha(u);
      throw Error(ErrorKind::BracketFailure, msg.str());
    }
    if (kl_new < kl_prev && !warned) {
      std::ostringstream msg;
      msg << "KL decreased along the solution curve near alpha = " << a_new << " (" << kl_prev << " -> " << kl_new
          << ")";
      diagnostics.push_back(msg.str());
      warned = true;
    }

    if (kl_new >= epsilon) {
      // Root of g(s) = KL(curve point on the plane through u + s t) - epsilon on [0, h].
      Scalar s_lo = 0, g_lo = kl_prev - epsilon;
      Scalar s_hi = h, g_hi = kl_new - epsilon;
      Vec best = candidate;
      Scalar best_gap = g_hi;
      int side = 0;
      for (int it = 0; it < opts.outer_max_iter && std::abs(best_gap) > opts.outer_tol / Scalar(10); ++it) {
        ++outer;
        Scalar s = s_hi - g_hi * (s_hi - s_lo) / (g_hi - g_lo);
        if (!(s > s_lo && s < s_hi)) s = (s_lo + s_hi) / Scalar(2);
        Vec probe = u + s * t;
        const Vec probe_anchor = probe;
        int probe_used = 0;
        const bool probe_ok = path.correct(probe, probe_anchor, t, 25, probe_used);
        inner += probe_used;
        if (!probe_ok) {
          s = (s_lo + s_hi) / Scalar(2);
          probe = u + s * t;
          const Vec mid_anchor = probe;
          probe_used = 0;
          if (!path.correct(probe, mid_anchor, t, 50, probe_used)) {
            throw Error(ErrorKind::NoConvergence, "corrector failed while locating the KL level");
          }
          inner += probe_used;
        }
        const Scalar g = path.kl(probe) - epsilon;
        best = probe;
        best_gap = g;
        // Illinois modification keeps the false-position bracket shrinking on both ends.
        if (g > 0) {
          s_hi = s;
          g_hi = g;
          if (side == 1) g_lo /= Scalar(2);
          side = 1;
        } else {
          s_lo = s;
          g_lo = g;
          if (side == -1) g_hi /= Scalar(2);
          side = -1;
        }
      }
      int polish_used = 0;
      Vec polished = best;
      if (path.polish_on_level(polished, epsilon, 20, polish_used)) best = polished;
      inner += polish_used;

      auto out = detail::finish_result(direction, path.alpha(best), path.sigma_x(best), problem);
      out.inner_iterations = inner;
      out.outer_iterations = outer;
      out.diagnostics = std::move(diagnostics);
      if (sign * out.alpha < Scalar(0)) {
        throw Error(ErrorKind::BracketFailure, "multiplier has the wrong sign at the KL level");
      }
      if (out.kl_residual > opts.outer_tol) {
        std::ostringstream msg;
        msg << "KL constraint residual " << out.kl_residual << " exceeds " << opts.outer_tol;
        throw Error(ErrorKind::NoConvergence, msg.str());
      }
      if (out.fixed_point_residual > opts.inner_tol) {
        std::ostringstream msg;
        msg << "fixed-point residual " << out.fixed_point_residual << " exceeds " << opts.inner_tol;
        throw Error(ErrorKind::NoConvergence, msg.str());
      }
      return out;
    }

    // Accept the step.
    Vec t_new;
    if (!path.tangent(candidate, t, t_new)) {
      h /= Scalar(2);
      if (h < h_min) throw Error(ErrorKind::NoConvergence, "singular Jacobian along the solution curve");
      continue;
    }
    u = candidate;
    t = t_new;
    kl_prev = kl_new;
    if (used <= 4) h = std::min(h * Scalar(1.5), h_max);
  }
  std::ostringstream msg;
  msg << "epsilon = " << epsilon << " not reached after " << opts.max_continuation_steps
      << " continuation steps; largest KL " << kl_prev << " at alpha = " << path.alpha(u);
  throw Error(ErrorKind::BracketFailure, msg.str());
}

/// solve_bound on the single-channel problem {(Sigma_{N_j}, 1)}.
template <typename Scalar>
BoundResult<Scalar> local_bound(Direction direction, std::size_t channel, const Problem<Scalar>& problem,
                                const SolverOptions<Scalar>& opts = {}) {
  return solve_bound(direction, problem.single_channel(channel), opts);
}

/// sum_j lambda_j * local_bound(j).bound_value.
template <typename Scalar>
Scalar local_bounds_weighted(Direction direction, const Problem<Scalar>& problem, const SolverOptions<Scalar>& opts = {}) {
  Scalar total = 0;
  for (std::size_t j = 0; j < problem.ensemble().count(); ++j) {
    total += problem.ensemble().channels[j].weight * local_bound(direction, j, problem, opts).bound_value;
  }
  return total;
}

}  // namespace mmse

#endif  // MMSE_BOUND_SOLVER_HPP
