#ifndef MMSE_TESTS_SUPPORT_HPP
#define MMSE_TESTS_SUPPORT_HPP

#include <mmse/bound_solver.hpp>
#include <mmse/channel_model.hpp>
#include <mmse/prior_library.hpp>

#include <Eigen/QR>

#include <cmath>
#include <functional>
#include <random>

namespace support {

using mmse::MatrixXd;
using mmse::VectorXd;

// Four 3x3 noise covariances and weights used throughout the examples.
inline mmse::ChannelEnsemble<double> four_channels() {
  MatrixXd n1(3, 3), n2(3, 3), n3(3, 3), n4(3, 3);
  n1 << 3.0405, -2.1179, 2.1107, -2.1179, 4.1238, -1.3414, 2.1107, -1.3414, 4.8199;
  n2 << 0.9221, 1.2047, 0.5731, 1.2047, 2.3851, -0.2188, 0.5731, -0.2188, 1.5767;
  n3 << 9.9708, 0.7749, -2.4323, 0.7749, 0.9252, -2.3907, -2.4323, -2.3907, 6.3022;
  n4 << 1.2353, -1.1973, -1.1141, -1.1973, 4.2225, 1.0695, -1.1141, 1.0695, 1.6102;
  return {{{n1, 0.3565}, {n2, 0.0732}, {n3, 0.5910}, {n4, 0.9102}}};
}

inline mmse::Problem<double> make_problem(const mmse::ChannelEnsemble<double>& ens, const MatrixXd& sigma0,
                                          double epsilon) {
  const auto k = sigma0.rows();
  return mmse::validate_problem(ens, mmse::DivergenceBall<double>{{VectorXd::Zero(k), sigma0}, epsilon});
}

// Generalized Gaussian reference problem on the four-channel ensemble.
inline mmse::Problem<double> gen_gauss_problem(double p) {
  return make_problem(four_channels(), mmse::gen_gauss_covariance(p, 3) * MatrixXd::Identity(3, 3),
                      mmse::gen_gauss_epsilon(p, 3));
}

inline MatrixXd random_spd(std::mt19937& rng, int k, double floor = 0.2) {
  std::normal_distribution<double> n;
  MatrixXd a(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) a(i, j) = n(rng);
  return a * a.transpose() + floor * MatrixXd::Identity(k, k);
}

inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Scalar K = J = 1, Sigma_0 = Sigma_N = 1: the extremal variance s solves
// s - ln s - 1 = 2 eps, with s > 1 for the upper bound; the bound is s/(s+1).
inline double scalar_oracle(double eps, bool upper) {
  auto g = [eps](double s) { return s - std::log(s) - 1 - 2 * eps; };
  const double s = upper ? bisect(g, 1.0, 1e3) : bisect(g, 1e-300, 1.0);
  return s / (s + 1);
}

// Random Gaussian covariance with KL(N(0, Sigma) || N(0, Sigma_0)) = fraction * eps:
// Sigma = L Q D Q^T L^T with Sigma_0 = L L^T, Q a random rotation, D = exp(t g).
inline MatrixXd random_feasible(std::mt19937& rng, const MatrixXd& sigma0, double eps, double fraction) {
  const auto k = sigma0.rows();
  std::normal_distribution<double> n;
  MatrixXd g(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) g(i, j) = n(rng);
  const MatrixXd q = Eigen::HouseholderQR<MatrixXd>(g).householderQ();
  VectorXd dir(k);
  for (Eigen::Index i = 0; i < k; ++i) dir(i) = n(rng);
  auto kl_at = [&](double t) {
    double kl = 0;
    for (Eigen::Index i = 0; i < k; ++i) kl += 0.5 * (std::exp(t * dir(i)) - 1 - t * dir(i));
    return kl;
  };
  const double target = fraction * eps;
  double hi = 1;
  while (kl_at(hi) < target) hi *= 2;
  const double t = bisect([&](double x) { return kl_at(x) - target; }, 0.0, hi);
  const VectorXd d = (t * dir).array().exp();
  const MatrixXd l = Eigen::LLT<MatrixXd>(sigma0).matrixL();
  const MatrixXd s = l * q * d.asDiagonal() * q.transpose() * l.transpose();
  return 0.5 * (s + s.transpose());
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace support

#endif  // MMSE_TESTS_SUPPORT_HPP
