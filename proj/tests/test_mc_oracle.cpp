#include "support.hpp"

#include <mmse/bound_solver.hpp>
#include <mmse/mc_oracle.hpp>

#include <doctest.h>

using namespace mmse;
using support::four_channels;

namespace {

bool within(const McEstimate& e, double target, double k) { return std::abs(e.value - target) <= k * e.std_error; }

PriorSpec standard_normal(int k) { return PriorSpec::gaussian(VectorXd::Zero(k), MatrixXd::Identity(k, k)); }

}  // namespace

TEST_SUITE("mc_oracle") {

TEST_CASE("Philox known-answer vectors") {
  using B = Philox4x32::Block;
  CHECK(Philox4x32::generate(B{0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::generate(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::generate(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});

  Philox4x32 a(9, 2), b(9, 2), c(9, 3);
  for (int i = 0; i < 10; ++i) {
    const auto va = a();
    CHECK(va == b());
    CHECK(va != c());
  }
  Philox4x32 u(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform_open();
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("Gaussian prior, identity noise") {
  const auto e = mc_mmse(standard_normal(3), MatrixXd::Identity(3, 3), 2000, 500, 1);
  CHECK(within(e, 1.5, 3));
  CHECK(e.std_error > 0);
  CHECK(e.n_outer == 2000);
  CHECK(e.n_inner == 500);
  CHECK(e.seed == 1);
}

TEST_CASE("Gaussian prior through a correlated channel") {
  const MatrixXd n1 = four_channels().channels[0].noise_covariance;
  const auto e = mc_mmse(standard_normal(3), n1, 2000, 500, 2);
  CHECK(within(e, mmse_trace<double>(MatrixXd::Identity(3, 3), n1), 3));
}

TEST_CASE("p = 2 generalized Gaussian matches the Gaussian MMSE per channel") {
  const auto ens = four_channels();
  const auto b = mc_breakdown(PriorSpec::generalized_gaussian(2.0, 3), ens, 2000, 500, 3);
  REQUIRE(b.per_channel.size() == 4);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(within(b.per_channel[j], mmse_trace<double>(MatrixXd::Identity(3, 3), ens.channels[j].noise_covariance), 3));
  }
}

TEST_CASE("single channel weighted sum equals mc_mmse") {
  const auto spec = PriorSpec::generalized_gaussian(1.5, 3);
  const MatrixXd n = four_channels().channels[1].noise_covariance;
  ChannelEnsemble<double> one{{{n, 1.0}}};
  const auto a = mc_weighted_sum(spec, one, 300, 200, 4);
  const auto b = mc_mmse(spec, n, 300, 200, 4);
  CHECK(a.value == b.value);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("Gaussian prior at the reference matches the closed form") {
  const auto ens = four_channels();
  const MatrixXd s0 = 2.0 * MatrixXd::Identity(3, 3);
  const auto e = mc_weighted_sum(PriorSpec::gaussian(VectorXd::Zero(3), s0), ens, 2000, 300, 5);
  CHECK(within(e, weighted_mmse_sum(s0, ens).weighted_sum, 3));
}

TEST_CASE("deterministic and independent of the worker count") {
  const auto spec = PriorSpec::generalized_gaussian(0.8, 3);
  const auto ens = four_channels();
  McOptions one, many;
  one.threads = 1;
  many.threads = 3;
  const auto a = mc_weighted_sum(spec, ens, 400, 200, 6, one);
  const auto b = mc_weighted_sum(spec, ens, 400, 200, 6, many);
  const auto c = mc_weighted_sum(spec, ens, 400, 200, 6, one);
  CHECK(a.value == b.value);
  CHECK(a.std_error == b.std_error);
  CHECK(a.value == c.value);
  CHECK(mc_weighted_sum(spec, ens, 400, 200, 7, one).value != a.value);
}

TEST_CASE("converges to the closed form for a Gaussian prior") {
  const MatrixXd n = four_channels().channels[3].noise_covariance;
  const double exact = mmse_trace<double>(MatrixXd::Identity(3, 3), n);
  for (std::int64_t outer : {1000, 10000}) {
    const auto e = mc_mmse(standard_normal(3), n, outer, 200, 8);
    CHECK(within(e, exact, 4));
  }
}

TEST_CASE("bounds bracket the Monte Carlo MMSE sum") {
  struct Case {
    PriorSpec spec;
    std::uint64_t seed;
  };
  const Case cases[] = {{PriorSpec::generalized_gaussian(1.0, 3), 11}, {PriorSpec::uniform_ball(5.0, 3), 12}};
  for (const auto& c : cases) {
    const auto m = prior_moments(c.spec);
    const auto p = validate_problem(four_channels(), DivergenceBall<double>{{m.mean, m.covariance}, *m.epsilon_to_best_gaussian});
    const double lo = solve_bound(Direction::Lower, p).bound_value;
    const double up = solve_bound(Direction::Upper, p).bound_value;
    const auto e = mc_weighted_sum(c.spec, p.ensemble(), 1000, 1000, c.seed);
    CHECK(e.value >= lo - 3 * e.std_error);
    CHECK(e.value <= up + 3 * e.std_error);
  }
}

TEST_CASE("degenerate importance weights are reported") {
  McOptions strict;
  strict.min_ess_fraction = 0.999;
  try {
    mc_weighted_sum(PriorSpec::generalized_gaussian(0.51, 3), four_channels(), 200, 200, 13, strict);
    FAIL("expected DegenerateWeights");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateWeights);
  }
}

TEST_CASE("argument checks") {
  CHECK_THROWS_AS(mc_mmse(standard_normal(3), MatrixXd::Identity(3, 3), 99, 500, 1), Error);
  CHECK_THROWS_AS(mc_mmse(standard_normal(3), MatrixXd::Identity(3, 3), 500, 99, 1), Error);
  CHECK_THROWS_AS(mc_mmse(standard_normal(2), MatrixXd::Identity(3, 3), 500, 500, 1), Error);
}

TEST_CASE("KL estimates of exact Gaussians vanish") {
  const auto same = mc_kl(standard_normal(3), {VectorXd::Zero(3), MatrixXd::Identity(3, 3)}, 10000, 1);
  CHECK(std::abs(same.value) <= 3 * same.std_error + 1e-12);
  const auto gg = mc_kl(PriorSpec::generalized_gaussian(2.0, 3), {VectorXd::Zero(3), MatrixXd::Identity(3, 3)}, 10000, 2);
  CHECK(std::abs(gg.value) <= 3 * gg.std_error + 1e-12);
}

}
