#include "support.hpp"

#include <doctest.h>

using namespace mmse;
using support::four_channels;

TEST_SUITE("channel_model") {

TEST_CASE("scalar problem validates") {
  ChannelEnsemble<double> ens{{{MatrixXd::Ones(1, 1), 1.0}}};
  const auto p = support::make_problem(ens, MatrixXd::Ones(1, 1), 0.1);
  CHECK(p.dimension() == 1);
  CHECK(p.epsilon() == doctest::Approx(0.1));
  CHECK(p.reference_precision()(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("four-channel ensemble with identity reference validates") {
  const auto p = support::make_problem(four_channels(), MatrixXd::Identity(3, 3), gen_gauss_epsilon(0.51, 3));
  CHECK(p.ensemble().count() == 4);
  CHECK(p.ensemble().dimension() == 3);
}

TEST_CASE("indefinite noise is rejected with its channel index") {
  MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;
  ChannelEnsemble<double> ens{{{bad, 1.0}}};
  try {
    support::make_problem(ens, MatrixXd::Identity(2, 2), 0.1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotPositiveDefinite);
    REQUIRE(e.channel().has_value());
    CHECK(*e.channel() == 0);
  }
}

TEST_CASE("each invariant violation has its own error") {
  const MatrixXd id = MatrixXd::Identity(2, 2);
  MatrixXd skew = id;
  skew(0, 1) = 0.5;

  auto kind_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Config;  // no error
  };

  CHECK(kind_of([&] { support::make_problem({{{id, 1.0}, {skew, 1.0}}}, id, 0.1); }) == ErrorKind::NonSymmetric);
  CHECK(kind_of([&] { support::make_problem({{{id, 0.0}}}, id, 0.1); }) == ErrorKind::NonPositiveWeight);
  CHECK(kind_of([&] { support::make_problem({{{id, -1.0}}}, id, 0.1); }) == ErrorKind::NonPositiveWeight);
  CHECK(kind_of([&] { support::make_problem({{{id, 1.0}}}, id, -0.1); }) == ErrorKind::NegativeRadius);
  CHECK(kind_of([&] { support::make_problem({{{MatrixXd::Identity(3, 3), 1.0}}}, id, 0.1); }) ==
        ErrorKind::DimensionMismatch);
  CHECK(kind_of([&] { support::make_problem({}, id, 0.1); }) == ErrorKind::DimensionMismatch);
  CHECK(kind_of([&] { support::make_problem({{{id, 1.0}}}, -id, 0.1); }) == ErrorKind::NotPositiveDefinite);

  try {
    support::make_problem({{{id, 1.0}, {id, 2.0}, {skew, 1.0}}}, id, 0.1);
  } catch (const Error& e) {
    CHECK(e.channel() == std::optional<std::size_t>(2));
  }
}

TEST_CASE("symmetry tolerance is relative") {
  MatrixXd n = 1e6 * MatrixXd::Identity(2, 2);
  n(0, 1) = 1e-7;  // relative asymmetry ~7e-14
  const auto p = support::make_problem({{{n, 1.0}}}, MatrixXd::Identity(2, 2), 0.0);
  const MatrixXd& stored = p.ensemble().channels[0].noise_covariance;
  CHECK(stored(0, 1) == stored(1, 0));
}

TEST_CASE("validation is idempotent") {
  const auto p = support::make_problem(four_channels(), 2.0 * MatrixXd::Identity(3, 3), 0.3);
  const auto q = validate_problem(p);
  CHECK(p == q);
  CHECK(validate_problem(q) == q);
}

TEST_CASE("with_epsilon and single_channel") {
  const auto p = support::make_problem(four_channels(), MatrixXd::Identity(3, 3), 0.3);
  CHECK(p.with_epsilon(0.7).epsilon() == doctest::Approx(0.7));
  CHECK_THROWS_AS(p.with_epsilon(-1.0), Error);
  const auto s = p.single_channel(2);
  REQUIRE(s.ensemble().count() == 1);
  CHECK(s.ensemble().channels[0].weight == 1.0);
  CHECK(s.ensemble().channels[0].noise_covariance == p.ensemble().channels[2].noise_covariance);
  CHECK_THROWS_AS(p.single_channel(4), Error);
}

}
