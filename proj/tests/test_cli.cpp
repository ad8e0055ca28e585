#include "support.hpp"

#include <mmse/config.hpp>
#include <mmse/sensor_field.hpp>
#include <mmse/sweep.hpp>

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

using namespace mmse;
using doctest::Approx;

namespace {

namespace fs = std::filesystem;

const char* kScalarConfig = R"({
  "dimension": 1,
  "mu0": [0],
  "sigma0": [[1]],
  "channels": [{"lambda": 1, "sigma_n": [[1]]}],
  "epsilon": 0.1
})";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mmse-cli-tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const fs::path out = scratch("stdout.txt");
  const std::string cmd = std::string(MMSE_BOUNDS_EXE) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out);
  std::stringstream buf;
  buf << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, buf.str()};
}

double field(const std::string& report, const std::string& key) {
  const auto pos = report.find(key + " = ");
  REQUIRE(pos != std::string::npos);
  return std::stod(report.substr(pos + key.size() + 3));
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config round trip") {
  const auto cfg = parse_config(kScalarConfig);
  CHECK(cfg.dimension == 1);
  CHECK(cfg.epsilon == 0.1);
  const auto again = parse_config(dump_config(cfg));
  CHECK(again.sigma0 == cfg.sigma0);
  CHECK(again.ensemble == cfg.ensemble);
  CHECK(to_problem(cfg).epsilon() == 0.1);
}

TEST_CASE("config errors") {
  auto kind = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InvalidArgument;
  };
  CHECK(kind("{") == ErrorKind::Config);
  CHECK(kind(R"({"dimension": 1, "mu0": [0], "sigma0": [[1]], "channels": [], "epsilon": 0})") == ErrorKind::Config);
  CHECK(kind(R"({"dimension": 1, "mu0": [0], "sigma0": [[1]], "epsilon": 0,
                 "channels": [{"lambda": 1, "sigma_n": [[1]]}], "extra": 1})") == ErrorKind::Config);
  CHECK(kind(R"({"dimension": 1, "mu0": [0], "sigma0": [[1]], "epsilon": 0,
                 "channels": [{"lambda": 1, "sigma_n": [[1]], "gain": 2}]})") == ErrorKind::Config);
  CHECK(kind(R"({"dimension": 2, "mu0": [0], "sigma0": [[1]], "epsilon": 0,
                 "channels": [{"lambda": 1, "sigma_n": [[1]]}]})") == ErrorKind::Config);
  CHECK(kind(R"({"dimension": 1, "mu0": [0], "sigma0": [[1]], "epsilon": "big",
                 "channels": [{"lambda": 1, "sigma_n": [[1]]}]})") == ErrorKind::Config);
  CHECK_THROWS_AS(load_config(scratch("missing.json").string()), Error);
}

TEST_CASE("grid parsing") {
  const auto g = parse_grid("0.51:10:25");
  REQUIRE(g.size() == 25);
  CHECK(g.front() == 0.51);
  CHECK(g.back() == 10.0);
  CHECK(g[1] == Approx(0.905416666666667));
  CHECK(parse_grid("1,2.5,4") == std::vector<double>{1, 2.5, 4});
  CHECK(parse_grid("3") == std::vector<double>{3});
  CHECK_THROWS_AS(parse_grid("2,1"), Error);
  CHECK_THROWS_AS(parse_grid("1,1"), Error);
  CHECK_THROWS_AS(parse_grid("0,1"), Error);
  CHECK_THROWS_AS(parse_grid("-1:2:3"), Error);
  CHECK_THROWS_AS(parse_grid("1:2"), Error);
  CHECK_THROWS_AS(parse_grid("1:2:0"), Error);
  CHECK_THROWS_AS(parse_grid("1,x"), Error);
  CHECK_THROWS_AS(parse_grid(""), Error);
}

TEST_CASE("sensor field noise") {
  SensorField f;
  f.distances = {0.0, 3.0, 5.0};
  f.decay = 1;
  f.exponent = 2;
  f.base_noise = 1;
  const auto ens = noise_from_distances(f, 2);
  CHECK((ens.channels[0].noise_covariance - MatrixXd::Identity(2, 2)).norm() == 0.0);
  CHECK(ens.channels[1].noise_covariance(0, 0) == Approx(10.0));
  CHECK(ens.channels[1].noise_covariance(0, 1) == 0.0);
  CHECK(ens.channels[0].noise_covariance.trace() < ens.channels[1].noise_covariance.trace());
  CHECK(ens.channels[1].noise_covariance.trace() < ens.channels[2].noise_covariance.trace());
  for (const auto& ch : ens.channels) CHECK(ch.weight == 1.0);
  CHECK(received_power(f, 3.0) == Approx(0.1));

  CHECK(noise_from_distances(f, 1, {1, 2, 3}).channels[2].weight == 3.0);
  CHECK_THROWS_AS(noise_from_distances(f, 1, {1, 2}), Error);
  f.exponent = 3.5;
  CHECK_THROWS_AS(noise_from_distances(f, 1), Error);
  f.exponent = 2;
  f.distances = {-1};
  CHECK_THROWS_AS(noise_from_distances(f, 1), Error);
}

TEST_CASE("p sweep rows satisfy the ordering invariants") {
  const auto rows = sweep_p(support::four_channels(), parse_grid("0.51,1,2,3.5,10"));
  REQUIRE(rows.size() == 5);
  for (const auto& r : rows) {
    CHECK(r.notes.empty());
    CHECK(*r.lower <= *r.upper);
    CHECK(*r.local_lower <= *r.lower * (1 + 1e-12));
    CHECK(*r.upper <= *r.local_upper * (1 + 1e-12));
    CHECK(*r.lower <= *r.lmmse * (1 + 1e-12));
    CHECK(*r.lmmse <= *r.upper * (1 + 1e-12));
  }
  const auto& two = rows[2];
  CHECK(two.epsilon < 1e-13);
  CHECK(*two.lower == Approx(*two.lmmse).epsilon(1e-8));
  CHECK(*two.upper == Approx(*two.lmmse).epsilon(1e-8));
}

TEST_CASE("ordering check aborts on a violation") {
  SweepRecord r;
  r.lower = 2.0;
  r.upper = 1.0;
  CHECK_THROWS_AS(check_ordering(r, 1e-9), Error);
  r.upper = 2.0 + 1e-12;
  CHECK_NOTHROW(check_ordering(r, 1e-9));
  r.lmmse = 3.0;
  CHECK_THROWS_AS(check_ordering(r, 1e-9), Error);
}

TEST_CASE("ball sweep and CSV layout") {
  const auto rows = sweep_ball(support::four_channels(), parse_grid("0.1,1,10"));
  for (const auto& r : rows) {
    CHECK_FALSE(r.cramer_rao.has_value());
    CHECK(r.epsilon == Approx(uniform_ball_epsilon(1.0, 3)));
  }
  std::ostringstream csv;
  write_csv(csv, SweepKind::Ball, rows);
  const std::string text = csv.str();
  CHECK(text.rfind("R,epsilon,lower,upper,lmmse\n", 0) == 0);
  CHECK(text.find("0.1,0.41024677266168") != std::string::npos);

  SweepRecord partial;
  partial.abscissa = 1;
  partial.epsilon = 0.5;
  partial.upper = 2;
  std::ostringstream p;
  write_csv(p, SweepKind::P, {partial});
  CHECK(p.str() == "p,epsilon,lower,upper,local_lower,local_upper,lmmse,cramer_rao\n1,0.5,,2,,,,\n");
}

TEST_CASE("total ball convention scales the reference by K") {
  SweepOptions opts;
  opts.ball_variance = BallVariance::Total;
  const auto rows = sweep_ball(support::four_channels(), {0.1, 40.0}, opts);
  CHECK(*rows[0].lmmse == Approx(0.0333385268707848).epsilon(1e-9));
  CHECK(*rows[1].upper == Approx(21.1502170580621).epsilon(1e-9));
  CHECK(*rows[1].lower == Approx(20.7316632827372).epsilon(1e-9));
}

TEST_CASE("bound command and exit codes") {
  const fs::path cfg = scratch("scalar.json");
  write_file(cfg, kScalarConfig);

  const auto ok = run("bound --config " + cfg.string());
  REQUIRE(ok.code == 0);
  CHECK(std::abs(field(ok.out, "upper.bound") - support::scalar_oracle(0.1, true)) < 1e-8);
  CHECK(std::abs(field(ok.out, "lower.bound") - support::scalar_oracle(0.1, false)) < 1e-8);
  CHECK(field(ok.out, "nominal") == Approx(0.5));

  const auto zero = run("bound --config " + cfg.string() + " --epsilon 0");
  REQUIRE(zero.code == 0);
  CHECK(field(zero.out, "upper.bound") == field(zero.out, "nominal"));
  CHECK(field(zero.out, "lower.bound") == field(zero.out, "nominal"));

  CHECK(run("bound --config " + cfg.string() + " --epsilon -1").code == 1);
  CHECK(run("bound --config " + scratch("absent.json").string()).code == 1);
  CHECK(run("bound").code == 1);
  CHECK(run("frobnicate").code == 1);

  const fs::path bad = scratch("bad.json");
  write_file(bad, R"({"dimension": 2, "mu0": [0, 0], "sigma0": [[1, 0], [0, 1]], "epsilon": 0.1,
                      "channels": [{"lambda": 1, "sigma_n": [[1, 2], [2, 1]]}]})");
  CHECK(run("bound --config " + bad.string()).code == 1);

  CHECK(run("sweep-p --config " + cfg.string() + " --grid 2,1").code == 1);
  CHECK(run("bound --config " + cfg.string() + " --epsilon 1e6").code == 2);
}

TEST_CASE("sweep output is byte-stable") {
  const fs::path cfg = scratch("scalar.json");
  write_file(cfg, kScalarConfig);
  const auto a = run("sweep-p --config " + cfg.string() + " --grid 0.6:4:7");
  const auto b = run("sweep-p --config " + cfg.string() + " --grid 0.6:4:7");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.rfind("p,epsilon,lower,upper,local_lower,local_upper,lmmse,cramer_rao\n", 0) == 0);

  const fs::path out = scratch("ball.csv");
  REQUIRE(run("sweep-ball --config " + cfg.string() + " --grid 0.5,1 --out " + out.string()).code == 0);
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  CHECK(header == "R,epsilon,lower,upper,lmmse");
}

TEST_CASE("scenario writes a loadable config") {
  const fs::path out = scratch("scenario.json");
  const auto r = run("scenario --distances 0,3,5 --rho0 2 --gamma 1 --m 2 --sigma0 1 --dimension 2 --epsilon 0.2 --out " +
                     out.string());
  REQUIRE(r.code == 0);
  const auto cfg = load_config(out.string());
  CHECK(cfg.dimension == 2);
  CHECK(cfg.ensemble.count() == 3);
  CHECK(cfg.ensemble.channels[1].noise_covariance(0, 0) == Approx(10.0));
  CHECK(cfg.sigma0(0, 0) == Approx(2.0));
  CHECK(cfg.epsilon == Approx(0.2));
  CHECK(run("bound --config " + out.string()).code == 0);
  CHECK(run("scenario --distances 1 --rho0 1 --gamma 1 --m 4 --sigma0 1 --out " + out.string()).code == 1);
}

TEST_CASE("verify command") {
  const fs::path cfg = scratch("scalar.json");
  write_file(cfg, kScalarConfig);
  const auto pass = run("verify --config " + cfg.string() + " --prior gaussian --n-outer 500 --n-inner 200 --seed 3");
  CHECK(pass.code == 0);
  CHECK(pass.out.find("PASS") != std::string::npos);
  const auto gg = run("verify --config " + cfg.string() + " --prior gen-gauss:3 --n-outer 500 --n-inner 200 --seed 3");
  CHECK(gg.code == 0);
  CHECK(run("verify --config " + cfg.string() + " --prior cauchy").code == 1);
  CHECK(run("verify --config " + cfg.string() + " --prior gen-gauss:-1").code == 1);
  CHECK(run("verify --config " + cfg.string() + " --prior gaussian --n-outer 5").code == 1);
}

}
