#include <mmse/sweep.hpp>

#include <mmse/baselines.hpp>
#include <mmse/prior_library.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

namespace mmse {
namespace {

[[noreturn]] void bad_grid(const std::string& msg) { throw Error(ErrorKind::InvalidArgument, "grid: " + msg); }

double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    bad_grid("'" + s + "' is not a number");
  }
  if (used != s.size()) bad_grid("'" + s + "' is not a number");
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

// Evaluates one column; solver failures become an empty cell plus a note.
void fill(std::optional<double>& cell, std::vector<std::string>& notes, const char* column,
          const std::function<double()>& compute) {
  try {
    cell = compute();
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::BracketFailure:
      case ErrorKind::NoConvergence:
      case ErrorKind::LostPositiveDefiniteness:
      case ErrorKind::SingularSum:
        notes.push_back(std::string(column) + ": " + e.what());
        break;
      default:
        throw;
    }
  }
}

Problem<double> reference_problem(const ChannelEnsemble<double>& channels, double variance, double epsilon) {
  const auto k = channels.dimension();
  DivergenceBall<double> ball{{VectorXd::Zero(k), variance * MatrixXd::Identity(k, k)}, epsilon};
  return validate_problem(channels, ball);
}

template <typename Row>
std::vector<SweepRecord> run_rows(const std::vector<double>& grid, unsigned threads, Row row) {
  std::vector<SweepRecord> out(grid.size());
  std::vector<std::exception_ptr> errors(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        out[i] = row(grid[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned n = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, grid.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", *v);
  return buf;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  const auto colon = split(text, ':');
  if (colon.size() == 3) {
    const double start = parse_number(colon[0]);
    const double stop = parse_number(colon[1]);
    const double count = parse_number(colon[2]);
    if (count < 1 || count != std::floor(count)) bad_grid("count must be a positive integer");
    const auto n = static_cast<std::size_t>(count);
    if (n == 1) {
      if (start != stop) bad_grid("a one-point range needs start == stop");
      grid.push_back(start);
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        grid.push_back(i + 1 == n ? stop : start + (stop - start) * static_cast<double>(i) / static_cast<double>(n - 1));
      }
    }
  } else if (colon.size() == 1) {
    for (const auto& part : split(text, ',')) grid.push_back(parse_number(part));
  } else {
    bad_grid("expected start:stop:count or a comma-separated list");
  }
  if (grid.empty()) bad_grid("empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0) || !std::isfinite(grid[i])) bad_grid("values must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1])) bad_grid("values must be strictly increasing");
  }
  return grid;
}

std::vector<SweepRecord> sweep_p(const ChannelEnsemble<double>& channels, const std::vector<double>& grid,
                                 const SweepOptions& opts) {
  const int k = static_cast<int>(channels.dimension());
  auto rows = run_rows(grid, opts.threads, [&](double p) {
    SweepRecord r;
    r.abscissa = p;
    std::string diag;
    r.epsilon = gen_gauss_epsilon(p, k, &diag);
    if (!diag.empty()) r.notes.push_back(diag);
    const Problem<double> problem = reference_problem(channels, gen_gauss_covariance(p, k), r.epsilon);
    fill(r.lower, r.notes, "lower", [&] { return solve_bound(Direction::Lower, problem, opts.solver).bound_value; });
    fill(r.upper, r.notes, "upper", [&] { return solve_bound(Direction::Upper, problem, opts.solver).bound_value; });
    fill(r.local_lower, r.notes, "local_lower",
         [&] { return local_bounds_weighted(Direction::Lower, problem, opts.solver); });
    fill(r.local_upper, r.notes, "local_upper",
         [&] { return local_bounds_weighted(Direction::Upper, problem, opts.solver); });
    r.lmmse = lmmse_upper(problem.reference().covariance, problem.ensemble());
    try {
      r.cramer_rao = cramer_rao_lower(gen_gauss_fisher(p, k), problem.ensemble());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::FisherUndefined) throw;
      r.notes.push_back(std::string("cramer_rao: ") + e.what());
    }
    check_ordering(r, opts.ordering_tolerance);
    return r;
  });
  return rows;
}

std::vector<SweepRecord> sweep_ball(const ChannelEnsemble<double>& channels, const std::vector<double>& grid,
                                    const SweepOptions& opts) {
  const int k = static_cast<int>(channels.dimension());
  return run_rows(grid, opts.threads, [&](double radius) {
    SweepRecord r;
    r.abscissa = radius;
    const PriorMoments m = uniform_ball_moments(radius, k);
    r.epsilon = *m.epsilon_to_best_gaussian;
    double variance = m.covariance(0, 0);
    if (opts.ball_variance == BallVariance::Total) variance *= k;
    const Problem<double> problem = reference_problem(channels, variance, r.epsilon);
    fill(r.lower, r.notes, "lower", [&] { return solve_bound(Direction::Lower, problem, opts.solver).bound_value; });
    fill(r.upper, r.notes, "upper", [&] { return solve_bound(Direction::Upper, problem, opts.solver).bound_value; });
    r.lmmse = lmmse_upper(problem.reference().covariance, problem.ensemble());
    check_ordering(r, opts.ordering_tolerance);
    return r;
  });
}

void check_ordering(const SweepRecord& r, double tolerance) {
  auto le = [&](const std::optional<double>& a, const std::optional<double>& b, const char* what) {
    if (!a || !b) return;
    const double scale = std::max({std::abs(*a), std::abs(*b), 1e-300});
    if (*a > *b + tolerance * scale) {
      std::ostringstream msg;
      msg.precision(15);
      msg << "at abscissa " << r.abscissa << ": " << what << " violated (" << *a << " > " << *b << ")";
      throw Error(ErrorKind::InvariantViolation, msg.str());
    }
  };
  le(r.lower, r.upper, "lower <= upper");
  le(r.local_lower, r.lower, "local_lower <= lower");
  le(r.upper, r.local_upper, "upper <= local_upper");
  le(r.lower, r.lmmse, "lower <= lmmse");
  le(r.lmmse, r.upper, "lmmse <= upper");
}

void write_csv(std::ostream& out, SweepKind kind, const std::vector<SweepRecord>& rows) {
  if (kind == SweepKind::P) {
    out << "p,epsilon,lower,upper,local_lower,local_upper,lmmse,cramer_rao\n";
  } else {
    out << "R,epsilon,lower,upper,lmmse\n";
  }
  for (const auto& r : rows) {
    out << cell(r.abscissa) << ',' << cell(r.epsilon) << ',' << cell(r.lower) << ',' << cell(r.upper);
    if (kind == SweepKind::P) {
      out << ',' << cell(r.local_lower) << ',' << cell(r.local_upper) << ',' << cell(r.lmmse) << ','
          << cell(r.cramer_rao);
    } else {
      out << ',' << cell(r.lmmse);
    }
    out << '\n';
  }
}

}  // namespace mmse
