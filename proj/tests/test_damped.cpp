#include <doctest.h>

#include "cloudfill/damped.hpp"
#include "cloudfill/errors.hpp"
#include "cloudfill/temporal.hpp"
#include "test_util.hpp"

using namespace cloudfill;
using namespace cloudfill::testing;

namespace {

RowMatrix column(std::initializer_list<double> v) {
  RowMatrix out(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) out(i++, 0) = x;
  return out;
}

/// F written out entry by entry on the time-major layout.
double objective_oracle(const RowMatrix& X, const RowMatrix& Y, const RowMatrix& M, int T, double alpha) {
  const Index C = X.rows() / T;
  double data = 0.0;
  for (Index i = 0; i < X.size(); ++i) {
    const double r = M.data()[i] * (X.data()[i] - Y.data()[i]);
    data += r * r;
  }
  double smooth = 0.0;
  for (Index t = 0; t + 1 < T; ++t) {
    for (Index c = 0; c < C; ++c) smooth += (X.row((t + 1) * C + c) - X.row(t * C + c)).squaredNorm();
  }
  return data + alpha * smooth;
}

/// Q(Z, X) written out directly.
double auxiliary_oracle(const RowMatrix& X, const RowMatrix& Z, const RowMatrix& Y, const RowMatrix& M, int T,
                        double alpha) {
  double extra = 0.0;
  for (Index i = 0; i < X.size(); ++i) {
    const double r = (1.0 - M.data()[i]) * (X.data()[i] - Z.data()[i]);
    extra += r * r;
  }
  return objective_oracle(X, Y, M, T, alpha) + extra;
}

bool non_increasing(const std::vector<double>& f, double abs_slack) {
  for (std::size_t k = 1; k < f.size(); ++k) {
    if (f[k] > f[k - 1] + abs_slack) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("objective hand values") {
  const auto op = make_diff_operator(2, 1.0);
  const RowMatrix y = column({0.0, 1.0});
  const RowMatrix ones = RowMatrix::Ones(2, 1);
  CHECK(objective_f(y, y, ones, op) == doctest::Approx(1.0).epsilon(1e-15));

  Rng rng(1);
  const auto op3 = make_diff_operator(3, 0.8);
  RowMatrix constant(6, 4);
  for (int t = 0; t < 3; ++t) constant.middleRows(2 * t, 2) = RowMatrix::Constant(2, 4, 0.3);
  constant.row(1).setConstant(0.6);
  constant.row(3).setConstant(0.6);
  constant.row(5).setConstant(0.6);
  CHECK(objective_f(constant, constant, RowMatrix::Ones(6, 4), op3) == 0.0);
  CHECK(objective_f(constant, random_matrix(rng, 6, 4), RowMatrix::Zero(6, 4), op3) == 0.0);

  const RowMatrix X = random_matrix(rng, 6, 4);
  const RowMatrix Y = random_matrix(rng, 6, 4);
  const RowMatrix M = random_mask(rng, 6, 4, 0.5);
  const RowMatrix Z = random_matrix(rng, 6, 4);
  CHECK(objective_f(X, Y, M, op3) == doctest::Approx(objective_oracle(X, Y, M, 3, 0.8)).epsilon(1e-12));
  CHECK(auxiliary_q(X, Z, Y, M, op3) == doctest::Approx(auxiliary_oracle(X, Z, Y, M, 3, 0.8)).epsilon(1e-12));
  // Q touches F where Z = X.
  CHECK(auxiliary_q(X, X, Y, M, op3) == doctest::Approx(objective_f(X, Y, M, op3)).epsilon(1e-15));
}

TEST_CASE("fully observed with zero damping returns the data") {
  Rng rng(2);
  const RowMatrix Y = random_matrix(rng, 12, 20, 0.0, 1.0);
  for (bool accelerate : {true, false}) {
    DampedConfig cfg;
    cfg.alpha = 0.0;
    cfg.accelerate = accelerate;
    const auto res = damped_solve(Y, RowMatrix::Ones(12, 20), 4, cfg);
    CHECK(res.X == Y);
    CHECK(res.trace.iterations <= 1);
    CHECK(res.trace.converged);
  }
}

TEST_CASE("small damping interpolates a single gap") {
  const RowMatrix y = column({0.0, 0.0, 1.0});
  const RowMatrix m = column({1.0, 0.0, 1.0});
  DampedConfig cfg;
  cfg.alpha = 1e-6;
  const auto res = damped_solve(y, m, 3, cfg);
  CHECK(std::abs(res.X(1, 0) - 0.5) <= 1e-3);
  CHECK(std::abs(res.X(0, 0)) <= 1e-3);
  CHECK(std::abs(res.X(2, 0) - 1.0) <= 1e-3);
}

TEST_CASE("single observation extrapolates as a constant") {
  const double v = 0.37;
  const RowMatrix y = column({0.0, v, 0.0, 0.0, 0.0});
  const RowMatrix m = column({0.0, 1.0, 0.0, 0.0, 0.0});
  DampedConfig cfg;
  cfg.alpha = 1e-6;
  const auto res = damped_solve(y, m, 5, cfg);
  for (Index t = 0; t < 5; ++t) CHECK(std::abs(res.X(t, 0) - v) <= 1e-3);
}

TEST_CASE("linear interpolation oracle") {
  SUBCASE("midpoint") {
    const auto res = linear_interp_oracle(column({0, 0, 0, 0, 1}), column({1, 0, 0, 0, 1}), 5);
    CHECK(res.X(2, 0) == doctest::Approx(0.5));
  }
  SUBCASE("single observation") {
    const auto res = linear_interp_oracle(column({0, 0, 0.4, 0}), column({0, 0, 1, 0}), 4);
    for (Index t = 0; t < 4; ++t) CHECK(res.X(t, 0) == 0.4);
  }
  SUBCASE("hand series") {
    const auto res = linear_interp_oracle(column({0, 0.2, 0, 0.8, 0}), column({0, 1, 0, 1, 0}), 5);
    const double expected[] = {0.2, 0.2, 0.5, 0.8, 0.8};
    for (Index t = 0; t < 5; ++t) CHECK(res.X(t, 0) == doctest::Approx(expected[t]).epsilon(1e-12));
  }
  SUBCASE("channels interpolate independently") {
    // Two channels, T=3: channel 0 observed at t=0,2; channel 1 only at t=1.
    RowMatrix Y(6, 1), M(6, 1);
    Y << 0.0, 0.0, 0.0, 0.9, 1.0, 0.0;
    M << 1, 0, 0, 1, 1, 0;
    const auto res = linear_interp_oracle(Y, M, 3);
    CHECK(res.X(2, 0) == doctest::Approx(0.5));
    CHECK(res.X(1, 0) == 0.9);
    CHECK(res.X(5, 0) == 0.9);
    CHECK(res.empty_series == 0);
  }
  SUBCASE("empty series") {
    const auto res = linear_interp_oracle(column({0, 0, 0}), column({0, 0, 0}), 3);
    CHECK(res.empty_series == 1);
    CHECK(res.X.isZero(0));
  }
}

TEST_CASE("small damping matches the linear oracle on random series") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const int T = 3 + static_cast<int>(rng.index(20));
    const int C = 1 + static_cast<int>(rng.index(3));
    const RowMatrix Y = random_matrix(rng, C * T, 25, 0.0, 1.0);
    RowMatrix M = random_mask(rng, C * T, 25, rng.uniform(0.1, 0.9));
    const RowMatrix MY = (M.array() * Y.array()).matrix();
    DampedConfig cfg;
    cfg.alpha = 1e-6;
    const auto damped = damped_solve(MY, M, T, cfg);
    const auto oracle = linear_interp_oracle(MY, M, T);
    double worst = 0.0;
    for (Index col = 0; col < Y.cols(); ++col) {
      for (Index c = 0; c < C; ++c) {
        bool any = false;
        for (Index t = 0; t < T; ++t) any = any || M(t * C + c, col) != 0.0;
        if (!any) continue;
        for (Index t = 0; t < T; ++t) {
          worst = std::max(worst, std::abs(damped.X(t * C + c, col) - oracle.X(t * C + c, col)));
        }
      }
    }
    CHECK(worst <= 1e-3);
    // Observed anchor.
    CHECK(((damped.X - MY).array() * M.array()).abs().maxCoeff() <= 1e-3);
  }
}

TEST_CASE("monotone descent for both update paths") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int T = 2 + static_cast<int>(rng.index(12));
    const int C = 1 + static_cast<int>(rng.index(3));
    const RowMatrix M = random_mask(rng, C * T, 40, rng.uniform(0.05, 0.95));
    const RowMatrix Y = (random_matrix(rng, C * T, 40, 0.0, 1.0).array() * M.array()).matrix();
    for (bool accelerate : {true, false}) {
      DampedConfig cfg;
      cfg.alpha = rng.uniform(0.01, 5.0);
      cfg.accelerate = accelerate;
      cfg.max_iters = 60;
      cfg.rel_tol = 1e-14;
      const auto res = damped_solve(Y, M, T, cfg);
      CHECK(non_increasing(res.trace.objective_values, 1e-10));
      CHECK(res.trace.objective_values.front() ==
            doctest::Approx(objective_oracle(Y, Y, M, T, cfg.alpha)).epsilon(1e-12));
      CHECK(res.trace.objective_values.back() ==
            doctest::Approx(objective_oracle(res.X, Y, M, T, cfg.alpha)).epsilon(1e-9));
    }
  }
}

TEST_CASE("closed-form update minimizes the auxiliary function") {
  Rng rng(17);
  const int T = 6, C = 2;
  const double alpha = 0.9;
  const auto op = make_diff_operator(T, alpha);
  const RowMatrix M = random_mask(rng, C * T, 5, 0.5);
  const RowMatrix Y = (random_matrix(rng, C * T, 5, 0.0, 1.0).array() * M.array()).matrix();
  const RowMatrix Xprev = random_matrix(rng, C * T, 5);
  const RowMatrix Xnext = damped_update(Xprev, Y, M, op);

  auto q = [&](const RowMatrix& X) { return auxiliary_oracle(X, Xprev, Y, M, T, alpha); };
  double before = 0.0;
  double after = 0.0;
  for (Index i = 0; i < Xprev.rows(); ++i) {
    for (Index j = 0; j < Xprev.cols(); ++j) {
      before = std::max(before, std::abs(central_difference(q, Xprev, i, j, 1e-5)));
      after = std::max(after, std::abs(central_difference(q, Xnext, i, j, 1e-5)));
    }
  }
  CHECK(after / before < 1e-4);
  CHECK(objective_f(Xnext, Y, M, op) <= objective_f(Xprev, Y, M, op));

  // The subtracted data target is not a minimizer of Q.
  const RowMatrix minus =
      apply_smoothing_inverse(op, RowMatrix((M.array() * Y.array() - (1.0 - M.array()) * Xprev.array()).matrix()));
  double minus_grad = 0.0;
  for (Index i = 0; i < minus.rows(); ++i) {
    for (Index j = 0; j < minus.cols(); ++j) {
      minus_grad = std::max(minus_grad, std::abs(central_difference(q, minus, i, j, 1e-5)));
    }
  }
  CHECK(minus_grad / before > 1e-2);
}

TEST_CASE("solution is stationary for F") {
  Rng rng(23);
  const int T = 10, C = 3;
  const double alpha = 0.5;
  const RowMatrix M = random_mask(rng, C * T, 30, 0.4);
  const RowMatrix Y = (random_matrix(rng, C * T, 30, 0.0, 1.0).array() * M.array()).matrix();
  DampedConfig cfg;
  cfg.alpha = alpha;
  cfg.rel_tol = 1e-10;
  const auto res = damped_solve(Y, M, T, cfg);
  CHECK(res.trace.converged);

  auto f = [&](const RowMatrix& X) { return objective_oracle(X, Y, M, T, alpha); };
  const RowMatrix start = Y;
  double scale = 0.0;
  for (Index i = 0; i < Y.rows(); ++i) {
    for (Index j = 0; j < Y.cols(); ++j) scale = std::max(scale, std::abs(central_difference(f, start, i, j, 1e-5)));
  }
  for (int k = 0; k < 20; ++k) {
    const Index i = static_cast<Index>(rng.index(Y.rows()));
    const Index j = static_cast<Index>(rng.index(Y.cols()));
    CHECK(std::abs(central_difference(f, res.X, i, j, 1e-5)) / scale < 1e-4);
  }
}

TEST_CASE("plain iteration reaches the same minimizer") {
  Rng rng(41);
  const int T = 8;
  const RowMatrix M = random_mask(rng, 2 * T, 10, 0.6);
  const RowMatrix Y = (random_matrix(rng, 2 * T, 10, 0.0, 1.0).array() * M.array()).matrix();
  DampedConfig fast;
  fast.alpha = 2.0;
  fast.rel_tol = 1e-12;
  DampedConfig slow = fast;
  slow.accelerate = false;
  slow.max_iters = 20000;
  slow.rel_tol = 1e-15;
  const auto a = damped_solve(Y, M, T, fast);
  const auto b = damped_solve(Y, M, T, slow);
  CHECK((a.X - b.X).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("unobserved series are zero and flagged") {
  RowMatrix Y = RowMatrix::Zero(4, 3);
  RowMatrix M = RowMatrix::Zero(4, 3);
  M(0, 0) = 1.0;
  Y(0, 0) = 0.4;
  DampedConfig cfg;
  const auto res = damped_solve(Y, M, 4, cfg);
  CHECK(res.trace.degenerate);
  CHECK(res.trace.unanchored_series == 2);
  CHECK(res.X.col(1).isZero(0));
  CHECK(res.X.col(2).isZero(0));
  CHECK((res.X.col(0).array() - 0.4).abs().maxCoeff() < 1e-6);

  const auto empty = damped_solve(Y, RowMatrix::Zero(4, 3), 4, cfg);
  CHECK(empty.trace.degenerate);
  CHECK(empty.X.isZero(0));
}

TEST_CASE("scene entry point passes SAR rows through") {
  Rng rng(3);
  ObservationMatrix obs;
  obs.T = 5;
  obs.channels = 3;
  obs.channel_modality = {Modality::Optical, Modality::Optical, Modality::SAR};
  obs.channel_range = {default_range(Modality::Optical), default_range(Modality::Optical),
                       default_range(Modality::SAR)};
  obs.M = random_mask(rng, 15, 8, 0.5);
  obs.Y = (random_matrix(rng, 15, 8, 0.0, 1.0).array() * obs.M.array()).matrix();

  const auto before = smoothing_inverse_builds();
  DampedConfig cfg;
  const auto res = damped_interpolate(obs, cfg);
  CHECK(smoothing_inverse_builds() - before == 1);
  for (int t = 0; t < 5; ++t) CHECK(res.X.row(t * 3 + 2) == obs.Y.row(t * 3 + 2));

  cfg.optical_only = false;
  const auto all = damped_interpolate(obs, cfg);
  const auto direct = damped_solve(obs.Y, obs.M, 5, cfg);
  CHECK((all.X - direct.X).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("configuration and shape errors") {
  const RowMatrix Y = RowMatrix::Zero(6, 2);
  DampedConfig cfg;
  CHECK_THROWS_AS(damped_solve(Y, RowMatrix::Zero(6, 3), 3, cfg), Error);
  CHECK_THROWS_AS(damped_solve(Y, RowMatrix::Zero(6, 2), 4, cfg), Error);
  cfg.rel_tol = 0.0;
  CHECK_THROWS_AS(damped_solve(Y, RowMatrix::Zero(6, 2), 3, cfg), Error);
}
