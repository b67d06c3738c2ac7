#include "cloudfill/temporal.hpp"

#include "cloudfill/errors.hpp"

#include <atomic>
#include <cmath>
#include <string>

namespace cloudfill {

namespace {

std::atomic<std::uint64_t> g_inverse_builds{0};

using RowMap = Eigen::Map<RowMatrix>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

void check_rows(int T, const RowMatrix& X) {
  if (T < 1 || X.rows() % T != 0) {
    throw Error(ErrorCode::ShapeMismatch,
                std::to_string(X.rows()) + " rows is not a multiple of T=" + std::to_string(T));
  }
}

}  // namespace

DiffOperator make_diff_operator(int T, double alpha) {
  if (T < 2) throw Error(ErrorCode::InvalidDimension, "T must be at least 2, got " + std::to_string(T));
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::InvalidAlpha, "alpha must be finite and nonnegative");
  }
  DiffOperator op;
  op.T = T;
  op.alpha = alpha;
  op.D = Matrix::Zero(T, T);
  for (int t = 0; t + 1 < T; ++t) {
    op.D(t, t) = -1.0;
    op.D(t, t + 1) = 1.0;
  }
  const Matrix system = Matrix::Identity(T, T) + alpha * op.D.transpose() * op.D;
  Matrix inv = system.llt().solve(Matrix::Identity(T, T));
  op.smoothing_inverse = 0.5 * (inv + inv.transpose());
  g_inverse_builds.fetch_add(1, std::memory_order_relaxed);
  return op;
}

std::uint64_t smoothing_inverse_builds() noexcept { return g_inverse_builds.load(std::memory_order_relaxed); }

RowMatrix apply_smoothing_inverse(const DiffOperator& op, const RowMatrix& X) {
  check_rows(op.T, X);
  if (op.alpha == 0.0) return X;
  // Row-major (C*T) x K is bitwise a row-major T x (C*K) matrix.
  const Index strip = X.size() / op.T;
  RowMatrix out(X.rows(), X.cols());
  RowMap(out.data(), op.T, strip).noalias() = op.smoothing_inverse * ConstRowMap(X.data(), op.T, strip);
  return out;
}

RowMatrix apply_difference(const DiffOperator& op, const RowMatrix& X) {
  check_rows(op.T, X);
  const Index block = X.rows() / op.T;
  RowMatrix out(X.rows(), X.cols());
  for (int t = 0; t + 1 < op.T; ++t) {
    out.middleRows(t * block, block) = X.middleRows((t + 1) * block, block) - X.middleRows(t * block, block);
  }
  out.bottomRows(block).setZero();
  return out;
}

RowMatrix apply_difference_gram(const DiffOperator& op, const RowMatrix& X) {
  check_rows(op.T, X);
  const Index block = X.rows() / op.T;
  const RowMatrix diff = apply_difference(op, X);
  // D^T maps the difference rows d_t onto -d_t at t and +d_{t-1} at t.
  RowMatrix out(X.rows(), X.cols());
  for (int t = 0; t < op.T; ++t) {
    auto dst = out.middleRows(t * block, block);
    dst = -diff.middleRows(t * block, block);
    if (t > 0) dst += diff.middleRows((t - 1) * block, block);
  }
  return out;
}

double smoothness_energy(int T, const RowMatrix& X) {
  check_rows(T, X);
  const Index block = X.rows() / T;
  double total = 0.0;
  for (int t = 0; t + 1 < T; ++t) {
    total += (X.middleRows((t + 1) * block, block) - X.middleRows(t * block, block)).squaredNorm();
  }
  return total;
}

}  // namespace cloudfill
