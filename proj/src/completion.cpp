#include "cloudfill/completion.hpp"

#include "cloudfill/errors.hpp"
#include "cloudfill/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cloudfill {

namespace {

constexpr double kMaxGramCondition = 1e12;
constexpr double kGramJitter = 1e-12;

// Returns (G^{-1} B^T)^T = B G^{-1} for a symmetric positive definite rank x
// rank Gram matrix G.
RowMatrix solve_right(const Matrix& gram, const RowMatrix& B, const char* which) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxGramCondition) {
    throw Error(ErrorCode::SingularGram, std::string(which) + " Gram matrix is numerically singular (eigenvalues " +
                                             std::to_string(lo) + " .. " + std::to_string(hi) +
                                             "); try a smaller rank");
  }
  const Index r = gram.rows();
  const Matrix jittered = gram + kGramJitter * gram.trace() * Matrix::Identity(r, r);
  const Eigen::LLT<Matrix> llt(jittered);
  const Matrix solved = llt.solve(B.transpose());
  return solved.transpose();
}

void check_shapes(const RowMatrix& Y, const RowMatrix& M, const DiffOperator& op) {
  if (Y.rows() != M.rows() || Y.cols() != M.cols()) throw Error(ErrorCode::ShapeMismatch, "Y and M differ in shape");
  if (Y.rows() % op.T != 0) throw Error(ErrorCode::ShapeMismatch, "row count is not a multiple of T");
}

Factorization truncated_svd_factors(const RowMatrix& X, int rank) {
  const bool tall = X.rows() > X.cols();
  const Matrix gram = tall ? Matrix(X.transpose() * X) : Matrix(X * X.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Index n = gram.rows();
  const double top = std::max(eig.eigenvalues()(n - 1), 0.0);

  // Eigenvalues are ascending; the leading singular pairs sit at the end.
  Matrix basis(n, rank);
  Vector root(rank);
  Vector inv_root(rank);
  for (int k = 0; k < rank; ++k) {
    const Index src = n - 1 - k;
    basis.col(k) = eig.eigenvectors().col(src);
    const double lambda = eig.eigenvalues()(src);
    const bool usable = top > 0.0 && lambda > top * 1e-24;
    const double sigma = usable ? std::sqrt(lambda) : 0.0;
    root(k) = std::sqrt(sigma);
    inv_root(k) = usable ? 1.0 / std::sqrt(sigma) : 0.0;
  }

  Factorization fac;
  if (tall) {
    fac.V = basis * root.asDiagonal();
    fac.U = X * basis * inv_root.asDiagonal();
  } else {
    fac.U = basis * root.asDiagonal();
    fac.V = X.transpose() * basis * inv_root.asDiagonal();
  }
  return fac;
}

}  // namespace

Factorization mc_init(const RowMatrix& Y, const RowMatrix& M, const MCConfig& cfg, const DiffOperator& op) {
  check_shapes(Y, M, op);
  if (cfg.rank < 1 || cfg.rank > Y.rows() || cfg.rank > Y.cols()) {
    throw Error(ErrorCode::RankTooLarge, "rank " + std::to_string(cfg.rank) + " outside [1, min(" +
                                             std::to_string(Y.rows()) + ", " + std::to_string(Y.cols()) + ")]");
  }
  if (cfg.random_init) {
    Rng rng(cfg.seed);
    Factorization fac;
    fac.U.resize(Y.rows(), cfg.rank);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.rank));
    for (Index i = 0; i < fac.U.size(); ++i) fac.U.data()[i] = scale * rng.normal();
    fac.V = mc_update_v((M.array() * Y.array()).matrix(), fac.U, op);
    return fac;
  }
  DampedConfig damped;
  damped.alpha = op.alpha;
  damped.optical_only = false;
  const SolveResult filled = damped_solve(Y, M, op, damped);
  // Interpolation only fills the gaps; observed entries enter the SVD as is.
  const RowMatrix start = (M.array() * Y.array() + (1.0 - M.array()) * filled.X.array()).matrix();
  return truncated_svd_factors(start, cfg.rank);
}

RowMatrix mc_target(const Factorization& fac, const RowMatrix& Y, const RowMatrix& M) {
  const RowMatrix X = fac.product();
  return (M.array() * Y.array() + (1.0 - M.array()) * X.array()).matrix();
}

RowMatrix mc_update_u(const RowMatrix& target, const RowMatrix& V, const DiffOperator& op) {
  const Matrix gram = V.transpose() * V;
  const RowMatrix smoothed = apply_smoothing_inverse(op, RowMatrix(target * V));
  return solve_right(gram, smoothed, "V^T V");
}

RowMatrix mc_update_v(const RowMatrix& target, const RowMatrix& U, const DiffOperator& op) {
  Matrix gram = U.transpose() * U;
  if (op.alpha != 0.0) {
    const RowMatrix dU = apply_difference(op, U);
    gram += op.alpha * (dU.transpose() * dU);
  }
  return solve_right(gram, RowMatrix(target.transpose() * U), "U^T U + alpha U^T Delta^T Delta U");
}

Factorization mc_step(const Factorization& fac, const RowMatrix& Y, const RowMatrix& M, const DiffOperator& op) {
  check_shapes(Y, M, op);
  if (fac.U.rows() != Y.rows() || fac.V.rows() != Y.cols() || fac.U.cols() != fac.V.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "factor shapes do not conform to Y");
  }
  Factorization next = fac;
  next.U = mc_update_u(mc_target(next, Y, M), next.V, op);
  next.V = mc_update_v(mc_target(next, Y, M), next.U, op);
  return next;
}

CompletionResult matrix_complete(const RowMatrix& Y, const RowMatrix& M, const MCConfig& cfg, const DiffOperator& op) {
  check_shapes(Y, M, op);
  if (!(cfg.rel_tol > 0.0) || cfg.max_iters < 0) throw Error(ErrorCode::InvalidConfig, "invalid MC tolerances");

  CompletionResult out;
  if ((M.array() == 0.0).all()) {
    // Nothing observed: zero is the minimizer of F for any alpha >= 0.
    if (cfg.rank < 1 || cfg.rank > Y.rows() || cfg.rank > Y.cols()) {
      throw Error(ErrorCode::RankTooLarge, "rank " + std::to_string(cfg.rank) + " exceeds matrix dimensions");
    }
    out.X = RowMatrix::Zero(Y.rows(), Y.cols());
    out.factors.U = RowMatrix::Zero(Y.rows(), cfg.rank);
    out.factors.V = RowMatrix::Zero(Y.cols(), cfg.rank);
    out.trace.objective_values = {0.0};
    out.trace.converged = true;
    out.trace.degenerate = true;
    out.trace.unanchored_series = static_cast<std::size_t>(Y.size() / op.T);
    return out;
  }

  out.factors = mc_init(Y, M, cfg, op);
  out.X = out.factors.product();
  out.trace.objective_values.push_back(objective_f(out.X, Y, M, op));
  for (int k = 0; k < cfg.max_iters; ++k) {
    out.factors = mc_step(out.factors, Y, M, op);
    out.X = out.factors.product();
    const double f = objective_f(out.X, Y, M, op);
    const double previous = out.trace.objective_values.back();
    out.trace.objective_values.push_back(f);
    out.trace.iterations = k + 1;
    if (std::abs(previous - f) / std::max(previous, 1e-300) < cfg.rel_tol) {
      out.trace.converged = true;
      break;
    }
  }
  return out;
}

CompletionResult matrix_complete(const ObservationMatrix& obs, const MCConfig& cfg) {
  const DiffOperator op = make_diff_operator(obs.T, cfg.alpha);
  CompletionResult out = matrix_complete(obs.Y, obs.M, cfg, op);
  for (int t = 0; t < obs.T; ++t) {
    for (int c = 0; c < obs.channels; ++c) {
      const ValueRange range = obs.channel_range[c];
      out.X.row(obs.row(t, c)) = out.X.row(obs.row(t, c)).cwiseMax(range.lo).cwiseMin(range.hi);
    }
  }
  return out;
}

}  // namespace cloudfill
