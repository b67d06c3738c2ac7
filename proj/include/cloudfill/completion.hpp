#pragma once

#include "cloudfill/damped.hpp"
#include "cloudfill/stack.hpp"
#include "cloudfill/temporal.hpp"

#include <cstdint>

namespace cloudfill {

struct MCConfig {
  int rank = 35;
  double alpha = 3.0;
  int max_iters = 200;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;
  /// Start from seeded Gaussian factors instead of the damped-interpolation SVD.
  bool random_init = false;
};

/// X = U V^T. Columns of V are land-type abundance maps over pixels, columns
/// of U their per-(day, channel) evolution.
struct Factorization {
  RowMatrix U;  // (C*T) x rank
  RowMatrix V;  // (H*W) x rank

  RowMatrix product() const { return U * V.transpose(); }
};

/// Damped interpolation (with op.alpha) fills the unobserved entries, observed
/// entries are kept, and the result goes through a rank-truncated SVD,
/// U = U_r S_r^{1/2}, V = V_r S_r^{1/2}. Throws RankTooLarge when the rank
/// exceeds either dimension of Y.
Factorization mc_init(const RowMatrix& Y, const RowMatrix& M, const MCConfig& cfg, const DiffOperator& op);

/// Y_Z = M.Y + (1-M).(U V^T): the completed target for fixed factors.
RowMatrix mc_target(const Factorization& fac, const RowMatrix& Y, const RowMatrix& M);

/// U <- (I + alpha Delta^T Delta)^{-1} Y_Z V (V^T V)^{-1}.
RowMatrix mc_update_u(const RowMatrix& target, const RowMatrix& V, const DiffOperator& op);

/// V <- Y_Z^T U (U^T U + alpha U^T Delta^T Delta U)^{-1}.
RowMatrix mc_update_v(const RowMatrix& target, const RowMatrix& U, const DiffOperator& op);

/// One alternating sweep: refresh Z, update U, refresh Z, update V. Throws
/// SingularGram if a rank x rank Gram matrix has condition number above 1e12.
Factorization mc_step(const Factorization& fac, const RowMatrix& Y, const RowMatrix& M, const DiffOperator& op);

struct CompletionResult {
  RowMatrix X;
  Factorization factors;
  SolverTrace trace;
};

/// Iterates mc_step from mc_init until the relative change of F(U V^T) drops
/// below rel_tol or max_iters sweeps ran. The result is unclamped.
CompletionResult matrix_complete(const RowMatrix& Y, const RowMatrix& M, const MCConfig& cfg, const DiffOperator& op);

/// Scene-level entry point: builds the operator, solves over all channels and
/// clamps each row to its band's valid range afterwards.
CompletionResult matrix_complete(const ObservationMatrix& obs, const MCConfig& cfg);

}  // namespace cloudfill
