#pragma once

#include "cloudfill/stack.hpp"

#include <cstdint>

namespace cloudfill {

/// Forward-difference operator over T days together with the precomputed
/// smoothing inverse (I + alpha * D^T D)^{-1}.
///
/// D has -1 on the diagonal, +1 on the superdiagonal and an all-zero last row.
/// The channel-extended operator Delta = D (x) I_C is never materialized; it is
/// applied to time-major matrices (row = t*C + c) through the functions below.
struct DiffOperator {
  int T = 0;
  double alpha = 0.0;
  Matrix D;
  Matrix smoothing_inverse;
};

/// Throws InvalidDimension if T < 2 and InvalidAlpha if alpha < 0 (or NaN).
DiffOperator make_diff_operator(int T, double alpha);

/// Number of smoothing inverses built by make_diff_operator since process start.
std::uint64_t smoothing_inverse_builds() noexcept;

/// ((I + alpha D^T D)^{-1} (x) I_C) * X for X with C*T rows, C inferred.
RowMatrix apply_smoothing_inverse(const DiffOperator& op, const RowMatrix& X);

/// Delta * X, i.e. row block t receives X_{t+1} - X_t and the last block is 0.
RowMatrix apply_difference(const DiffOperator& op, const RowMatrix& X);

/// Delta^T Delta * X.
RowMatrix apply_difference_gram(const DiffOperator& op, const RowMatrix& X);

/// sum_t ||X_{t+1} - X_t||_F^2 evaluated blockwise on a time-major matrix.
double smoothness_energy(int T, const RowMatrix& X);

}  // namespace cloudfill
