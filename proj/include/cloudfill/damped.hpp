#pragma once

#include "cloudfill/stack.hpp"
#include "cloudfill/temporal.hpp"

#include <cstddef>
#include <vector>

namespace cloudfill {

struct DampedConfig {
  double alpha = 0.5;
  int max_iters = 500;
  double rel_tol = 1e-6;
  bool optical_only = true;
  /// Conjugate directions preconditioned by the smoothing inverse. When false
  /// the plain fixed-point update X <- S (M.Y + (1-M).X) is iterated.
  bool accelerate = true;
};

struct SolverTrace {
  std::vector<double> objective_values;
  int iterations = 0;
  bool converged = false;
  /// Set when some channel series has no observation at all (or the whole mask
  /// is empty); such series are returned as 0.
  bool degenerate = false;
  std::size_t unanchored_series = 0;
};

struct SolveResult {
  RowMatrix X;
  SolverTrace trace;
};

/// F(X) = ||M.(X - Y)||_F^2 + alpha * sum_t ||X_{t+1} - X_t||_F^2.
double objective_f(const RowMatrix& X, const RowMatrix& Y, const RowMatrix& M, const DiffOperator& op);

/// Q(Z, X) = ||M.(X - Y)||^2 + ||(1-M).(X - Z)||^2 + alpha * smoothness(X).
double auxiliary_q(const RowMatrix& X, const RowMatrix& Z, const RowMatrix& Y, const RowMatrix& M,
                   const DiffOperator& op);

/// One closed-form majorize-minimize step: Z = (1-M).X, then
/// X <- (I + alpha Delta^T Delta)^{-1} (M.Y + (1-M).Z).
RowMatrix damped_update(const RowMatrix& X, const RowMatrix& Y, const RowMatrix& M, const DiffOperator& op);

/// Minimizes F over all rows of Y starting from X0 = M.Y. Columns are solved in
/// independent blocks; the reported trace is the sum of the block objectives.
SolveResult damped_solve(const RowMatrix& Y, const RowMatrix& M, const DiffOperator& op, const DampedConfig& cfg);

/// Builds the operator once and calls the overload above.
SolveResult damped_solve(const RowMatrix& Y, const RowMatrix& M, int T, const DampedConfig& cfg);

/// Scene-level entry point. With optical_only, SAR/index rows are passed
/// through as M.Y and only optical rows are solved.
SolveResult damped_interpolate(const ObservationMatrix& obs, const DampedConfig& cfg);

struct InterpResult {
  RowMatrix X;
  std::size_t empty_series = 0;
};

/// Per-series piecewise-linear interpolation in t with constant extrapolation
/// outside the first/last observation. Series without observations are 0.
InterpResult linear_interp_oracle(const RowMatrix& Y, const RowMatrix& M, int T);

}  // namespace cloudfill
