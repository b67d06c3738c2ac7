#include "cloudfill/damped.hpp"

#include "cloudfill/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cloudfill {

namespace {

constexpr double kTinyObjective = 1e-300;
constexpr Index kSeriesPerBlock = 8192;

void check_conforming(const RowMatrix& A, const RowMatrix& B, const char* what) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": " + std::to_string(A.rows()) + "x" +
                                              std::to_string(A.cols()) + " vs " + std::to_string(B.rows()) + "x" +
                                              std::to_string(B.cols()));
  }
}

void validate_config(const DampedConfig& cfg) {
  if (!(cfg.rel_tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "rel_tol must be positive");
  if (cfg.max_iters < 1) throw Error(ErrorCode::InvalidConfig, "max_iters must be at least 1");
}

bool relative_change_below(double previous, double current, double tol) {
  return std::abs(current - previous) / std::max(previous, kTinyObjective) < tol;
}

// Column-major T x n view of a column block: column (c*B + b) holds the series
// of channel c at pixel j0 + b.
class SeriesBlock {
 public:
  SeriesBlock(const RowMatrix& Y, const RowMatrix& M, int T, Index j0, Index width)
      : T_(T), C_(static_cast<int>(Y.rows() / T)), width_(width), y_(T, C_ * width), m_(T, C_ * width) {
    for (int t = 0; t < T_; ++t) {
      for (int c = 0; c < C_; ++c) {
        const Index row = static_cast<Index>(t) * C_ + c;
        for (Index b = 0; b < width_; ++b) {
          y_(t, c * width_ + b) = Y(row, j0 + b);
          m_(t, c * width_ + b) = M(row, j0 + b);
        }
      }
    }
  }

  const Matrix& y() const { return y_; }
  const Matrix& m() const { return m_; }

  void scatter(const Matrix& X, RowMatrix& out, Index j0) const {
    for (int t = 0; t < T_; ++t) {
      for (int c = 0; c < C_; ++c) {
        const Index row = static_cast<Index>(t) * C_ + c;
        for (Index b = 0; b < width_; ++b) out(row, j0 + b) = X(t, c * width_ + b);
      }
    }
  }

 private:
  int T_;
  int C_;
  Index width_;
  Matrix y_;
  Matrix m_;
};

// D^T D applied to every column of a T x n matrix.
Matrix difference_gram(const Matrix& P) {
  const Index T = P.rows();
  const Matrix diff = P.bottomRows(T - 1) - P.topRows(T - 1);
  Matrix out = Matrix::Zero(T, P.cols());
  out.topRows(T - 1) -= diff;
  out.bottomRows(T - 1) += diff;
  return out;
}

double block_objective(const Matrix& X, const Matrix& y, const Matrix& m, double alpha) {
  const Index T = X.rows();
  const double data = (m.array() * (X - y).array()).matrix().squaredNorm();
  if (alpha == 0.0) return data;
  return data + alpha * (X.bottomRows(T - 1) - X.topRows(T - 1)).squaredNorm();
}

struct BlockRun {
  Matrix X;
  std::vector<double> objective;
  bool converged = false;
};

// Preconditioned conjugate gradients on each series' normal equations
// (diag(m) + alpha D^T D) x = m.y, with the smoothing inverse as
// preconditioner. The first direction is exactly the fixed-point step, and
// each step is an exact line minimization, so F never increases.
BlockRun solve_block_cg(const SeriesBlock& blk, const DiffOperator& op, const DampedConfig& cfg) {
  const Matrix& y = blk.y();
  const Matrix& m = blk.m();
  const double alpha = op.alpha;
  auto apply_system = [&](const Matrix& P) -> Matrix {
    Matrix out = m.cwiseProduct(P);
    if (alpha != 0.0) out += alpha * difference_gram(P);
    return out;
  };

  BlockRun run;
  const Matrix rhs = m.cwiseProduct(y);
  run.X = rhs;
  run.objective.push_back(block_objective(run.X, y, m, alpha));

  Matrix R = rhs - apply_system(run.X);
  Matrix Zp = op.smoothing_inverse * R;
  Matrix P = Zp;
  Eigen::RowVectorXd rz = R.cwiseProduct(Zp).colwise().sum();
  const double initial_energy = rz.sum();

  for (int k = 0; k < cfg.max_iters; ++k) {
    const Matrix Q = apply_system(P);
    const Eigen::RowVectorXd pq = P.cwiseProduct(Q).colwise().sum();
    Eigen::RowVectorXd step(P.cols());
    bool any_active = false;
    for (Index j = 0; j < P.cols(); ++j) {
      const bool active = pq(j) > std::numeric_limits<double>::min() && rz(j) > 0.0;
      step(j) = active ? rz(j) / pq(j) : 0.0;
      any_active = any_active || active;
    }
    if (!any_active) {
      run.objective.push_back(run.objective.back());
      run.converged = true;
      break;
    }
    run.X += P * step.asDiagonal();
    R -= Q * step.asDiagonal();
    Zp.noalias() = op.smoothing_inverse * R;
    const Eigen::RowVectorXd rz_next = R.cwiseProduct(Zp).colwise().sum();
    Eigen::RowVectorXd beta(P.cols());
    for (Index j = 0; j < P.cols(); ++j) beta(j) = rz(j) > 0.0 ? rz_next(j) / rz(j) : 0.0;
    P = Zp + P * beta.asDiagonal();
    rz = rz_next;

    const double f = block_objective(run.X, y, m, alpha);
    const double previous = run.objective.back();
    run.objective.push_back(f);
    // The objective alone stalls long before the iterate settles when alpha is
    // small, so the preconditioned residual energy must also have dropped.
    const bool residual_small = rz.sum() <= cfg.rel_tol * cfg.rel_tol * initial_energy;
    if (residual_small && relative_change_below(previous, f, cfg.rel_tol)) {
      run.converged = true;
      break;
    }
  }
  return run;
}

BlockRun solve_block_fixed_point(const SeriesBlock& blk, const DiffOperator& op, const DampedConfig& cfg) {
  const Matrix& y = blk.y();
  const Matrix& m = blk.m();
  BlockRun run;
  const Matrix rhs = m.cwiseProduct(y);
  const Matrix unobserved = (1.0 - m.array()).matrix();
  run.X = rhs;
  run.objective.push_back(block_objective(run.X, y, m, op.alpha));
  for (int k = 0; k < cfg.max_iters; ++k) {
    run.X = op.smoothing_inverse * (rhs + unobserved.cwiseProduct(run.X));
    const double f = block_objective(run.X, y, m, op.alpha);
    const double previous = run.objective.back();
    run.objective.push_back(f);
    if (relative_change_below(previous, f, cfg.rel_tol)) {
      run.converged = true;
      break;
    }
  }
  return run;
}

}  // namespace

double objective_f(const RowMatrix& X, const RowMatrix& Y, const RowMatrix& M, const DiffOperator& op) {
  check_conforming(X, Y, "objective_f X/Y");
  check_conforming(X, M, "objective_f X/M");
  const double data = (M.array() * (X - Y).array()).matrix().squaredNorm();
  return data + op.alpha * smoothness_energy(op.T, X);
}

double auxiliary_q(const RowMatrix& X, const RowMatrix& Z, const RowMatrix& Y, const RowMatrix& M,
                   const DiffOperator& op) {
  check_conforming(X, Z, "auxiliary_q X/Z");
  const double surrogate = ((1.0 - M.array()) * (X - Z).array()).matrix().squaredNorm();
  return objective_f(X, Y, M, op) + surrogate;
}

RowMatrix damped_update(const RowMatrix& X, const RowMatrix& Y, const RowMatrix& M, const DiffOperator& op) {
  check_conforming(X, Y, "damped_update X/Y");
  check_conforming(X, M, "damped_update X/M");
  const RowMatrix Z = ((1.0 - M.array()) * X.array()).matrix();
  const RowMatrix target = (M.array() * Y.array() + (1.0 - M.array()) * Z.array()).matrix();
  return apply_smoothing_inverse(op, target);
}

SolveResult damped_solve(const RowMatrix& Y, const RowMatrix& M, const DiffOperator& op, const DampedConfig& cfg) {
  check_conforming(Y, M, "damped_solve Y/M");
  validate_config(cfg);
  if (Y.rows() % op.T != 0) {
    throw Error(ErrorCode::ShapeMismatch, "row count is not a multiple of T=" + std::to_string(op.T));
  }
  const int C = static_cast<int>(Y.rows() / op.T);

  SolveResult result;
  result.X = RowMatrix::Zero(Y.rows(), Y.cols());
  SolverTrace& trace = result.trace;

  for (int c = 0; c < C; ++c) {
    for (Index j = 0; j < Y.cols(); ++j) {
      bool any = false;
      for (int t = 0; t < op.T && !any; ++t) any = M(static_cast<Index>(t) * C + c, j) != 0.0;
      trace.unanchored_series += any ? 0 : 1;
    }
  }
  trace.degenerate = trace.unanchored_series > 0;

  const Index width = std::max<Index>(1, kSeriesPerBlock / std::max(C, 1));
  std::vector<std::vector<double>> block_objectives;
  bool all_converged = true;
  for (Index j0 = 0; j0 < Y.cols(); j0 += width) {
    const Index w = std::min(width, Y.cols() - j0);
    const SeriesBlock blk(Y, M, op.T, j0, w);
    BlockRun run = cfg.accelerate ? solve_block_cg(blk, op, cfg) : solve_block_fixed_point(blk, op, cfg);
    blk.scatter(run.X, result.X, j0);
    all_converged = all_converged && run.converged;
    block_objectives.push_back(std::move(run.objective));
  }

  std::size_t longest = 1;
  for (const auto& f : block_objectives) longest = std::max(longest, f.size());
  trace.objective_values.assign(longest, 0.0);
  for (const auto& f : block_objectives) {
    for (std::size_t k = 0; k < longest; ++k) trace.objective_values[k] += f[std::min(k, f.size() - 1)];
  }
  trace.iterations = static_cast<int>(longest) - 1;
  trace.converged = all_converged;
  return result;
}

SolveResult damped_solve(const RowMatrix& Y, const RowMatrix& M, int T, const DampedConfig& cfg) {
  return damped_solve(Y, M, make_diff_operator(T, cfg.alpha), cfg);
}

SolveResult damped_interpolate(const ObservationMatrix& obs, const DampedConfig& cfg) {
  if (!cfg.optical_only) return damped_solve(obs.Y, obs.M, obs.T, cfg);

  std::vector<int> optical;
  for (int c = 0; c < obs.channels; ++c) {
    if (obs.channel_modality[c] == Modality::Optical) optical.push_back(c);
  }
  if (optical.empty()) throw Error(ErrorCode::InvalidConfig, "optical_only requested but scene has no optical band");
  const auto C1 = static_cast<int>(optical.size());
  RowMatrix Ysub(static_cast<Index>(obs.T) * C1, obs.Y.cols());
  RowMatrix Msub(Ysub.rows(), Ysub.cols());
  for (int t = 0; t < obs.T; ++t) {
    for (int k = 0; k < C1; ++k) {
      Ysub.row(static_cast<Index>(t) * C1 + k) = obs.Y.row(obs.row(t, optical[k]));
      Msub.row(static_cast<Index>(t) * C1 + k) = obs.M.row(obs.row(t, optical[k]));
    }
  }
  SolveResult sub = damped_solve(Ysub, Msub, obs.T, cfg);

  SolveResult out;
  out.trace = std::move(sub.trace);
  out.X = (obs.M.array() * obs.Y.array()).matrix();
  for (int t = 0; t < obs.T; ++t) {
    for (int k = 0; k < C1; ++k) out.X.row(obs.row(t, optical[k])) = sub.X.row(static_cast<Index>(t) * C1 + k);
  }
  return out;
}

InterpResult linear_interp_oracle(const RowMatrix& Y, const RowMatrix& M, int T) {
  check_conforming(Y, M, "linear_interp_oracle Y/M");
  if (T < 1 || Y.rows() % T != 0) throw Error(ErrorCode::ShapeMismatch, "row count is not a multiple of T");
  const auto C = static_cast<int>(Y.rows() / T);
  InterpResult out;
  out.X = RowMatrix::Zero(Y.rows(), Y.cols());
  std::vector<int> days;
  for (int c = 0; c < C; ++c) {
    for (Index j = 0; j < Y.cols(); ++j) {
      auto row = [&](int t) { return static_cast<Index>(t) * C + c; };
      days.clear();
      for (int t = 0; t < T; ++t) {
        if (M(row(t), j) != 0.0) days.push_back(t);
      }
      if (days.empty()) {
        ++out.empty_series;
        continue;
      }
      for (int t = 0; t <= days.front(); ++t) out.X(row(t), j) = Y(row(days.front()), j);
      for (int t = days.back(); t < T; ++t) out.X(row(t), j) = Y(row(days.back()), j);
      for (std::size_t k = 0; k + 1 < days.size(); ++k) {
        const int a = days[k];
        const int b = days[k + 1];
        const double ya = Y(row(a), j);
        const double yb = Y(row(b), j);
        for (int t = a; t <= b; ++t) {
          const double frac = static_cast<double>(t - a) / static_cast<double>(b - a);
          out.X(row(t), j) = ya + frac * (yb - ya);
        }
      }
    }
  }
  return out;
}

}  // namespace cloudfill
