#pragma once

// Helpers and independent oracles shared by the test binaries. Nothing in
// here calls into the code paths it is used to check.

#include "cloudfill/random.hpp"
#include "cloudfill/stack.hpp"

#include <Eigen/Dense>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace cloudfill::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("cloudfill_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  fs::path path_;
};

inline std::vector<char> file_bytes(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline RowMatrix random_matrix(Rng& rng, Index rows, Index cols, double lo = -1.0, double hi = 1.0) {
  RowMatrix out(rows, cols);
  for (Index i = 0; i < out.size(); ++i) out.data()[i] = rng.uniform(lo, hi);
  return out;
}

inline RowMatrix random_mask(Rng& rng, Index rows, Index cols, double p_observed) {
  RowMatrix out(rows, cols);
  for (Index i = 0; i < out.size(); ++i) out.data()[i] = rng.uniform() < p_observed ? 1.0 : 0.0;
  return out;
}

/// Dense T x T forward-difference matrix built entry by entry.
inline Matrix dense_difference(int T) {
  Matrix D = Matrix::Zero(T, T);
  for (int t = 0; t + 1 < T; ++t) {
    D(t, t) = -1.0;
    D(t, t + 1) = 1.0;
  }
  return D;
}

/// Explicit Kronecker product A (x) B.
inline Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < A.cols(); ++j) out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  }
  return out;
}

/// Gauss-Jordan inverse with partial pivoting.
inline Matrix gauss_jordan_inverse(Matrix A) {
  const Index n = A.rows();
  Matrix inv = Matrix::Identity(n, n);
  for (Index col = 0; col < n; ++col) {
    Index pivot = col;
    for (Index r = col + 1; r < n; ++r) {
      if (std::abs(A(r, col)) > std::abs(A(pivot, col))) pivot = r;
    }
    A.row(col).swap(A.row(pivot));
    inv.row(col).swap(inv.row(pivot));
    const double p = A(col, col);
    A.row(col) /= p;
    inv.row(col) /= p;
    for (Index r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = A(r, col);
      A.row(r) -= f * A.row(col);
      inv.row(r) -= f * inv.row(col);
    }
  }
  return inv;
}

/// Central finite-difference partial derivative of f at entry (i, j) of X.
template <typename F>
double central_difference(F&& f, RowMatrix X, Index i, Index j, double step) {
  const double x0 = X(i, j);
  X(i, j) = x0 + step;
  const double up = f(X);
  X(i, j) = x0 - step;
  const double down = f(X);
  return (up - down) / (2.0 * step);
}

}  // namespace cloudfill::testing
