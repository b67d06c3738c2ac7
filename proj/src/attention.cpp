#include "cloudfill/attention.hpp"

#include "cloudfill/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace cloudfill {

namespace {

// Turns one row of logits into normalized weights in place.
void masked_softmax(Eigen::Ref<Vector> logits, const std::vector<std::uint8_t>& m) {
  double shift = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < logits.size(); ++j) {
    if (m[j] != 0) shift = std::max(shift, logits(j));
  }
  double total = 0.0;
  for (Index j = 0; j < logits.size(); ++j) {
    logits(j) = m[j] != 0 ? std::exp(logits(j) - shift) : 0.0;
    total += logits(j);
  }
  logits /= total;
}

}  // namespace

void validate(const AttentionInputs& inp) {
  const Index n = inp.positions();
  if (n < 1) throw Error(ErrorCode::InvalidDimension, "attention needs at least one position");
  if (inp.o.rows() != n || static_cast<Index>(inp.m.size()) != n) {
    throw Error(ErrorCode::ShapeMismatch, "r, o and m must have the same number of positions");
  }
  if (inp.W_K.rows() != inp.r.cols() || inp.W_Q.rows() != inp.r.cols() || inp.W_K.cols() != inp.W_Q.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "W_K and W_Q must both be d_r x d_k");
  }
  if (inp.W_V.rows() != inp.o.cols()) throw Error(ErrorCode::ShapeMismatch, "W_V must be d_o x d_v");
  for (const Matrix* mat : {&inp.r, &inp.o, &inp.W_K, &inp.W_Q, &inp.W_V}) {
    if (!mat->allFinite()) throw Error(ErrorCode::InvariantViolation, "attention inputs must be finite");
  }
  bool any = false;
  for (auto v : inp.m) {
    if (v > 1) throw Error(ErrorCode::InvariantViolation, "mask values must be 0 or 1");
    any = any || v == 1;
  }
  if (!any) throw Error(ErrorCode::NoValidPositions, "every position is masked");
}

Vector attention_weights(const AttentionInputs& inp, Index i) {
  validate(inp);
  if (i < 0 || i >= inp.positions()) {
    throw Error(ErrorCode::InvalidDimension, "query index " + std::to_string(i) + " out of range");
  }
  const Matrix keys = inp.r * inp.W_K;
  const Vector query = inp.W_Q.transpose() * inp.r.row(i).transpose();
  Vector weights = keys * query;
  masked_softmax(weights, inp.m);
  return weights;
}

Matrix masked_attention(const AttentionInputs& inp) {
  validate(inp);
  const Matrix keys = inp.r * inp.W_K;
  const Matrix queries = inp.r * inp.W_Q;
  const Matrix values = inp.o * inp.W_V;
  // Row i of the weight matrix belongs to query i.
  Matrix weights = queries * keys.transpose();
  for (Index i = 0; i < weights.rows(); ++i) {
    Vector row = weights.row(i).transpose();
    masked_softmax(row, inp.m);
    weights.row(i) = row.transpose();
  }
  return weights * values;
}

}  // namespace cloudfill
