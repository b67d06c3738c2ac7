#pragma once

#include "cloudfill/stack.hpp"

#include <cstdint>
#include <vector>

namespace cloudfill {

/// Inputs of the masked SAR-guided attention over a flattened set of N
/// space-time positions. Keys and queries come from the SAR encodings r,
/// values from the optical encodings o; only positions with m = 1 (cloud-free)
/// may contribute.
struct AttentionInputs {
  Matrix r;                     // N x d_r
  Matrix o;                     // N x d_o
  std::vector<std::uint8_t> m;  // N
  Matrix W_K;                   // d_r x d_k
  Matrix W_Q;                   // d_r x d_k
  Matrix W_V;                   // d_o x d_v

  Index positions() const noexcept { return r.rows(); }
};

/// Throws ShapeMismatch, InvariantViolation (non-binary mask, non-finite
/// entries) or NoValidPositions (mask identically 0).
void validate(const AttentionInputs& inp);

/// Softmax over j of K(r_j)^T Q(r_i) restricted to m_j = 1, normalized per
/// query i. Logits are shifted by their maximum over unmasked j.
Vector attention_weights(const AttentionInputs& inp, Index i);

/// h_i = sum_j a_ij W_V^T o_j for every query i, masked or not.
Matrix masked_attention(const AttentionInputs& inp);

}  // namespace cloudfill
