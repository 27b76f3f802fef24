#pragma once

#include <cstddef>
#include <vector>

#include "infiniretri/common.hpp"
#include "infiniretri/matrix.hpp"

namespace infiniretri::attn {

/// Per-head attention weights for one layer.
///
/// Each head matrix has one row per query position in `query_positions` and
/// one column per key position in `key_positions` (both index the merged
/// input). Rows are softmax-normalized over causally visible keys; keys after
/// the query's absolute position are exactly zero.
struct AttentionTensor {
  int layer = 0;
  std::vector<Matrix> heads;
  PositionRange query_positions;
  PositionRange key_positions;

  std::size_t head_count() const { return heads.size(); }
  std::size_t rows() const { return heads.empty() ? 0 : heads.front().rows(); }
  std::size_t cols() const { return heads.empty() ? 0 : heads.front().cols(); }
};

/// Element-wise sum over heads. Rows sum to the head count.
struct AggregatedAttention {
  Matrix matrix;
  PositionRange query_positions;
  PositionRange key_positions;
};

/// softmax(Q Kᵀ / sqrt(d)) with a causal mask. Query row i sits at absolute
/// position causal_offset + i; key j is visible iff j <= causal_offset + i.
Matrix attention_scores(const Matrix& queries, const Matrix& keys, std::size_t causal_offset);

AggregatedAttention aggregate_heads(const AttentionTensor& tensor);

// Throws ShapeError if the heads disagree in shape or there are none.
void check_tensor_shape(const AttentionTensor& tensor);

}  // namespace infiniretri::attn
