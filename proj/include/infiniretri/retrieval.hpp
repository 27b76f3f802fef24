#pragma once

#include <cstddef>
#include <vector>

#include "infiniretri/attnkernel.hpp"
#include "infiniretri/cache.hpp"
#include "infiniretri/matrix.hpp"

namespace infiniretri::retrieval {

// One non-negative score per context token.
using ImportanceVector = std::vector<double>;

/// t[i][j] = sum_{u=0}^{k-1} A[i][j+u], zero past the right edge.
Matrix phrase_importance(const Matrix& attention, std::size_t phrase_token_num);

inline Matrix phrase_importance(const attn::AggregatedAttention& attention,
                                std::size_t phrase_token_num) {
  return phrase_importance(attention.matrix, phrase_token_num);
}

/// s[i] = sum over query rows j of t[j][i].
ImportanceVector token_importance(const Matrix& features);

/// Positions of the top_k largest scores, ascending. Ties go to the smaller
/// position; top_k >= scores.size() selects everything.
std::vector<std::size_t> select_top_k(const ImportanceVector& scores, std::size_t top_k);

/// Distinct sentences covering `positions`, in document order. Every position
/// must be a context position of `merged` (std::logic_error otherwise).
std::vector<cache::SentenceRecord> expand_to_sentences(const std::vector<std::size_t>& positions,
                                                       const cache::MergedInput& merged);

/// Restricts an aggregated question x merged-input matrix to its context
/// columns [0, context_len).
Matrix context_columns(const attn::AggregatedAttention& attention, std::size_t context_len);

}  // namespace infiniretri::retrieval
