#include "infiniretri/retrieval.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace infiniretri::retrieval {

Matrix phrase_importance(const Matrix& attention, std::size_t phrase_token_num) {
  if (phrase_token_num < 1) {
    throw ConfigError("phrase_token_num must be >= 1 (got " + std::to_string(phrase_token_num) +
                      ")");
  }
  const std::size_t m = attention.cols();
  Matrix out(attention.rows(), m);
  // Direct window sums rather than prefix differences: equal windows then
  // produce bit-equal scores, so ties are broken by position alone.
  for (std::size_t i = 0; i < attention.rows(); ++i) {
    auto row = attention.row(i);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t hi = std::min(m, j + phrase_token_num);
      double sum = 0.0;
      for (std::size_t u = j; u < hi; ++u) sum += row[u];
      dst[j] = sum;
    }
  }
  return out;
}

ImportanceVector token_importance(const Matrix& features) {
  if (features.rows() < 1) throw ShapeError("token_importance: feature matrix has no rows");
  ImportanceVector scores(features.cols(), 0.0);
  for (std::size_t j = 0; j < features.rows(); ++j) {
    auto row = features.row(j);
    for (std::size_t i = 0; i < row.size(); ++i) scores[i] += row[i];
  }
  return scores;
}

std::vector<std::size_t> select_top_k(const ImportanceVector& scores, std::size_t top_k) {
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  if (top_k >= scores.size()) return order;

  auto better = [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_k) - 1,
                   order.end(), better);
  order.resize(top_k);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<cache::SentenceRecord> expand_to_sentences(const std::vector<std::size_t>& positions,
                                                       const cache::MergedInput& merged) {
  std::vector<std::size_t> indices;
  indices.reserve(positions.size());
  for (std::size_t pos : positions) {
    if (pos >= merged.context_len) {
      throw std::logic_error("selected position " + std::to_string(pos) +
                             " is outside the context range [0, " +
                             std::to_string(merged.context_len) + ")");
    }
    indices.push_back(merged.layout[pos].sentence_index);
  }
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());

  std::vector<cache::SentenceRecord> out;
  out.reserve(indices.size());
  for (std::size_t idx : indices) out.push_back(merged.context_sentences[idx]);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

Matrix context_columns(const attn::AggregatedAttention& attention, std::size_t context_len) {
  const Matrix& full = attention.matrix;
  if (context_len > full.cols()) {
    throw ShapeError("context length " + std::to_string(context_len) +
                     " exceeds attention width " + std::to_string(full.cols()));
  }
  Matrix out(full.rows(), context_len);
  for (std::size_t i = 0; i < full.rows(); ++i) {
    auto src = full.row(i);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(context_len),
              out.row(i).begin());
  }
  return out;
}

}  // namespace infiniretri::retrieval
