#include "infiniretri/attnkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace infiniretri::attn {

Matrix attention_scores(const Matrix& queries, const Matrix& keys, std::size_t causal_offset) {
  if (queries.cols() == 0 || queries.rows() == 0 || keys.rows() == 0) {
    throw ShapeError("attention_scores: empty query or key matrix");
  }
  if (queries.cols() != keys.cols()) {
    throw ShapeError("attention_scores: query dim " + std::to_string(queries.cols()) +
                     " != key dim " + std::to_string(keys.cols()));
  }
  const std::size_t n = queries.rows();
  const std::size_t m = keys.rows();
  const std::size_t d = queries.cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Matrix out(n, m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t visible = std::min(m, causal_offset + i + 1);
    auto q = queries.row(i);
    auto row = out.row(i);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < visible; ++j) {
      auto k = keys.row(j);
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += q[c] * k[c];
      row[j] = dot * scale;
      max_logit = std::max(max_logit, row[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < visible; ++j) {
      row[j] = std::exp(row[j] - max_logit);
      sum += row[j];
    }
    for (std::size_t j = 0; j < visible; ++j) row[j] /= sum;
  }
  return out;
}

void check_tensor_shape(const AttentionTensor& tensor) {
  if (tensor.heads.empty()) throw ShapeError("attention tensor has no heads");
  const std::size_t n = tensor.heads.front().rows();
  const std::size_t m = tensor.heads.front().cols();
  for (std::size_t h = 1; h < tensor.heads.size(); ++h) {
    if (tensor.heads[h].rows() != n || tensor.heads[h].cols() != m) {
      throw ShapeError("attention head " + std::to_string(h) + " has shape " +
                       std::to_string(tensor.heads[h].rows()) + "x" +
                       std::to_string(tensor.heads[h].cols()) + ", expected " +
                       std::to_string(n) + "x" + std::to_string(m));
    }
  }
}

AggregatedAttention aggregate_heads(const AttentionTensor& tensor) {
  check_tensor_shape(tensor);
  AggregatedAttention out;
  out.matrix = tensor.heads.front();
  out.query_positions = tensor.query_positions;
  out.key_positions = tensor.key_positions;
  auto acc = out.matrix.data();
  for (std::size_t h = 1; h < tensor.heads.size(); ++h) {
    auto src = tensor.heads[h].data();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
  }
  return out;
}

}  // namespace infiniretri::attn
