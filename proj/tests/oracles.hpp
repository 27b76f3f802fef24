// Straight-line reference implementations used to check the library. Kept
// deliberately naive: no prefix sums, no partial sorts, extended precision.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <vector>

#include "infiniretri/cache.hpp"
#include "infiniretri/matrix.hpp"

namespace oracle {

using infiniretri::Matrix;

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                            double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

// softmax(Q Kᵀ / sqrt(d)) with key j visible to row i iff j <= offset + i.
inline Matrix attention(const Matrix& q, const Matrix& k, std::size_t offset) {
  Matrix out(q.rows(), k.rows());
  const long double scale = 1.0L / std::sqrt(static_cast<long double>(q.cols()));
  for (std::size_t i = 0; i < q.rows(); ++i) {
    std::vector<long double> logits(k.rows(), 0.0L);
    long double peak = -INFINITY;
    for (std::size_t j = 0; j < k.rows() && j <= offset + i; ++j) {
      long double dot = 0.0L;
      for (std::size_t d = 0; d < q.cols(); ++d) {
        dot += static_cast<long double>(q(i, d)) * static_cast<long double>(k(j, d));
      }
      logits[j] = dot * scale;
      peak = std::max(peak, logits[j]);
    }
    long double total = 0.0L;
    for (std::size_t j = 0; j < k.rows() && j <= offset + i; ++j) {
      logits[j] = std::exp(logits[j] - peak);
      total += logits[j];
    }
    for (std::size_t j = 0; j < k.rows() && j <= offset + i; ++j) {
      out(i, j) = static_cast<double>(logits[j] / total);
    }
  }
  return out;
}

inline Matrix head_sum(const std::vector<Matrix>& heads) {
  Matrix out(heads.front().rows(), heads.front().cols());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      long double s = 0.0L;
      for (const auto& h : heads) s += h(r, c);
      out(r, c) = static_cast<double>(s);
    }
  }
  return out;
}

// Window of width k starting at each column, zero past the right edge.
inline Matrix convolve(const Matrix& a, std::size_t k) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      long double s = 0.0L;
      for (std::size_t u = 0; u < k; ++u) {
        if (j + u < a.cols()) s += a(i, j + u);
      }
      out(i, j) = static_cast<double>(s);
    }
  }
  return out;
}

// Transpose, then sum each row of the transpose.
inline std::vector<double> column_sum(const Matrix& t) {
  Matrix tr(t.cols(), t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) tr(j, i) = t(i, j);
  }
  std::vector<double> out(tr.rows(), 0.0);
  for (std::size_t j = 0; j < tr.rows(); ++j) {
    for (double v : tr.row(j)) out[j] += v;
  }
  return out;
}

inline std::vector<std::size_t> top_k(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(k, order.size()));
  std::sort(order.begin(), order.end());
  return order;
}

// Sentence ids covering `positions`, by walking the layout one position at a time.
inline std::vector<infiniretri::SentenceId> covering_ids(const std::vector<std::size_t>& positions,
                                                         const infiniretri::cache::MergedInput& m) {
  std::vector<infiniretri::SentenceId> ids;
  for (std::size_t p : positions) {
    std::size_t cursor = 0;
    for (const auto& s : m.context_sentences) {
      if (p >= cursor && p < cursor + s.tokens.size()) {
        if (std::find(ids.begin(), ids.end(), s.id) == ids.end()) ids.push_back(s.id);
        break;
      }
      cursor += s.tokens.size();
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace oracle
