#include "infiniretri/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "infiniretri/tokenizer.hpp"

namespace infiniretri::toy {
namespace {

// splitmix64; used instead of <random> distributions so weights are identical
// across standard library implementations.
class WeightRng {
 public:
  explicit WeightRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [-bound, bound).
  double uniform(double bound) {
    const double unit = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return (2.0 * unit - 1.0) * bound;
  }

 private:
  std::uint64_t state_;
};

Matrix random_matrix(WeightRng& rng, std::size_t rows, std::size_t cols, double bound) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(bound);
  return m;
}

// out (n x p) = a (n x q) * b (q x p)
Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    auto src = a.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double s = src[k];
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += s * brow[j];
    }
  }
  return out;
}

Matrix rms_norm(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto src = x.row(i);
    double ss = 0.0;
    for (double v : src) ss += v * v;
    const double inv = 1.0 / std::sqrt(ss / static_cast<double>(x.cols()) + 1e-6);
    auto dst = out.row(i);
    for (std::size_t c = 0; c < x.cols(); ++c) dst[c] = src[c] * inv;
  }
  return out;
}

double gelu(double x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
  return 0.5 * x * (1.0 + std::tanh(kC * (x + 0.044715 * x * x * x)));
}

void add_in_place(Matrix& x, const Matrix& delta) {
  auto dst = x.data();
  auto src = delta.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

void ToyModelSpec::validate() const {
  auto require = [](std::size_t v, const char* name) {
    if (v < 1) throw ConfigError(std::string("toy model ") + name + " must be >= 1");
  };
  require(resolved_vocab(), "vocab_size");
  require(layers, "layers");
  require(heads, "heads");
  require(head_dim, "head_dim");
  require(hidden, "hidden");
  require(ffn, "ffn");
  require(max_window, "max_window");
  if (eos && (*eos < 0 || static_cast<std::size_t>(*eos) >= resolved_vocab())) {
    throw ConfigError("toy model eos token outside vocabulary");
  }
}

std::size_t ToyModelSpec::resolved_vocab() const {
  return vocab_size == 0 ? default_tokenizer().vocab_size() : vocab_size;
}

KvState::KvState(std::size_t layers, std::size_t width)
    : width_(width), keys_(layers), values_(layers) {}

KvState KvState::slice(std::size_t start, std::size_t count) const {
  if (start + count > length_) throw ShapeError("KvState::slice out of range");
  KvState out(keys_.size(), width_);
  out.length_ = count;
  for (std::size_t l = 0; l < keys_.size(); ++l) {
    const auto first = static_cast<std::ptrdiff_t>(start * width_);
    const auto last = static_cast<std::ptrdiff_t>((start + count) * width_);
    out.keys_[l].assign(keys_[l].begin() + first, keys_[l].begin() + last);
    out.values_[l].assign(values_[l].begin() + first, values_[l].begin() + last);
  }
  return out;
}

void KvState::append(const KvState& other) {
  if (other.keys_.size() != keys_.size() || other.width_ != width_) {
    throw ShapeError("KvState::append: incompatible layer count or width");
  }
  for (std::size_t l = 0; l < keys_.size(); ++l) {
    keys_[l].insert(keys_[l].end(), other.keys_[l].begin(), other.keys_[l].end());
    values_[l].insert(values_[l].end(), other.values_[l].begin(), other.values_[l].end());
  }
  length_ += other.length_;
}

ToyModel::ToyModel(ToyModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  vocab_ = spec_.resolved_vocab();
  const std::size_t d = spec_.hidden;
  const std::size_t inner = spec_.heads * spec_.head_dim;

  WeightRng rng(spec_.seed);
  embedding_ = random_matrix(rng, vocab_, d, 1.0);
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(d));
  const double inner_bound = 1.0 / std::sqrt(static_cast<double>(inner));
  const double ffn_bound = 1.0 / std::sqrt(static_cast<double>(spec_.ffn));
  layers_.reserve(spec_.layers);
  for (std::size_t l = 0; l < spec_.layers; ++l) {
    LayerWeights w;
    w.wq = random_matrix(rng, d, inner, in_bound);
    w.wk = random_matrix(rng, d, inner, in_bound);
    w.wv = random_matrix(rng, d, inner, in_bound);
    w.wo = random_matrix(rng, inner, d, inner_bound);
    w.w1 = random_matrix(rng, d, spec_.ffn, in_bound);
    w.w2 = random_matrix(rng, spec_.ffn, d, ffn_bound);
    layers_.push_back(std::move(w));
  }
}

ForwardOutput ToyModel::forward(std::span<const TokenId> tokens, KvState& state,
                                const ForwardOptions& options) const {
  if (state.layer_count() != spec_.layers || state.width() != spec_.heads * spec_.head_dim) {
    throw ShapeError("KvState does not match the model dimensions");
  }
  return run(tokens, state, options, /*full_depth=*/true);
}

ForwardOutput ToyModel::forward(std::span<const TokenId> tokens,
                                const ForwardOptions& options) const {
  KvState scratch = empty_state();
  return run(tokens, scratch, options, options.want_logits);
}

ForwardOutput ToyModel::run(std::span<const TokenId> tokens, KvState& state,
                            const ForwardOptions& options, bool full_depth) const {
  const std::size_t n = tokens.size();
  const std::size_t past = state.length();
  const std::size_t total = past + n;
  const std::size_t d = spec_.hidden;
  const std::size_t dh = spec_.head_dim;
  const std::size_t inner = spec_.heads * dh;

  if (n == 0) throw InputError("toy model forward needs at least one token");
  for (TokenId t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_) {
      throw InputError("token id " + std::to_string(t) + " out of vocabulary (size " +
                       std::to_string(vocab_) + ")");
    }
  }
  int deepest = -1;
  for (int l : options.attention_layers) {
    if (l < 0 || static_cast<std::size_t>(l) >= spec_.layers) {
      throw InputError("layer " + std::to_string(l) + " out of range for a " +
                       std::to_string(spec_.layers) + "-layer model");
    }
    deepest = std::max(deepest, l);
  }
  if (!options.attention_layers.empty() &&
      (options.query_range.start < past || options.query_range.end() > total ||
       options.query_range.length == 0)) {
    throw InputError("query range [" + std::to_string(options.query_range.start) + ", " +
                     std::to_string(options.query_range.end()) +
                     ") must lie within the new tokens [" + std::to_string(past) + ", " +
                     std::to_string(total) + ")");
  }
  const std::size_t stop_layer =
      full_depth ? spec_.layers : static_cast<std::size_t>(std::max(deepest, 0)) + 1;

  Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto emb = embedding_.row(static_cast<std::size_t>(tokens[i]));
    auto dst = x.row(i);
    const double pos = static_cast<double>(past + i);
    for (std::size_t c = 0; c < d; ++c) {
      const double freq = std::pow(10000.0, -static_cast<double>(c / 2 * 2) / static_cast<double>(d));
      dst[c] = emb[c] + ((c % 2 == 0) ? std::sin(pos * freq) : std::cos(pos * freq));
    }
  }

  ForwardOutput out;
  out.attentions.resize(options.attention_layers.size());

  for (std::size_t l = 0; l < stop_layer; ++l) {
    const LayerWeights& w = layers_[l];
    const Matrix h = rms_norm(x);
    const Matrix q = matmul(h, w.wq);
    const Matrix k = matmul(h, w.wk);
    const Matrix v = matmul(h, w.wv);

    auto& keys = state.keys_[l];
    auto& values = state.values_[l];
    keys.insert(keys.end(), k.data().begin(), k.data().end());
    values.insert(values.end(), v.data().begin(), v.data().end());

    std::vector<std::size_t> report_slots;
    for (std::size_t a = 0; a < options.attention_layers.size(); ++a) {
      if (static_cast<std::size_t>(options.attention_layers[a]) == l) report_slots.push_back(a);
    }
    attn::AttentionTensor tensor;
    tensor.layer = static_cast<int>(l);
    tensor.query_positions = options.query_range;
    tensor.key_positions = {0, total};

    Matrix mixed(n, inner, 0.0);
    for (std::size_t head = 0; head < spec_.heads; ++head) {
      Matrix qh(n, dh);
      Matrix kh(total, dh);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < dh; ++c) qh(i, c) = q(i, head * dh + c);
      }
      for (std::size_t j = 0; j < total; ++j) {
        for (std::size_t c = 0; c < dh; ++c) kh(j, c) = keys[j * inner + head * dh + c];
      }
      const Matrix scores = attn::attention_scores(qh, kh, past);
      for (std::size_t i = 0; i < n; ++i) {
        auto srow = scores.row(i);
        for (std::size_t j = 0; j <= std::min(past + i, total - 1); ++j) {
          const double a = srow[j];
          const double* vrow = &values[j * inner + head * dh];
          for (std::size_t c = 0; c < dh; ++c) mixed(i, head * dh + c) += a * vrow[c];
        }
      }
      if (!report_slots.empty()) {
        Matrix rows(options.query_range.length, total);
        for (std::size_t r = 0; r < options.query_range.length; ++r) {
          auto src = scores.row(options.query_range.start - past + r);
          std::copy(src.begin(), src.end(), rows.row(r).begin());
        }
        tensor.heads.push_back(std::move(rows));
      }
    }
    for (std::size_t a : report_slots) out.attentions[a] = tensor;

    add_in_place(x, matmul(mixed, w.wo));
    Matrix ff = matmul(rms_norm(x), w.w1);
    for (double& val : ff.data()) val = gelu(val);
    add_in_place(x, matmul(ff, w.w2));
  }

  if (stop_layer == spec_.layers) {
    state.length_ = total;
  }
  if (options.want_logits) {
    Matrix last(1, d);
    std::copy(x.row(n - 1).begin(), x.row(n - 1).end(), last.row(0).begin());
    const Matrix normed = rms_norm(last);
    out.logits.assign(vocab_, 0.0);
    for (std::size_t t = 0; t < vocab_; ++t) {
      auto e = embedding_.row(t);
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += normed(0, c) * e[c];
      out.logits[t] = dot;
    }
  }
  return out;
}

std::vector<TokenId> ToyModel::generate(std::span<const TokenId> prompt, KvState& state,
                                        std::size_t max_new_tokens) const {
  std::vector<TokenId> produced;
  if (max_new_tokens == 0) return produced;
  ForwardOptions opts;
  opts.want_logits = true;
  ForwardOutput step = forward(prompt, state, opts);
  while (true) {
    const auto best = std::max_element(step.logits.begin(), step.logits.end());
    const auto next = static_cast<TokenId>(best - step.logits.begin());
    if (spec_.eos && next == *spec_.eos) break;
    produced.push_back(next);
    if (produced.size() >= max_new_tokens) break;
    const TokenId feed[1] = {next};
    step = forward(feed, state, opts);
  }
  return produced;
}

ToyForwardResult toy_forward(const ToyModel& model, std::span<const TokenId> input_tokens,
                             const std::vector<int>& want_layers, PositionRange query_range) {
  ForwardOptions opts;
  opts.attention_layers = want_layers;
  opts.query_range = query_range;
  opts.want_logits = true;
  ForwardOutput fwd = model.forward(input_tokens, opts);
  return {std::move(fwd.attentions), std::move(fwd.logits)};
}

ToyForwardResult toy_forward(const ToyModelSpec& spec, std::span<const TokenId> input_tokens,
                             const std::vector<int>& want_layers, PositionRange query_range) {
  return toy_forward(ToyModel(spec), input_tokens, want_layers, query_range);
}

}  // namespace infiniretri::toy
