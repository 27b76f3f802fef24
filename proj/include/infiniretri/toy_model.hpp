#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "infiniretri/attnkernel.hpp"
#include "infiniretri/common.hpp"
#include "infiniretri/matrix.hpp"

namespace infiniretri::toy {

struct ToyModelSpec {
  std::size_t vocab_size = 0;  // 0 means "size of the default tokenizer"
  std::size_t layers = 4;
  std::size_t heads = 4;
  std::size_t head_dim = 16;
  std::size_t hidden = 64;
  std::size_t ffn = 128;
  std::uint64_t seed = 0x1f2e3d4c5b6a7988ULL;
  std::size_t max_window = 8192;
  std::optional<TokenId> eos;

  // Throws ConfigError when any dimension is zero.
  void validate() const;
  std::size_t resolved_vocab() const;
};

/// Per-layer keys and values for every position processed so far.
class KvState {
 public:
  KvState() = default;
  KvState(std::size_t layers, std::size_t width);

  std::size_t length() const { return length_; }
  std::size_t layer_count() const { return keys_.size(); }
  std::size_t width() const { return width_; }

  std::span<const double> keys(std::size_t layer) const { return keys_[layer]; }
  std::span<const double> values(std::size_t layer) const { return values_[layer]; }

  // Rows [start, start + count) of every layer, as a standalone state.
  KvState slice(std::size_t start, std::size_t count) const;
  void append(const KvState& other);

 private:
  friend class ToyModel;
  std::size_t width_ = 0;
  std::size_t length_ = 0;
  std::vector<std::vector<double>> keys_;
  std::vector<std::vector<double>> values_;
};

struct ForwardOptions {
  std::vector<int> attention_layers;
  // Absolute positions of the query rows to report; must lie among the new tokens.
  PositionRange query_range;
  bool want_logits = true;
};

struct ForwardOutput {
  std::vector<attn::AttentionTensor> attentions;  // in attention_layers order
  std::vector<double> logits;                    // next-token logits after the last input token
};

/// Pre-norm decoder with sinusoidal positions, causal multi-head
/// self-attention, a GELU feed-forward block and tied output embeddings.
/// Weights are drawn from a seeded uniform distribution, so identical specs
/// give bit-identical models. The instance is immutable and shareable
/// across threads.
class ToyModel {
 public:
  explicit ToyModel(ToyModelSpec spec);

  const ToyModelSpec& spec() const { return spec_; }
  std::size_t vocab_size() const { return vocab_; }

  // Runs `tokens` after whatever `state` already holds and appends their
  // keys/values to it.
  ForwardOutput forward(std::span<const TokenId> tokens, KvState& state,
                        const ForwardOptions& options) const;

  // Same, without keeping state; may stop after the deepest requested layer
  // when logits are not wanted.
  ForwardOutput forward(std::span<const TokenId> tokens, const ForwardOptions& options) const;

  std::vector<TokenId> generate(std::span<const TokenId> prompt, KvState& state,
                                std::size_t max_new_tokens) const;

  KvState empty_state() const { return KvState(spec_.layers, spec_.heads * spec_.head_dim); }

 private:
  struct LayerWeights {
    Matrix wq, wk, wv, wo, w1, w2;
  };

  ForwardOutput run(std::span<const TokenId> tokens, KvState& state, const ForwardOptions& options,
                    bool full_depth) const;

  ToyModelSpec spec_;
  std::size_t vocab_ = 0;
  Matrix embedding_;  // vocab x hidden
  std::vector<LayerWeights> layers_;
};

struct ToyForwardResult {
  std::vector<attn::AttentionTensor> attentions;
  std::vector<double> logits;
};

/// One-shot forward over `input_tokens` from an empty state.
ToyForwardResult toy_forward(const ToyModel& model, std::span<const TokenId> input_tokens,
                             const std::vector<int>& want_layers, PositionRange query_range);
ToyForwardResult toy_forward(const ToyModelSpec& spec, std::span<const TokenId> input_tokens,
                             const std::vector<int>& want_layers, PositionRange query_range);

}  // namespace infiniretri::toy
