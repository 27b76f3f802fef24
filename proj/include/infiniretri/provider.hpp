#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "infiniretri/attnkernel.hpp"
#include "infiniretri/cache.hpp"
#include "infiniretri/common.hpp"
#include "infiniretri/tokenizer.hpp"

namespace infiniretri::provider {

/// A zero-based layer index, or "last".
class LayerSpec {
 public:
  LayerSpec() = default;
  explicit LayerSpec(int index);
  static LayerSpec last() { return {}; }
  static LayerSpec parse(const std::string& text);

  bool is_last() const { return !index_.has_value(); }
  int index() const { return index_.value_or(-1); }
  // Throws InputError when out of range for a model with `layers` layers.
  int resolve(std::size_t layers) const;
  std::string to_string() const;

  bool operator==(const LayerSpec&) const = default;

 private:
  std::optional<int> index_;
};

enum class RequestKind { Attention, Generate };

struct ProviderRequest {
  RequestKind kind = RequestKind::Attention;
  std::vector<TokenId> tokens;
  LayerSpec layer;
  PositionRange query_range;
  std::size_t max_new_tokens = 0;
  std::uint64_t session = 0;
  // Set only in the kv-state ablation mode.
  std::optional<cache::StatePlan> state;
};

struct ProviderInfo {
  std::size_t vocab_size = 0;
  std::size_t layers = 0;
  std::size_t heads = 0;
  std::size_t max_window = 0;
};

/// Source of attention tensors and greedy generations. The provider owns
/// tokenization; callers work entirely in its token-id space.
///
/// A single session is used strictly request/response. Implementations are
/// not required to be thread-safe; run one instance per concurrent worker.
class Provider {
 public:
  virtual ~Provider() = default;

  virtual ProviderInfo info() const = 0;
  virtual const Tokenizer& tokenizer() const = 0;
  virtual std::string name() const = 0;

  /// Attention of the requested layer restricted to query_range rows, over
  /// every input position as columns.
  virtual attn::AttentionTensor get_attention(const ProviderRequest& request) = 0;

  /// Greedy continuation of request.tokens; stops at max_new_tokens or
  /// end-of-sequence (which is not included).
  virtual std::vector<TokenId> generate(const ProviderRequest& request) = 0;

  virtual bool supports_state_reuse() const { return false; }

  virtual std::uint64_t open_session() { return ++last_session_; }
  virtual void close_session(std::uint64_t /*session*/) {}

 private:
  std::uint64_t last_session_ = 0;
};

/// Common request checks: kind, ranges, window size and state support.
void validate_request(const ProviderRequest& request, RequestKind expected,
                      const ProviderInfo& info, bool supports_state);

// Closes the session on scope exit.
class SessionGuard {
 public:
  explicit SessionGuard(Provider& p) : provider_(p), id_(p.open_session()) {}
  ~SessionGuard() { provider_.close_session(id_); }
  SessionGuard(const SessionGuard&) = delete;
  SessionGuard& operator=(const SessionGuard&) = delete;
  std::uint64_t id() const { return id_; }

 private:
  Provider& provider_;
  std::uint64_t id_;
};

}  // namespace infiniretri::provider
