#pragma once

#include <map>
#include <memory>
#include <unordered_map>

#include "infiniretri/provider.hpp"
#include "infiniretri/toy_model.hpp"

namespace infiniretri::provider {

// Built-in provider backed by the toy decoder. Supports the kv-state
// ablation mode by storing per-sentence key/value rows per session.
class ToyProvider final : public Provider {
 public:
  explicit ToyProvider(toy::ToyModelSpec spec = {});
  explicit ToyProvider(std::shared_ptr<const toy::ToyModel> model);

  ProviderInfo info() const override;
  const Tokenizer& tokenizer() const override { return default_tokenizer(); }
  std::string name() const override { return "toy"; }

  attn::AttentionTensor get_attention(const ProviderRequest& request) override;
  std::vector<TokenId> generate(const ProviderRequest& request) override;

  bool supports_state_reuse() const override { return true; }
  void close_session(std::uint64_t session) override { sessions_.erase(session); }

  const toy::ToyModel& model() const { return *model_; }

 private:
  using SentenceStates = std::unordered_map<SentenceId, toy::KvState>;

  // Past state assembled from the reused segments; returns the prefix length.
  std::size_t assemble_prefix(const ProviderRequest& request, toy::KvState& past);
  void store_segments(const ProviderRequest& request, const toy::KvState& state,
                      std::size_t prefix_len);

  std::shared_ptr<const toy::ToyModel> model_;
  std::map<std::uint64_t, SentenceStates> sessions_;
};

}  // namespace infiniretri::provider
