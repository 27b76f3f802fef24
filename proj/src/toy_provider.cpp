#include "infiniretri/toy_provider.hpp"

namespace infiniretri::provider {

ToyProvider::ToyProvider(toy::ToyModelSpec spec)
    : model_(std::make_shared<const toy::ToyModel>(std::move(spec))) {}

ToyProvider::ToyProvider(std::shared_ptr<const toy::ToyModel> model) : model_(std::move(model)) {}

ProviderInfo ToyProvider::info() const {
  const auto& spec = model_->spec();
  return {model_->vocab_size(), spec.layers, spec.heads, spec.max_window};
}

std::size_t ToyProvider::assemble_prefix(const ProviderRequest& request, toy::KvState& past) {
  std::size_t prefix = 0;
  if (!request.state) return prefix;
  auto& store = sessions_[request.session];
  for (const auto& seg : request.state->reused) {
    auto it = store.find(seg.id);
    if (it == store.end() || it->second.length() != seg.length) {
      throw ProviderError("no stored key/value state for sentence " + std::to_string(seg.id) +
                          " in session " + std::to_string(request.session));
    }
    past.append(it->second);
    prefix += seg.length;
  }
  if (prefix >= request.tokens.size()) {
    throw InputError("state-reuse prefix covers the whole input; nothing left to compute");
  }
  return prefix;
}

void ToyProvider::store_segments(const ProviderRequest& request, const toy::KvState& state,
                                 std::size_t prefix_len) {
  if (!request.state) return;
  auto& store = sessions_[request.session];
  std::size_t offset = prefix_len;
  for (const auto& seg : request.state->stored) {
    store[seg.id] = state.slice(offset, seg.length);
    offset += seg.length;
  }
}

attn::AttentionTensor ToyProvider::get_attention(const ProviderRequest& request) {
  validate_request(request, RequestKind::Attention, info(), supports_state_reuse());
  toy::ForwardOptions opts;
  opts.attention_layers = {request.layer.resolve(model_->spec().layers)};
  opts.query_range = request.query_range;
  opts.want_logits = false;

  if (!request.state) {
    auto out = model_->forward(request.tokens, opts);
    return std::move(out.attentions.front());
  }
  toy::KvState state = model_->empty_state();
  const std::size_t prefix = assemble_prefix(request, state);
  const std::span<const TokenId> fresh(request.tokens.data() + prefix,
                                       request.tokens.size() - prefix);
  auto out = model_->forward(fresh, state, opts);
  store_segments(request, state, prefix);
  return std::move(out.attentions.front());
}

std::vector<TokenId> ToyProvider::generate(const ProviderRequest& request) {
  validate_request(request, RequestKind::Generate, info(), supports_state_reuse());
  toy::KvState state = model_->empty_state();
  const std::size_t prefix = assemble_prefix(request, state);
  const std::span<const TokenId> fresh(request.tokens.data() + prefix,
                                       request.tokens.size() - prefix);
  return model_->generate(fresh, state, request.max_new_tokens);
}

}  // namespace infiniretri::provider
