#include "infiniretri/provider.hpp"

#include <charconv>

namespace infiniretri::provider {

LayerSpec::LayerSpec(int index) : index_(index) {
  if (index < 0) throw ConfigError("layer must be >= 0 or 'last' (got " + std::to_string(index) + ")");
}

LayerSpec LayerSpec::parse(const std::string& text) {
  if (text == "last") return last();
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("layer must be a non-negative integer or 'last' (got '" + text + "')");
  }
  return LayerSpec(value);
}

int LayerSpec::resolve(std::size_t layers) const {
  if (layers == 0) throw InputError("provider reports zero layers");
  if (!index_) return static_cast<int>(layers) - 1;
  if (static_cast<std::size_t>(*index_) >= layers) {
    throw InputError("layer " + std::to_string(*index_) + " out of range for a " +
                     std::to_string(layers) + "-layer model");
  }
  return *index_;
}

std::string LayerSpec::to_string() const {
  return index_ ? std::to_string(*index_) : "last";
}

void validate_request(const ProviderRequest& request, RequestKind expected,
                      const ProviderInfo& info, bool supports_state) {
  if (request.kind != expected) {
    throw ProtocolError(expected == RequestKind::Attention
                            ? "get_attention called with a generate request"
                            : "generate called with an attention request");
  }
  if (request.tokens.empty()) throw InputError("provider request has no tokens");
  for (TokenId t : request.tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= info.vocab_size) {
      throw InputError("token id " + std::to_string(t) + " out of vocabulary (size " +
                       std::to_string(info.vocab_size) + ")");
    }
  }
  if (request.tokens.size() > info.max_window) {
    throw WindowExceededError("input of " + std::to_string(request.tokens.size()) +
                              " tokens exceeds the provider window of " +
                              std::to_string(info.max_window));
  }
  if (expected == RequestKind::Attention) {
    if (request.query_range.length == 0 || request.query_range.end() > request.tokens.size()) {
      throw InputError("query range [" + std::to_string(request.query_range.start) + ", " +
                       std::to_string(request.query_range.end()) + ") outside input of " +
                       std::to_string(request.tokens.size()) + " tokens");
    }
  } else if (request.max_new_tokens < 1) {
    throw InputError("max_new_tokens must be >= 1 for generate");
  }
  if (request.state && !supports_state) {
    throw UnsupportedModeError("provider does not support past key/value state reuse");
  }
}

}  // namespace infiniretri::provider
