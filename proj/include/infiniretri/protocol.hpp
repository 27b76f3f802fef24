#pragma once

#include <cstdio>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <sys/types.h>
#include <vector>

#include "infiniretri/provider.hpp"

namespace infiniretri::provider {

// Newline-delimited JSON wire format spoken with external adapters.
namespace wire {

enum class Kind { Attention, Generate, Tokenize, Detokenize };

struct Request {
  std::int64_t id = 0;
  Kind kind = Kind::Attention;
  std::optional<std::vector<TokenId>> tokens;
  std::optional<std::string> text;
  LayerSpec layer;
  std::size_t query_start = 0;
  std::size_t query_len = 0;
  std::size_t max_new_tokens = 0;
};

// One JSON object, keys in the documented order, no trailing newline.
std::string encode_request(const Request& request);
Request decode_request(std::string_view line);

std::string encode_f32_base64(std::span<const float> values);
std::vector<float> decode_f32_base64(std::string_view text);

// Handshake line -> info; throws ProtocolError on an error handshake.
ProviderInfo decode_handshake(std::string_view line);
std::string encode_handshake(const ProviderInfo& info);

// Each decoder checks the echoed id and raises ProtocolError on an error
// response or a malformed payload.
attn::AttentionTensor decode_attention(std::string_view line, std::int64_t expected_id,
                                       std::size_t expected_rows, std::size_t expected_cols);
std::vector<TokenId> decode_tokens(std::string_view line, std::int64_t expected_id);
std::string decode_text(std::string_view line, std::int64_t expected_id);

std::string encode_attention(std::int64_t id, const attn::AttentionTensor& tensor);
std::string encode_tokens(std::int64_t id, std::span<const TokenId> tokens);
std::string encode_text(std::int64_t id, std::string_view text);
std::string encode_error(std::int64_t id, std::string_view message);

}  // namespace wire

/// Child process connected through its stdin/stdout. stderr is inherited.
class Subprocess {
 public:
  explicit Subprocess(const std::string& command);
  ~Subprocess();
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  void write_line(std::string_view line);
  std::optional<std::string> read_line();
  // Closes the child's stdin and reaps it; returns the exit status.
  int finish();

 private:
  pid_t pid_ = -1;
  int to_child_ = -1;
  std::FILE* from_child_ = nullptr;
  std::optional<int> status_;
};

class ProtocolProvider;

class RemoteTokenizer final : public Tokenizer {
 public:
  explicit RemoteTokenizer(ProtocolProvider& owner) : owner_(&owner) {}
  std::vector<TokenId> encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> tokens) const override;
  std::size_t vocab_size() const override;

 private:
  ProtocolProvider* owner_;
};

/// Client for an external adapter process. Requests are serialized over one
/// connection. The adapter cannot reuse key/value state.
class ProtocolProvider final : public Provider {
 public:
  explicit ProtocolProvider(const std::string& command);

  ProviderInfo info() const override { return info_; }
  const Tokenizer& tokenizer() const override { return tokenizer_; }
  std::string name() const override { return "proto"; }

  attn::AttentionTensor get_attention(const ProviderRequest& request) override;
  std::vector<TokenId> generate(const ProviderRequest& request) override;

  std::vector<TokenId> tokenize(std::string_view text);
  std::string detokenize(std::span<const TokenId> tokens);

  int shutdown() { return process_.finish(); }

 private:
  std::string roundtrip(const wire::Request& request);

  Subprocess process_;
  ProviderInfo info_;
  RemoteTokenizer tokenizer_;
  std::int64_t next_id_ = 1;
};

// Command from INFINIRETRI_PROVIDER_CMD, or nullopt when unset or empty.
std::optional<std::string> provider_command_from_env();

}  // namespace infiniretri::provider
