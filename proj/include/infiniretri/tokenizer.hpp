#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "infiniretri/common.hpp"

namespace infiniretri {

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::vector<TokenId> encode(std::string_view text) const = 0;
  virtual std::string decode(std::span<const TokenId> tokens) const = 0;
  virtual std::size_t vocab_size() const = 0;
};

/// Lossless byte-fallback tokenizer.
///
/// Ids 0..255 are raw bytes. The remaining ids are whole words from the
/// built-in lexicon, each in bare, space-prefixed and capitalized forms.
/// Encoding is greedy longest-match, so decode(encode(s)) == s for any byte
/// string. No multi-byte entry contains a sentence terminator or newline,
/// which makes per-sentence encoding agree with whole-document encoding.
class LexiconTokenizer final : public Tokenizer {
 public:
  LexiconTokenizer();

  std::vector<TokenId> encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> tokens) const override;
  std::size_t vocab_size() const override { return pieces_.size(); }

  std::string_view piece(TokenId id) const;

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string_view, TokenId> lookup_;
  std::size_t max_piece_len_ = 1;
};

// Process-wide instance; the tokenizer is immutable after construction.
const LexiconTokenizer& default_tokenizer();

}  // namespace infiniretri
