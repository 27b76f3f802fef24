#include "infiniretri/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "infiniretri/lexicon.hpp"

namespace infiniretri {
namespace {

std::string capitalize(std::string_view word) {
  std::string out(word);
  if (!out.empty()) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out;
}

}  // namespace

LexiconTokenizer::LexiconTokenizer() {
  pieces_.reserve(2048);
  for (int b = 0; b < 256; ++b) {
    pieces_.emplace_back(1, static_cast<char>(b));
  }

  std::vector<std::string> words;
  for (auto list : {lexicon::function_words(), lexicon::nouns(), lexicon::adjectives(),
                    lexicon::verbs(), lexicon::adverbs()}) {
    for (std::string_view w : list) {
      const std::string cap = capitalize(w);
      for (const std::string& form : {std::string(w), " " + std::string(w), cap, " " + cap}) {
        if (form.size() > 1) words.push_back(form);
      }
    }
  }
  // Stable ids: first occurrence wins.
  for (auto& w : words) {
    const bool seen = std::find(pieces_.begin() + 256, pieces_.end(), w) != pieces_.end();
    if (!seen) pieces_.push_back(std::move(w));
  }

  // pieces_ is not resized after this point, so string_views stay valid.
  for (std::size_t id = 256; id < pieces_.size(); ++id) {
    lookup_.emplace(pieces_[id], static_cast<TokenId>(id));
    max_piece_len_ = std::max(max_piece_len_, pieces_[id].size());
  }
}

std::vector<TokenId> LexiconTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> out;
  out.reserve(text.size() / 3 + 1);
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t longest = std::min(max_piece_len_, text.size() - i);
    TokenId id = static_cast<unsigned char>(text[i]);
    std::size_t taken = 1;
    for (std::size_t len = longest; len >= 2; --len) {
      auto it = lookup_.find(text.substr(i, len));
      if (it != lookup_.end()) {
        id = it->second;
        taken = len;
        break;
      }
    }
    out.push_back(id);
    i += taken;
  }
  return out;
}

std::string LexiconTokenizer::decode(std::span<const TokenId> tokens) const {
  std::string out;
  for (TokenId t : tokens) out += piece(t);
  return out;
}

std::string_view LexiconTokenizer::piece(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
    throw InputError("token id " + std::to_string(id) + " outside vocabulary of size " +
                     std::to_string(pieces_.size()));
  }
  return pieces_[static_cast<std::size_t>(id)];
}

const LexiconTokenizer& default_tokenizer() {
  static const LexiconTokenizer instance;
  return instance;
}

}  // namespace infiniretri
