#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "infiniretri/common.hpp"
#include "infiniretri/tokenizer.hpp"

namespace infiniretri::textseg {

// A contiguous span of the source document. char_start is a byte offset into
// the UTF-8 source; token_start counts tokens from the start of the document.
struct Sentence {
  SentenceId id = 0;
  std::string text;
  std::vector<TokenId> tokens;
  std::size_t char_start = 0;
  std::size_t token_start = 0;

  std::size_t token_count() const { return tokens.size(); }
  bool operator==(const Sentence&) const = default;
};

struct Chunk {
  std::size_t index = 0;
  std::vector<Sentence> sentences;
  std::size_t token_count = 0;
};

/// Splits text after `.`, `!`, `?`, `。`, `！`, `？` or a newline run. A run of
/// terminators and newlines stays attached to the sentence it closes; any
/// trailing text without a terminator becomes the final sentence.
std::vector<Sentence> segment_sentences(std::string_view text, const Tokenizer& tokenizer);

/// Greedy first-fit packing. A sentence that would push the current chunk past
/// chunk_size starts a new chunk; a sentence longer than chunk_size is kept
/// whole as its own oversized chunk.
std::vector<Chunk> build_chunks(const std::vector<Sentence>& sentences, std::size_t chunk_size);

}  // namespace infiniretri::textseg
