#include "infiniretri/textseg.hpp"

namespace infiniretri::textseg {
namespace {

// Length in bytes of a sentence terminator starting at text[i], or 0.
std::size_t terminator_len(std::string_view text, std::size_t i) {
  const char c = text[i];
  if (c == '.' || c == '!' || c == '?') return 1;
  if (static_cast<unsigned char>(c) >= 0xE0 && i + 3 <= text.size()) {
    const std::string_view seq = text.substr(i, 3);
    // U+3002 ideographic full stop, U+FF01 fullwidth !, U+FF1F fullwidth ?
    if (seq == "\xE3\x80\x82" || seq == "\xEF\xBC\x81" || seq == "\xEF\xBC\x9F") return 3;
  }
  return 0;
}

bool is_newline(char c) { return c == '\n' || c == '\r'; }

}  // namespace

std::vector<Sentence> segment_sentences(std::string_view text, const Tokenizer& tokenizer) {
  std::vector<Sentence> out;
  std::size_t start = 0;
  std::size_t token_cursor = 0;

  auto emit = [&](std::size_t end) {
    Sentence s;
    s.id = static_cast<SentenceId>(out.size());
    s.text = std::string(text.substr(start, end - start));
    s.tokens = tokenizer.encode(s.text);
    s.char_start = start;
    s.token_start = token_cursor;
    token_cursor += s.tokens.size();
    out.push_back(std::move(s));
    start = end;
  };

  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t term = terminator_len(text, i);
    if (term == 0 && !is_newline(text[i])) {
      ++i;
      continue;
    }
    // Absorb the whole run of terminators and newlines.
    while (i < text.size()) {
      if (const std::size_t t = terminator_len(text, i); t > 0) {
        i += t;
      } else if (is_newline(text[i])) {
        ++i;
      } else {
        break;
      }
    }
    emit(i);
  }
  if (start < text.size()) emit(text.size());
  return out;
}

std::vector<Chunk> build_chunks(const std::vector<Sentence>& sentences, std::size_t chunk_size) {
  if (chunk_size < 1) {
    throw ConfigError("chunk_size must be >= 1 (got " + std::to_string(chunk_size) + ")");
  }
  std::vector<Chunk> chunks;
  Chunk current;
  for (const Sentence& s : sentences) {
    const std::size_t len = s.token_count();
    if (!current.sentences.empty() && current.token_count + len > chunk_size) {
      chunks.push_back(std::move(current));
      current = Chunk{};
      current.index = chunks.size();
    }
    current.sentences.push_back(s);
    current.token_count += len;
  }
  if (!current.sentences.empty()) chunks.push_back(std::move(current));
  return chunks;
}

}  // namespace infiniretri::textseg
