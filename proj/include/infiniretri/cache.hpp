#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infiniretri/common.hpp"
#include "infiniretri/textseg.hpp"

namespace infiniretri::cache {

using SentenceRecord = textseg::Sentence;

/// Sentences carried across iterations, held as token ids outside the model.
/// Sorted by document order, duplicate-free.
struct CacheState {
  std::vector<SentenceRecord> sentences;
  std::size_t token_total = 0;
  std::size_t generation = 0;

  std::vector<SentenceId> ids() const;
  bool contains(SentenceId id) const;
};

enum class Origin { Cache, Chunk, Question };

struct TokenSlot {
  Origin origin = Origin::Question;
  // Index into MergedInput::context_sentences, or npos for question tokens.
  std::size_t sentence_index = npos;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// cache tokens ++ chunk tokens ++ question tokens, with per-token provenance.
struct MergedInput {
  std::vector<TokenId> tokens;
  std::vector<TokenSlot> layout;
  std::vector<SentenceRecord> context_sentences;  // cache sentences, then chunk sentences
  std::vector<std::size_t> sentence_offsets;      // start position of each context sentence
  std::size_t cached_sentence_count = 0;
  std::size_t context_len = 0;
  PositionRange question_range;
};

MergedInput merge(const CacheState& cache, const textseg::Chunk& chunk,
                  std::span<const TokenId> question_tokens);

/// Full replacement: the new cache is exactly `retained`, sorted by id.
/// Throws std::logic_error on duplicate ids.
CacheState update(const CacheState& cache, std::vector<SentenceRecord> retained);

// Token-id cache (the default) or reuse of the provider's past key/value
// state for cached positions (ablation comparator).
enum class CacheMode { TokenIds, KvState };

std::string to_string(CacheMode mode);
CacheMode parse_cache_mode(const std::string& text);

struct StateSegment {
  SentenceId id = 0;
  std::size_t length = 0;
};

/// How a stateful provider should treat a merged input in KvState mode: the
/// `reused` prefix comes from stored state, `stored` segments are computed
/// fresh and kept for later reuse. Tokens past both are computed and dropped.
struct StatePlan {
  std::vector<StateSegment> reused;
  std::vector<StateSegment> stored;
};

/// The state plan for `merged` under `mode`; nullopt in TokenIds mode.
std::optional<StatePlan> kv_state_plan(const MergedInput& merged, CacheMode mode);

// Line-oriented snapshot: a '#' header line, then one sentence per line as
// id<TAB>space-separated token ids<TAB>escaped text.
void write_snapshot(std::ostream& out, const CacheState& cache);
CacheState read_snapshot(std::istream& in);

}  // namespace infiniretri::cache
