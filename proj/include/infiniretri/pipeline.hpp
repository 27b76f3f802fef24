#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "infiniretri/cache.hpp"
#include "infiniretri/provider.hpp"

namespace infiniretri::pipeline {

struct PipelineConfig {
  std::size_t chunk_size = 1024;
  std::size_t top_k = 300;
  std::size_t phrase_token_num = 15;
  provider::LayerSpec layer = provider::LayerSpec::last();
  std::size_t answer_budget = 64;
  cache::CacheMode cache_mode = cache::CacheMode::TokenIds;
  std::string provider = "toy";

  // Throws ConfigError naming the first invalid field.
  void validate() const;
};

struct IterationRecord {
  std::size_t chunk_index = 0;
  std::size_t chunk_tokens = 0;
  std::size_t cache_tokens_in = 0;
  std::size_t merged_length = 0;
  std::vector<SentenceId> retained_ids;
  std::size_t cache_tokens_out = 0;
};

/// Per-run token accounting.
///
/// tokens_fed sums the inputs of every forward pass, including the answer
/// pass. answer_window_ratio = answer_input_tokens / document_tokens is the
/// share of the document that the final answer is conditioned on.
struct RunTrace {
  std::size_t document_tokens = 0;
  std::size_t document_sentences = 0;
  std::size_t question_tokens = 0;
  std::size_t chunk_count = 0;
  std::vector<IterationRecord> iterations;
  std::vector<SentenceId> final_cache_ids;
  std::size_t final_cache_tokens = 0;

  std::size_t forward_passes = 0;
  std::size_t max_merged_length = 0;
  std::size_t tokens_fed = 0;
  std::size_t answer_input_tokens = 0;
  double fed_ratio = 0.0;
  double answer_window_ratio = 0.0;
};

struct RunResult {
  std::string answer;
  std::vector<TokenId> answer_tokens;
  cache::CacheState final_cache;
  RunTrace trace;
};

/// Chunk, merge, attend, retrieve, cache; then answer from the final cache.
RunResult run(const std::string& document, const std::string& question,
              const PipelineConfig& config, provider::Provider& provider);

/// Greedy generation over cache ++ question.
std::string answer_from_cache(const cache::CacheState& cache, const std::string& question,
                              const PipelineConfig& config, provider::Provider& provider);

/// Retained sentences for one merged input: aggregate heads, convolve,
/// column-sum over context, Top-K, expand. Returns nothing when every score
/// is zero.
std::vector<cache::SentenceRecord> retrieve(const attn::AttentionTensor& tensor,
                                            const cache::MergedInput& merged,
                                            const PipelineConfig& config);

std::string trace_to_json(const RunResult& result, const PipelineConfig& config);

}  // namespace infiniretri::pipeline
