#include "infiniretri/pipeline.hpp"

#include <algorithm>
#include <string>

#include <json.hpp>

#include "infiniretri/retrieval.hpp"
#include "infiniretri/textseg.hpp"

namespace infiniretri::pipeline {
namespace {

void require_positive(std::size_t value, const char* field) {
  if (value < 1) {
    throw ConfigError(std::string(field) + " must be >= 1 (got " + std::to_string(value) + ")");
  }
}

std::vector<TokenId> encode_question(const std::string& question, const Tokenizer& tokenizer) {
  auto tokens = tokenizer.encode(question);
  if (tokens.empty()) throw InputError("question must be non-empty");
  return tokens;
}

std::vector<TokenId> generate_answer(const cache::CacheState& cache,
                                     const std::vector<TokenId>& question_tokens,
                                     const PipelineConfig& config, provider::Provider& provider,
                                     std::uint64_t session, std::size_t& input_len) {
  const auto merged = cache::merge(cache, textseg::Chunk{}, question_tokens);
  input_len = merged.tokens.size();
  const auto info = provider.info();
  if (merged.tokens.size() > info.max_window) {
    throw WindowExceededError("answer pass: cache (" + std::to_string(cache.token_total) +
                              " tokens) + question (" + std::to_string(question_tokens.size()) +
                              " tokens) = " + std::to_string(merged.tokens.size()) +
                              " exceeds the provider window of " + std::to_string(info.max_window));
  }
  provider::ProviderRequest req;
  req.kind = provider::RequestKind::Generate;
  req.tokens = merged.tokens;
  req.max_new_tokens = config.answer_budget;
  req.session = session;
  req.state = cache::kv_state_plan(merged, config.cache_mode);
  return provider.generate(req);
}

}  // namespace

void PipelineConfig::validate() const {
  require_positive(chunk_size, "chunk_size");
  require_positive(top_k, "top_k");
  require_positive(phrase_token_num, "phrase_token_num");
  require_positive(answer_budget, "answer_budget");
}

std::vector<cache::SentenceRecord> retrieve(const attn::AttentionTensor& tensor,
                                            const cache::MergedInput& merged,
                                            const PipelineConfig& config) {
  if (merged.context_len == 0) return {};
  const auto aggregated = attn::aggregate_heads(tensor);
  const Matrix context = retrieval::context_columns(aggregated, merged.context_len);
  const Matrix features = retrieval::phrase_importance(context, config.phrase_token_num);
  const auto scores = retrieval::token_importance(features);
  if (std::all_of(scores.begin(), scores.end(), [](double s) { return s == 0.0; })) return {};
  const auto positions = retrieval::select_top_k(scores, config.top_k);
  return retrieval::expand_to_sentences(positions, merged);
}

RunResult run(const std::string& document, const std::string& question,
              const PipelineConfig& config, provider::Provider& provider) {
  config.validate();
  const Tokenizer& tokenizer = provider.tokenizer();
  const auto info = provider.info();
  const auto question_tokens = encode_question(question, tokenizer);
  if (question_tokens.size() + config.chunk_size > info.max_window) {
    throw ConfigError("question (" + std::to_string(question_tokens.size()) +
                      " tokens) + chunk_size (" + std::to_string(config.chunk_size) +
                      ") does not fit the provider window of " + std::to_string(info.max_window));
  }
  const int layer = config.layer.resolve(info.layers);

  const auto sentences = textseg::segment_sentences(document, tokenizer);
  const auto chunks = textseg::build_chunks(sentences, config.chunk_size);

  RunResult result;
  RunTrace& trace = result.trace;
  trace.document_sentences = sentences.size();
  for (const auto& s : sentences) trace.document_tokens += s.token_count();
  trace.question_tokens = question_tokens.size();
  trace.chunk_count = chunks.size();

  provider::SessionGuard session(provider);
  cache::CacheState cache;
  for (const auto& chunk : chunks) {
    const auto merged = cache::merge(cache, chunk, question_tokens);
    if (merged.tokens.size() > info.max_window) {
      throw WindowExceededError(
          "iteration " + std::to_string(chunk.index) + ": cache (" +
          std::to_string(cache.token_total) + ") + chunk (" + std::to_string(chunk.token_count) +
          ") + question (" + std::to_string(question_tokens.size()) + ") = " +
          std::to_string(merged.tokens.size()) + " tokens exceeds the provider window of " +
          std::to_string(info.max_window));
    }
    provider::ProviderRequest req;
    req.kind = provider::RequestKind::Attention;
    req.tokens = merged.tokens;
    req.layer = provider::LayerSpec(layer);
    req.query_range = merged.question_range;
    req.session = session.id();
    req.state = cache::kv_state_plan(merged, config.cache_mode);
    const auto tensor = provider.get_attention(req);

    IterationRecord record;
    record.chunk_index = chunk.index;
    record.chunk_tokens = chunk.token_count;
    record.cache_tokens_in = cache.token_total;
    record.merged_length = merged.tokens.size();

    cache = cache::update(cache, retrieve(tensor, merged, config));

    record.retained_ids = cache.ids();
    record.cache_tokens_out = cache.token_total;
    trace.tokens_fed += record.merged_length;
    trace.max_merged_length = std::max(trace.max_merged_length, record.merged_length);
    trace.iterations.push_back(std::move(record));
  }

  result.answer_tokens =
      generate_answer(cache, question_tokens, config, provider, session.id(), trace.answer_input_tokens);
  result.answer = tokenizer.decode(result.answer_tokens);

  trace.forward_passes = trace.iterations.size() + 1;
  trace.tokens_fed += trace.answer_input_tokens;
  trace.max_merged_length = std::max(trace.max_merged_length, trace.answer_input_tokens);
  trace.final_cache_ids = cache.ids();
  trace.final_cache_tokens = cache.token_total;
  if (trace.document_tokens > 0) {
    const auto doc = static_cast<double>(trace.document_tokens);
    trace.fed_ratio = static_cast<double>(trace.tokens_fed) / doc;
    trace.answer_window_ratio = static_cast<double>(trace.answer_input_tokens) / doc;
  }
  result.final_cache = std::move(cache);
  return result;
}

std::string answer_from_cache(const cache::CacheState& cache, const std::string& question,
                              const PipelineConfig& config, provider::Provider& provider) {
  config.validate();
  const auto question_tokens = encode_question(question, provider.tokenizer());
  provider::SessionGuard session(provider);
  std::size_t input_len = 0;
  PipelineConfig plain = config;
  // A standalone cache has no stored provider state to reuse.
  plain.cache_mode = cache::CacheMode::TokenIds;
  const auto tokens =
      generate_answer(cache, question_tokens, plain, provider, session.id(), input_len);
  return provider.tokenizer().decode(tokens);
}

std::string trace_to_json(const RunResult& result, const PipelineConfig& config) {
  using ordered_json = nlohmann::ordered_json;
  const RunTrace& t = result.trace;
  ordered_json j;
  j["config"] = {{"chunk_size", config.chunk_size},
                 {"top_k", config.top_k},
                 {"phrase_token_num", config.phrase_token_num},
                 {"layer", config.layer.to_string()},
                 {"answer_budget", config.answer_budget},
                 {"cache_mode", cache::to_string(config.cache_mode)},
                 {"provider", config.provider}};
  j["document_tokens"] = t.document_tokens;
  j["document_sentences"] = t.document_sentences;
  j["question_tokens"] = t.question_tokens;
  j["chunks"] = t.chunk_count;
  ordered_json iterations = ordered_json::array();
  for (const auto& it : t.iterations) {
    iterations.push_back({{"chunk", it.chunk_index},
                          {"chunk_tokens", it.chunk_tokens},
                          {"cache_tokens_in", it.cache_tokens_in},
                          {"merged_length", it.merged_length},
                          {"retained_ids", it.retained_ids},
                          {"cache_tokens_out", it.cache_tokens_out}});
  }
  j["iterations"] = std::move(iterations);
  j["final_cache_ids"] = t.final_cache_ids;
  j["final_cache_tokens"] = t.final_cache_tokens;
  j["totals"] = {{"forward_passes", t.forward_passes},
                 {"max_merged_length", t.max_merged_length},
                 {"tokens_fed", t.tokens_fed},
                 {"answer_input_tokens", t.answer_input_tokens},
                 {"fed_ratio", t.fed_ratio},
                 {"answer_window_ratio", t.answer_window_ratio}};
  j["answer"] = result.answer;
  return j.dump(2, ' ', false, ordered_json::error_handler_t::replace);
}

}  // namespace infiniretri::pipeline
