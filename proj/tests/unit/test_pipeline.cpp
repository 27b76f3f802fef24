#include <gtest/gtest.h>

#include "infiniretri/nih.hpp"
#include "infiniretri/pipeline.hpp"
#include "infiniretri/planted_oracle.hpp"
#include "infiniretri/toy_provider.hpp"

namespace ir = infiniretri;
using namespace ir::pipeline;

namespace {

std::string essay(std::size_t sentences, std::uint64_t seed) {
  ir::nih::EssayGenerator gen(seed);
  std::string out;
  for (std::size_t i = 0; i < sentences; ++i) out += (i ? " " : "") + gen.next_sentence();
  return out;
}

PipelineConfig small_config() {
  PipelineConfig c;
  c.chunk_size = 64;
  c.top_k = 16;
  c.phrase_token_num = 4;
  c.answer_budget = 8;
  return c;
}

}  // namespace

TEST(Config, DefaultsAndValidation) {
  PipelineConfig c;
  EXPECT_EQ(c.chunk_size, 1024u);
  EXPECT_EQ(c.top_k, 300u);
  EXPECT_EQ(c.phrase_token_num, 15u);
  EXPECT_TRUE(c.layer.is_last());
  c.top_k = 0;
  try {
    c.validate();
    FAIL();
  } catch (const ir::ConfigError& e) {
    EXPECT_STREQ(e.what(), "top_k must be >= 1 (got 0)");
  }
}

TEST(Run, ShortDocumentIsOneIteration) {
  ir::provider::ToyProvider toy;
  auto c = small_config();
  c.chunk_size = 1024;
  const auto r = run("A short note. Nothing else.", "What?", c, toy);
  EXPECT_EQ(r.trace.iterations.size(), 1u);
  EXPECT_EQ(r.trace.forward_passes, 2u);
}

TEST(Run, EmptyDocumentAnswersFromQuestion) {
  ir::provider::ToyProvider toy;
  const auto r = run("", "Why is the sky blue?", small_config(), toy);
  EXPECT_TRUE(r.trace.iterations.empty());
  EXPECT_EQ(r.trace.forward_passes, 1u);
  EXPECT_TRUE(r.final_cache.sentences.empty());
  EXPECT_EQ(r.answer, answer_from_cache({}, "Why is the sky blue?", small_config(), toy));
}

TEST(Run, OracleKeepsNeedleAtAnyLength) {
  for (std::size_t length : {600u, 2000u, 5000u}) {
    ir::nih::HaystackSpec spec;
    spec.target_length = length;
    spec.depth_percent = 37;
    const auto hay = ir::nih::build_haystack(spec, ir::default_tokenizer());
    ir::provider::PlantedOracleSpec os;
    os.targets = {hay.needle_sentence.tokens};
    ir::provider::PlantedOracle oracle(os);
    auto c = small_config();
    c.chunk_size = 256;
    c.top_k = 40;
    c.answer_budget = 64;
    const auto r = run(hay.document, spec.question, c, oracle);
    EXPECT_TRUE(r.final_cache.contains(hay.needle_sentence_id)) << length;
    // The echo oracle answers with the planted sentence itself.
    EXPECT_EQ(r.answer, hay.needle_sentence.text);
  }
}

TEST(Run, DeterministicTrace) {
  ir::provider::ToyProvider a, b;
  const std::string doc = essay(30, 5);
  const auto c = small_config();
  const auto ra = run(doc, "Which river?", c, a);
  const auto rb = run(doc, "Which river?", c, b);
  EXPECT_EQ(trace_to_json(ra, c), trace_to_json(rb, c));
  EXPECT_EQ(ra.answer_tokens, rb.answer_tokens);
}

TEST(Run, AccountingIsBounded) {
  ir::provider::ToyProvider toy;
  const auto c = small_config();
  const auto r = run(essay(40, 8), "Which stone?", c, toy);
  const auto& t = r.trace;
  EXPECT_EQ(t.forward_passes, t.chunk_count + 1);
  std::size_t fed = 0;
  for (const auto& it : t.iterations) {
    EXPECT_EQ(it.merged_length, it.chunk_tokens + it.cache_tokens_in + t.question_tokens);
    EXPECT_LE(it.merged_length, c.chunk_size + it.cache_tokens_in + t.question_tokens);
    fed += it.merged_length;
  }
  EXPECT_EQ(t.tokens_fed, fed + t.answer_input_tokens);
  EXPECT_EQ(t.answer_input_tokens, t.final_cache_tokens + t.question_tokens);
}

TEST(Run, CacheIsReplacedEachStep) {
  ir::provider::ToyProvider toy;
  const auto r = run(essay(30, 2), "Which lamp?", small_config(), toy);
  for (std::size_t i = 1; i < r.trace.iterations.size(); ++i) {
    EXPECT_EQ(r.trace.iterations[i].cache_tokens_in, r.trace.iterations[i - 1].cache_tokens_out);
  }
  EXPECT_EQ(r.trace.final_cache_ids, r.final_cache.ids());
}

TEST(Run, WindowExceededNamesIteration) {
  ir::toy::ToyModelSpec spec;
  spec.max_window = 80;
  ir::provider::ToyProvider toy(spec);
  auto c = small_config();
  c.top_k = 60;  // the cache grows past what the window can hold
  try {
    run(essay(40, 3), "Which?", c, toy);
    FAIL();
  } catch (const ir::WindowExceededError& e) {
    EXPECT_NE(std::string(e.what()).find("iteration"), std::string::npos);
  }
}

TEST(Run, ChunkLargerThanWindowIsConfigError) {
  ir::toy::ToyModelSpec spec;
  spec.max_window = 32;
  ir::provider::ToyProvider toy(spec);
  EXPECT_THROW(run(essay(5, 3), "Which?", small_config(), toy), ir::ConfigError);
}

TEST(Run, KvModeNeedsSupportingProvider) {
  ir::provider::PlantedOracle oracle({});
  auto c = small_config();
  c.cache_mode = ir::cache::CacheMode::KvState;
  EXPECT_THROW(run(essay(10, 1), "Which?", c, oracle), ir::UnsupportedModeError);
}

TEST(Run, ModesAgreeWithoutCompression) {
  const std::string doc = essay(20, 4);
  auto c = small_config();
  c.phrase_token_num = 1;
  c.top_k = 100000;
  ir::provider::ToyProvider a, b;
  const auto ids = run(doc, "Which?", c, a).final_cache.ids();
  c.cache_mode = ir::cache::CacheMode::KvState;
  EXPECT_EQ(run(doc, "Which?", c, b).final_cache.ids(), ids);
}

TEST(Answer, FullCacheMatchesSingleWindow) {
  ir::provider::ToyProvider toy;
  const std::string doc = essay(6, 9);
  const auto sentences = ir::textseg::segment_sentences(doc, toy.tokenizer());
  const auto cache = ir::cache::update({}, sentences);
  const auto c = small_config();
  const std::string question = " What happened?";
  ir::provider::ProviderRequest req;
  req.kind = ir::provider::RequestKind::Generate;
  req.tokens = toy.tokenizer().encode(doc + question);
  req.max_new_tokens = c.answer_budget;
  EXPECT_EQ(answer_from_cache(cache, question, c, toy), toy.tokenizer().decode(toy.generate(req)));
}

TEST(Retrieve, AllZeroScoresKeepNothing) {
  ir::textseg::Chunk chunk;
  chunk.sentences = ir::textseg::segment_sentences("One. Two.", ir::default_tokenizer());
  for (const auto& s : chunk.sentences) chunk.token_count += s.tokens.size();
  const auto m = ir::cache::merge({}, chunk, ir::default_tokenizer().encode("Q?"));
  ir::attn::AttentionTensor t;
  t.heads = {ir::Matrix(m.question_range.length, m.tokens.size())};
  t.query_positions = m.question_range;
  t.key_positions = {0, m.tokens.size()};
  EXPECT_TRUE(retrieve(t, m, small_config()).empty());
}
