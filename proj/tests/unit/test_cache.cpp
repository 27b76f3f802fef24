#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "infiniretri/cache.hpp"
#include "infiniretri/tokenizer.hpp"

namespace ir = infiniretri;
using namespace ir::cache;

namespace {

const ir::Tokenizer& tok() { return ir::default_tokenizer(); }

SentenceRecord sentence(ir::SentenceId id, const std::string& text) {
  SentenceRecord s;
  s.id = id;
  s.text = text;
  s.tokens = tok().encode(text);
  return s;
}

ir::textseg::Chunk chunk_of(std::vector<SentenceRecord> sentences) {
  ir::textseg::Chunk c;
  for (const auto& s : sentences) c.token_count += s.tokens.size();
  c.sentences = std::move(sentences);
  return c;
}

}  // namespace

TEST(Merge, FirstIterationIsChunkThenQuestion) {
  const auto chunk = chunk_of({sentence(0, "One."), sentence(1, " Two."), sentence(2, " Three.")});
  const auto q = tok().encode(" Which?");
  const auto m = merge({}, chunk, q);
  std::vector<ir::TokenId> want;
  for (const auto& s : chunk.sentences) want.insert(want.end(), s.tokens.begin(), s.tokens.end());
  EXPECT_EQ(m.context_len, want.size());
  want.insert(want.end(), q.begin(), q.end());
  EXPECT_EQ(m.tokens, want);
  EXPECT_EQ(m.question_range, (ir::PositionRange{m.context_len, q.size()}));
  EXPECT_EQ(m.cached_sentence_count, 0u);
  EXPECT_EQ(m.layout.back().origin, Origin::Question);
}

TEST(Merge, CacheComesFirst) {
  CacheState c = update({}, {sentence(2, "Cached.")});
  const auto m = merge(c, chunk_of({sentence(7, " Seven."), sentence(8, " Eight.")}), tok().encode("Q?"));
  ASSERT_EQ(m.context_sentences.size(), 3u);
  EXPECT_EQ(m.context_sentences[0].id, 2);
  EXPECT_EQ(m.context_sentences[1].id, 7);
  EXPECT_EQ(m.context_sentences[2].id, 8);
  EXPECT_EQ(m.layout.front().origin, Origin::Cache);
  EXPECT_EQ(m.layout[m.sentence_offsets[1]].origin, Origin::Chunk);
}

TEST(Merge, EmptyQuestionRejected) {
  EXPECT_THROW(merge({}, chunk_of({sentence(0, "A.")}), {}), ir::InputError);
}

TEST(Merge, DecodeRoundTrip) {
  std::mt19937_64 rng(12);
  const char* words[] = {"river", " stone", " Quiet", "!", " the", "lamp", " 42", "."};
  std::uniform_int_distribution<int> pick(0, 7), len(1, 6), count(0, 5);
  for (int trial = 0; trial < 30; ++trial) {
    auto make = [&](ir::SentenceId id) {
      std::string t;
      for (int i = len(rng); i > 0; --i) t += words[pick(rng)];
      return sentence(id, t);
    };
    std::vector<SentenceRecord> cached, chunked;
    ir::SentenceId id = 0;
    for (int i = count(rng); i > 0; --i) cached.push_back(make(id++));
    for (int i = count(rng) + 1; i > 0; --i) chunked.push_back(make(id++));
    const std::string question = " why?";
    std::string want;
    for (const auto& s : cached) want += s.text;
    for (const auto& s : chunked) want += s.text;
    want += question;
    const auto m = merge(update({}, cached), chunk_of(chunked), tok().encode(question));
    EXPECT_EQ(tok().decode(m.tokens), want);
  }
}

TEST(Update, EmptyRetention) {
  const auto c = update(update({}, {sentence(1, "x.")}), {});
  EXPECT_TRUE(c.sentences.empty());
  EXPECT_EQ(c.token_total, 0u);
  EXPECT_EQ(c.generation, 2u);
}

TEST(Update, FixedPoint) {
  const auto a = update({}, {sentence(1, "x."), sentence(4, "y z.")});
  const auto b = update(a, a.sentences);
  EXPECT_EQ(a.sentences, b.sentences);
  EXPECT_EQ(a.token_total, b.token_total);
  EXPECT_EQ(b.generation, a.generation + 1);
}

TEST(Update, SortsShuffledInput) {
  std::vector<SentenceRecord> in;
  for (int i = 0; i < 20; ++i) in.push_back(sentence(i * 5, "s" + std::to_string(i) + "."));
  std::mt19937_64 rng(20);
  std::shuffle(in.begin(), in.end(), rng);
  const auto c = update({}, in);
  auto ids = c.ids();
  EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
  EXPECT_EQ(ids.size(), 20u);
  EXPECT_TRUE(c.contains(45));
  EXPECT_FALSE(c.contains(46));
}

TEST(Update, DuplicateIdsAreLogicError) {
  EXPECT_THROW(update({}, {sentence(3, "a."), sentence(3, "a.")}), std::logic_error);
}

TEST(Mode, ParseAndPrint) {
  EXPECT_EQ(parse_cache_mode("token-ids"), CacheMode::TokenIds);
  EXPECT_EQ(parse_cache_mode("kv-state"), CacheMode::KvState);
  EXPECT_EQ(to_string(CacheMode::KvState), "kv-state");
  EXPECT_THROW(parse_cache_mode("paged"), ir::ConfigError);
}

TEST(Mode, StatePlanOnlyInKvMode) {
  const auto m = merge(update({}, {sentence(0, "Old.")}), chunk_of({sentence(1, " New.")}),
                       tok().encode("Q?"));
  EXPECT_FALSE(kv_state_plan(m, CacheMode::TokenIds).has_value());
  const auto plan = kv_state_plan(m, CacheMode::KvState);
  ASSERT_TRUE(plan.has_value());
  ASSERT_EQ(plan->reused.size(), 1u);
  EXPECT_EQ(plan->reused[0].id, 0);
  ASSERT_EQ(plan->stored.size(), 1u);
  EXPECT_EQ(plan->stored[0].id, 1);
}

TEST(Snapshot, RoundTrip) {
  const auto c = update(update({}, {}), {sentence(3, "Tab\there.\n"), sentence(9, " back\\slash?")});
  std::stringstream ss;
  write_snapshot(ss, c);
  const auto back = read_snapshot(ss);
  ASSERT_EQ(back.sentences.size(), c.sentences.size());
  for (std::size_t i = 0; i < c.sentences.size(); ++i) {
    EXPECT_EQ(back.sentences[i].id, c.sentences[i].id);
    EXPECT_EQ(back.sentences[i].tokens, c.sentences[i].tokens);
    EXPECT_EQ(back.sentences[i].text, c.sentences[i].text);
  }
  EXPECT_EQ(back.token_total, c.token_total);
  EXPECT_EQ(back.generation, c.generation);
}

TEST(Snapshot, GarbageRejected) {
  std::stringstream ss("x\t1 2\tbad id\n");
  EXPECT_THROW(read_snapshot(ss), ir::InputError);
}
