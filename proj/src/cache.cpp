#include "infiniretri/cache.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace infiniretri::cache {
namespace {

std::string escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\' || i + 1 == text.size()) {
      out += text[i];
      continue;
    }
    switch (text[++i]) {
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case 't': out += '\t'; break;
      default: out += text[i];
    }
  }
  return out;
}

}  // namespace

std::vector<SentenceId> CacheState::ids() const {
  std::vector<SentenceId> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(s.id);
  return out;
}

bool CacheState::contains(SentenceId id) const {
  auto it = std::lower_bound(sentences.begin(), sentences.end(), id,
                             [](const SentenceRecord& s, SentenceId v) { return s.id < v; });
  return it != sentences.end() && it->id == id;
}

MergedInput merge(const CacheState& cache, const textseg::Chunk& chunk,
                  std::span<const TokenId> question_tokens) {
  if (question_tokens.empty()) throw InputError("merge: question tokens must be non-empty");

  MergedInput out;
  const std::size_t context_len = cache.token_total + chunk.token_count;
  out.tokens.reserve(context_len + question_tokens.size());
  out.layout.reserve(context_len + question_tokens.size());
  out.context_sentences.reserve(cache.sentences.size() + chunk.sentences.size());

  auto append = [&](const SentenceRecord& s, Origin origin) {
    const std::size_t index = out.context_sentences.size();
    out.sentence_offsets.push_back(out.tokens.size());
    out.tokens.insert(out.tokens.end(), s.tokens.begin(), s.tokens.end());
    out.layout.insert(out.layout.end(), s.tokens.size(), TokenSlot{origin, index});
    out.context_sentences.push_back(s);
  };
  for (const auto& s : cache.sentences) append(s, Origin::Cache);
  out.cached_sentence_count = cache.sentences.size();
  for (const auto& s : chunk.sentences) append(s, Origin::Chunk);

  out.context_len = out.tokens.size();
  out.question_range = {out.context_len, question_tokens.size()};
  out.tokens.insert(out.tokens.end(), question_tokens.begin(), question_tokens.end());
  out.layout.insert(out.layout.end(), question_tokens.size(), TokenSlot{});
  return out;
}

CacheState update(const CacheState& cache, std::vector<SentenceRecord> retained) {
  std::sort(retained.begin(), retained.end(),
            [](const SentenceRecord& a, const SentenceRecord& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < retained.size(); ++i) {
    if (retained[i].id == retained[i - 1].id) {
      throw std::logic_error("cache update: duplicate sentence id " +
                             std::to_string(retained[i].id));
    }
  }
  CacheState out;
  out.generation = cache.generation + 1;
  for (const auto& s : retained) out.token_total += s.token_count();
  out.sentences = std::move(retained);
  return out;
}

std::string to_string(CacheMode mode) {
  return mode == CacheMode::TokenIds ? "token-ids" : "kv-state";
}

CacheMode parse_cache_mode(const std::string& text) {
  if (text == "token-ids") return CacheMode::TokenIds;
  if (text == "kv-state") return CacheMode::KvState;
  throw ConfigError("cache_mode must be token-ids or kv-state (got '" + text + "')");
}

std::optional<StatePlan> kv_state_plan(const MergedInput& merged, CacheMode mode) {
  if (mode == CacheMode::TokenIds) return std::nullopt;
  StatePlan plan;
  for (std::size_t i = 0; i < merged.context_sentences.size(); ++i) {
    const auto& s = merged.context_sentences[i];
    auto& target = i < merged.cached_sentence_count ? plan.reused : plan.stored;
    target.push_back({s.id, s.token_count()});
  }
  return plan;
}

void write_snapshot(std::ostream& out, const CacheState& cache) {
  out << "# generation=" << cache.generation << " sentences=" << cache.sentences.size()
      << " token_total=" << cache.token_total << '\n';
  for (const auto& s : cache.sentences) {
    out << s.id << '\t';
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      if (i) out << ' ';
      out << s.tokens[i];
    }
    out << '\t' << escape(s.text) << '\n';
  }
}

CacheState read_snapshot(std::istream& in) {
  CacheState cache;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("generation=");
      if (pos != std::string::npos) cache.generation = std::stoull(line.substr(pos + 11));
      continue;
    }
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) throw InputError("malformed cache snapshot line: " + line);
    SentenceRecord s;
    try {
      s.id = std::stoll(line.substr(0, tab1));
    } catch (const std::exception&) {
      throw InputError("malformed sentence id in cache snapshot line: " + line);
    }
    std::istringstream toks(line.substr(tab1 + 1, tab2 - tab1 - 1));
    TokenId t;
    while (toks >> t) s.tokens.push_back(t);
    if (!toks.eof()) throw InputError("malformed token list in cache snapshot line: " + line);
    s.text = unescape(line.substr(tab2 + 1));
    cache.token_total += s.tokens.size();
    cache.sentences.push_back(std::move(s));
  }
  return cache;
}

}  // namespace infiniretri::cache
