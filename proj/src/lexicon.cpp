#include "infiniretri/lexicon.hpp"

#include <array>

namespace infiniretri::lexicon {
namespace {

constexpr std::array<std::string_view, 96> kNouns = {
    "startup",   "founder",   "investor",  "idea",      "product",  "market",
    "company",   "city",      "problem",   "essay",     "program",  "language",
    "hacker",    "painter",   "school",    "student",   "teacher",  "book",
    "question",  "answer",    "money",     "time",      "work",     "project",
    "user",      "customer",  "growth",    "risk",      "decision", "mistake",
    "lesson",    "habit",     "friend",    "team",      "office",   "computer",
    "software",  "design",    "taste",     "ambition",  "wealth",   "power",
    "harbor",    "river",     "mountain",  "garden",    "window",   "street",
    "morning",   "evening",   "winter",    "summer",    "journey",  "story",
    "history",   "science",   "theory",    "experiment","result",   "pattern",
    "signal",    "detail",    "method",    "tool",      "machine",  "library",
    "network",   "system",    "process",   "reason",    "argument", "opinion",
    "culture",   "society",   "economy",   "industry",  "revenue",  "price",
    "version",   "feature",   "bug",       "deadline",  "meeting",  "email",
    "letter",    "paper",     "draft",     "sentence",  "word",     "page",
    "chapter",   "memory",    "attention", "curiosity", "patience", "courage",
};

constexpr std::array<std::string_view, 48> kAdjectives = {
    "good",      "bad",       "new",        "old",       "small",     "large",
    "simple",    "hard",      "easy",       "early",     "late",      "quiet",
    "loud",      "careful",   "reckless",   "honest",    "clever",    "strange",
    "ordinary",  "rare",      "common",     "useful",    "useless",   "obvious",
    "subtle",    "important", "trivial",    "ambitious", "modest",    "serious",
    "playful",   "young",     "mature",     "rich",      "poor",      "fast",
    "slow",      "bright",    "dark",       "warm",      "cold",      "open",
    "closed",    "private",   "public",     "original",  "familiar",  "difficult",
};

constexpr std::array<std::string_view, 48> kVerbs = {
    "builds",    "changes",   "explains",   "finds",     "makes",     "shapes",
    "teaches",   "shows",     "hides",      "reveals",   "follows",   "leads",
    "improves",  "breaks",    "fixes",      "writes",    "reads",     "solves",
    "creates",   "destroys",  "protects",   "rewards",   "punishes",  "measures",
    "ignores",   "notices",   "prefers",    "resembles", "requires",  "suggests",
    "affects",   "drives",    "limits",     "supports",  "replaces",  "tests",
    "questions", "answers",   "describes",  "predicts",  "connects",  "separates",
    "attracts",  "surprises", "outlasts",   "compounds", "sharpens",  "softens",
};

constexpr std::array<std::string_view, 24> kAdverbs = {
    "quickly",  "slowly",     "carefully", "rarely",    "often",    "usually",
    "quietly",  "gradually",  "suddenly",  "eventually","clearly",  "barely",
    "deeply",   "simply",     "mostly",    "always",    "never",    "sometimes",
    "honestly", "surprisingly","naturally","certainly", "probably", "seldom",
};

constexpr std::array<std::string_view, 40> kFunctionWords = {
    "the",  "a",     "an",    "of",    "in",     "on",    "to",    "and",
    "or",   "but",   "is",    "are",   "was",    "be",    "that",  "this",
    "it",   "with",  "for",   "as",    "at",     "by",    "from",  "what",
    "which","who",   "when",  "where", "why",    "how",   "best",  "thing",
    "do",   "most",  "more",  "than",  "every",  "some",  "one",   "day",
};

}  // namespace

std::span<const std::string_view> nouns() { return kNouns; }
std::span<const std::string_view> adjectives() { return kAdjectives; }
std::span<const std::string_view> verbs() { return kVerbs; }
std::span<const std::string_view> adverbs() { return kAdverbs; }
std::span<const std::string_view> function_words() { return kFunctionWords; }

}  // namespace infiniretri::lexicon
