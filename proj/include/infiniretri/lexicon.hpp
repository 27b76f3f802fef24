#pragma once

#include <span>
#include <string_view>

namespace infiniretri::lexicon {

// Word lists used by the synthetic essay generator. Every word here is also
// a whole-word token of LexiconTokenizer.
std::span<const std::string_view> nouns();
std::span<const std::string_view> adjectives();
std::span<const std::string_view> verbs();
std::span<const std::string_view> adverbs();
std::span<const std::string_view> function_words();

}  // namespace infiniretri::lexicon
