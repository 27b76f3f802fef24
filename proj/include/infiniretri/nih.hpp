#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "infiniretri/pipeline.hpp"
#include "infiniretri/provider.hpp"
#include "infiniretri/textseg.hpp"

namespace infiniretri::nih {

inline constexpr const char* kDefaultNeedle =
    "The best thing to do in San Francisco is eat a sandwich and sit in Dolores Park on a sunny "
    "day.";
inline constexpr const char* kDefaultQuestion = "What is the best thing to do in San Francisco?";
inline constexpr const char* kDefaultAnswer =
    "eat a sandwich and sit in Dolores Park on a sunny day";

// Deterministic filler prose built from the lexicon.
class EssayGenerator {
 public:
  explicit EssayGenerator(std::uint64_t seed) : rng_(seed) {}
  std::string next_sentence();

 private:
  std::string_view pick(std::span<const std::string_view> words);
  std::mt19937_64 rng_;
};

struct HaystackSpec {
  std::size_t target_length = 4096;  // tokens
  std::uint64_t filler_seed = 42;
  std::string needle = kDefaultNeedle;
  double depth_percent = 50.0;
  std::string question = kDefaultQuestion;
  std::string expected_answer = kDefaultAnswer;
};

struct Haystack {
  std::string document;
  SentenceId needle_sentence_id = 0;
  textseg::Sentence needle_sentence;
  std::size_t document_tokens = 0;
  std::size_t sentence_count = 0;
};

/// Filler sentences up to ~target_length tokens with the needle inserted at
/// the sentence boundary nearest depth_percent of the filler tokens.
Haystack build_haystack(const HaystackSpec& spec, const Tokenizer& tokenizer);

/// Fraction of the expected answer's words (lower-cased alphanumeric runs,
/// counted with multiplicity) that occur in the generated answer.
double answer_match(const std::string& answer, const std::string& expected);

struct CellOutcome {
  std::size_t length = 0;
  double depth = 0.0;
  bool recall_hit = false;
  double answer_match = 0.0;
  std::string error;
  std::string answer;
  SentenceId needle_sentence_id = 0;
  pipeline::RunTrace trace;
};

struct NihGrid {
  std::vector<std::size_t> lengths;
  std::vector<double> depths;
  std::vector<CellOutcome> cells;  // length-major: cells[li * depths.size() + di]

  const CellOutcome& at(std::size_t length_index, std::size_t depth_index) const {
    return cells[length_index * depths.size() + depth_index];
  }
  double recall_rate() const;
};

using ProviderFactory = std::function<std::unique_ptr<provider::Provider>()>;
// Called per cell after the haystack is built, before the pipeline runs.
using CellPrepare = std::function<void(provider::Provider&, const Haystack&)>;

struct GridOptions {
  std::vector<std::size_t> lengths;
  std::vector<double> depths;
  std::string needle = kDefaultNeedle;
  std::string question = kDefaultQuestion;
  std::string expected_answer = kDefaultAnswer;
  std::uint64_t filler_seed = 42;
  std::size_t jobs = 1;
  pipeline::PipelineConfig config;
};

/// One pipeline run per (length, depth) cell. Cell failures are recorded in
/// the cell; invalid grid options throw ConfigError up front.
NihGrid run_grid(const GridOptions& options, const ProviderFactory& make_provider,
                 const CellPrepare& prepare = {});

/// Writes the machine-readable CSV and a red-to-green SVG heatmap of
/// answer_match (columns: lengths, rows: depths).
void emit_heatmap(const NihGrid& grid, const std::string& csv_path, const std::string& svg_path);
std::string grid_csv(const NihGrid& grid);
std::string grid_svg(const NihGrid& grid);

/// Oracle wiring for NIH runs: plants the needle sentence as the target.
CellPrepare plant_needle();

// Synthetic QA samples: a few filler sentences with one fact sentence whose
// answer is a unique number.
struct SyntheticQa {
  std::string context;
  std::string question;
  std::string answer;
  std::string fact_sentence;
};
std::vector<SyntheticQa> synthetic_qa(std::size_t count, std::size_t filler_sentences,
                                      std::uint64_t seed);

}  // namespace infiniretri::nih
