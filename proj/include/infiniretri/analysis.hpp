#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "infiniretri/matrix.hpp"
#include "infiniretri/pipeline.hpp"
#include "infiniretri/provider.hpp"

namespace infiniretri::analysis {

struct Heatmap {
  Matrix values;
  std::vector<std::string> row_labels;  // query tokens
  std::vector<std::string> col_labels;  // key tokens
};

/// SVG with token labels on both axes and a per-matrix linear color scale
/// (value / max), plus the raw values as CSV.
void export_attention_heatmap(const Heatmap& heatmap, const std::string& svg_path,
                              const std::string& csv_path);
std::string heatmap_svg(const Heatmap& heatmap);
std::string heatmap_csv(const Heatmap& heatmap);
Heatmap parse_heatmap_csv(const std::string& csv);

/// Aggregated question -> context attention over a single window, labelled
/// with the decoded tokens.
Heatmap question_context_heatmap(provider::Provider& provider, const std::string& context,
                                 const std::string& question, provider::LayerSpec layer);

struct QaSample {
  std::string context;
  std::string question;
  PositionRange answer_span;  // token positions within the context
};

/// Locates `answer` in `context` and converts it to a token span.
QaSample make_qa_sample(const std::string& context, const std::string& question,
                        const std::string& answer, const Tokenizer& tokenizer);

/// Token sequences of the context sentences overlapping the answer span.
std::vector<std::vector<TokenId>> answer_sentence_tokens(const QaSample& sample,
                                                         const Tokenizer& tokenizer);

struct SweepResult {
  std::vector<double> accuracy;  // one per layer; empty when nothing was evaluated
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;

  // Index of the first maximal layer, or -1 when empty.
  int best_layer() const;
};

/// For every layer, run retrieval on that layer's attention and count a hit
/// when a retained sentence overlaps the answer span.
SweepResult layer_sweep(const std::vector<QaSample>& samples, provider::Provider& provider,
                        const pipeline::PipelineConfig& config);

std::string sweep_csv(const SweepResult& result);
std::string sweep_svg(const SweepResult& result);

}  // namespace infiniretri::analysis
