#include "infiniretri/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "infiniretri/cache.hpp"
#include "infiniretri/render.hpp"
#include "infiniretri/retrieval.hpp"
#include "infiniretri/textseg.hpp"

namespace infiniretri::analysis {
namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string printable(std::string_view piece) {
  std::string out;
  for (char c : piece) {
    switch (c) {
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<std::vector<std::string>> parse_csv_rows(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < csv.size(); ++i) {
    const char c = csv[i];
    if (quoted) {
      if (c == '"' && i + 1 < csv.size() && csv[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += c;
    }
  }
  if (any || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string heatmap_csv(const Heatmap& heatmap) {
  const Matrix& m = heatmap.values;
  if (heatmap.row_labels.size() != m.rows() || heatmap.col_labels.size() != m.cols()) {
    throw ShapeError("heatmap labels (" + std::to_string(heatmap.row_labels.size()) + " x " +
                     std::to_string(heatmap.col_labels.size()) + ") do not match the " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + " matrix");
  }
  std::ostringstream out;
  out << "query\\key";
  for (const auto& label : heatmap.col_labels) out << ',' << render::csv_field(label);
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << render::csv_field(heatmap.row_labels[i]);
    for (double v : m.row(i)) out << ',' << number(v);
    out << '\n';
  }
  return out.str();
}

Heatmap parse_heatmap_csv(const std::string& csv) {
  const auto rows = parse_csv_rows(csv);
  if (rows.empty() || rows.front().empty()) throw InputError("empty heatmap CSV");
  Heatmap out;
  out.col_labels.assign(rows.front().begin() + 1, rows.front().end());
  out.values = Matrix(rows.size() - 1, out.col_labels.size());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != out.col_labels.size() + 1) {
      throw InputError("heatmap CSV row " + std::to_string(i) + " has the wrong number of fields");
    }
    out.row_labels.push_back(rows[i][0]);
    for (std::size_t j = 0; j < out.col_labels.size(); ++j) {
      out.values(i - 1, j) = std::stod(rows[i][j + 1]);
    }
  }
  return out;
}

std::string heatmap_svg(const Heatmap& heatmap) {
  const Matrix& m = heatmap.values;
  if (heatmap.row_labels.size() != m.rows() || heatmap.col_labels.size() != m.cols()) {
    throw ShapeError("heatmap labels do not match the matrix shape");
  }
  constexpr int kCell = 12;
  constexpr int kLeft = 110;
  constexpr int kTop = 110;
  const int width = kLeft + kCell * static_cast<int>(m.cols()) + 10;
  const int height = kTop + kCell * static_cast<int>(m.rows()) + 10;

  double max_value = 0.0;
  for (double v : m.data()) max_value = std::max(max_value, v);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"monospace\" font-size=\"9\">\n";
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const int x = kLeft + kCell * static_cast<int>(j) + kCell / 2 + 3;
    svg << "<text transform=\"translate(" << x << "," << kTop - 4 << ") rotate(-90)\">"
        << render::xml_escape(heatmap.col_labels[j]) << "</text>\n";
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const int y = kTop + kCell * static_cast<int>(i);
    svg << "<text x=\"" << kLeft - 4 << "\" y=\"" << y + kCell - 3 << "\" text-anchor=\"end\">"
        << render::xml_escape(heatmap.row_labels[i]) << "</text>\n";
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double t = max_value > 0.0 ? m(i, j) / max_value : 0.0;
      svg << "<rect x=\"" << kLeft + kCell * static_cast<int>(j) << "\" y=\"" << y
          << "\" width=\"" << kCell << "\" height=\"" << kCell << "\" fill=\""
          << render::hex(render::intensity_color(t)) << "\" data-value=\"" << number(m(i, j))
          << "\"/>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

void export_attention_heatmap(const Heatmap& heatmap, const std::string& svg_path,
                              const std::string& csv_path) {
  const std::string csv = heatmap_csv(heatmap);
  const std::string svg = heatmap_svg(heatmap);
  render::write_file(csv_path, csv);
  render::write_file(svg_path, svg);
}

Heatmap question_context_heatmap(provider::Provider& provider, const std::string& context,
                                 const std::string& question, provider::LayerSpec layer) {
  const Tokenizer& tok = provider.tokenizer();
  textseg::Chunk chunk;
  chunk.sentences = textseg::segment_sentences(context, tok);
  for (const auto& s : chunk.sentences) chunk.token_count += s.token_count();
  const auto q = tok.encode(question);
  const auto merged = cache::merge(cache::CacheState{}, chunk, q);

  provider::SessionGuard session(provider);
  provider::ProviderRequest req;
  req.tokens = merged.tokens;
  req.layer = layer;
  req.query_range = merged.question_range;
  req.session = session.id();
  const auto aggregated = attn::aggregate_heads(provider.get_attention(req));

  Heatmap out;
  out.values = retrieval::context_columns(aggregated, merged.context_len);
  for (std::size_t i = 0; i < merged.tokens.size(); ++i) {
    const TokenId t[1] = {merged.tokens[i]};
    auto label = printable(tok.decode(t));
    if (i < merged.context_len) {
      out.col_labels.push_back(std::move(label));
    } else {
      out.row_labels.push_back(std::move(label));
    }
  }
  return out;
}

QaSample make_qa_sample(const std::string& context, const std::string& question,
                        const std::string& answer, const Tokenizer& tokenizer) {
  const auto at = context.find(answer);
  if (answer.empty() || at == std::string::npos) {
    throw InputError("answer '" + answer + "' does not occur in the context");
  }
  const std::size_t answer_end = at + answer.size();
  QaSample sample{context, question, {}};
  std::size_t first = 0;
  std::size_t last = 0;
  bool found = false;
  for (const auto& s : textseg::segment_sentences(context, tokenizer)) {
    std::size_t char_pos = s.char_start;
    for (std::size_t k = 0; k < s.tokens.size(); ++k) {
      const TokenId t[1] = {s.tokens[k]};
      const std::size_t len = tokenizer.decode(t).size();
      if (char_pos < answer_end && at < char_pos + len) {
        if (!found) first = s.token_start + k;
        last = s.token_start + k;
        found = true;
      }
      char_pos += len;
    }
  }
  if (!found) throw InputError("answer could not be mapped to tokens");
  sample.answer_span = {first, last - first + 1};
  return sample;
}

std::vector<std::vector<TokenId>> answer_sentence_tokens(const QaSample& sample,
                                                         const Tokenizer& tokenizer) {
  std::vector<std::vector<TokenId>> out;
  for (const auto& s : textseg::segment_sentences(sample.context, tokenizer)) {
    if (PositionRange{s.token_start, s.token_count()}.overlaps(sample.answer_span)) {
      out.push_back(s.tokens);
    }
  }
  return out;
}

int SweepResult::best_layer() const {
  if (accuracy.empty()) return -1;
  return static_cast<int>(std::max_element(accuracy.begin(), accuracy.end()) - accuracy.begin());
}

SweepResult layer_sweep(const std::vector<QaSample>& samples, provider::Provider& provider,
                        const pipeline::PipelineConfig& config) {
  config.validate();
  SweepResult result;
  const auto info = provider.info();
  const Tokenizer& tok = provider.tokenizer();
  std::vector<std::size_t> hits(info.layers, 0);

  for (std::size_t n = 0; n < samples.size(); ++n) {
    const QaSample& sample = samples[n];
    textseg::Chunk chunk;
    chunk.sentences = textseg::segment_sentences(sample.context, tok);
    for (const auto& s : chunk.sentences) chunk.token_count += s.token_count();
    const auto merged = cache::merge(cache::CacheState{}, chunk, tok.encode(sample.question));
    if (merged.tokens.size() > info.max_window) {
      ++result.skipped;
      result.warnings.push_back("sample " + std::to_string(n) + " skipped: " +
                                std::to_string(merged.tokens.size()) +
                                " tokens exceed the provider window of " +
                                std::to_string(info.max_window));
      continue;
    }
    provider::SessionGuard session(provider);
    for (std::size_t layer = 0; layer < info.layers; ++layer) {
      provider::ProviderRequest req;
      req.tokens = merged.tokens;
      req.layer = provider::LayerSpec(static_cast<int>(layer));
      req.query_range = merged.question_range;
      req.session = session.id();
      const auto retained = pipeline::retrieve(provider.get_attention(req), merged, config);
      const bool hit = std::any_of(retained.begin(), retained.end(), [&](const auto& s) {
        return PositionRange{s.token_start, s.token_count()}.overlaps(sample.answer_span);
      });
      if (hit) ++hits[layer];
    }
    ++result.evaluated;
  }
  if (result.evaluated == 0) return result;
  result.accuracy.resize(info.layers);
  for (std::size_t l = 0; l < info.layers; ++l) {
    result.accuracy[l] = static_cast<double>(hits[l]) / static_cast<double>(result.evaluated);
  }
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "layer,accuracy\n";
  for (std::size_t l = 0; l < result.accuracy.size(); ++l) {
    out << l << ',' << render::fixed(result.accuracy[l], 6) << '\n';
  }
  return out.str();
}

std::string sweep_svg(const SweepResult& result) {
  constexpr int kBar = 24;
  constexpr int kPlotH = 160;
  constexpr int kLeft = 40;
  constexpr int kTop = 20;
  const int width = kLeft + kBar * static_cast<int>(result.accuracy.size()) + 20;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << kTop + kPlotH + 40 << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + kPlotH << "\" x2=\"" << width - 10
      << "\" y2=\"" << kTop + kPlotH << "\" stroke=\"#000000\"/>\n";
  for (std::size_t l = 0; l < result.accuracy.size(); ++l) {
    const double acc = result.accuracy[l];
    const int h = static_cast<int>(acc * kPlotH + 0.5);
    const int x = kLeft + kBar * static_cast<int>(l);
    svg << "<rect x=\"" << x + 2 << "\" y=\"" << kTop + kPlotH - h << "\" width=\"" << kBar - 4
        << "\" height=\"" << h << "\" fill=\"" << render::hex(render::score_color(acc))
        << "\" data-layer=\"" << l << "\" data-value=\"" << render::fixed(acc, 6) << "\"/>\n";
    svg << "<text x=\"" << x + kBar / 2 << "\" y=\"" << kTop + kPlotH + 14
        << "\" text-anchor=\"middle\">" << l << "</text>\n";
  }
  svg << "<text x=\"" << kLeft << "\" y=\"" << kTop + kPlotH + 32
      << "\">layer / retrieval accuracy</text>\n</svg>\n";
  return svg.str();
}

}  // namespace infiniretri::analysis
