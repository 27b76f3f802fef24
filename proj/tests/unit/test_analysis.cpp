#include <gtest/gtest.h>

#include <regex>

#include "infiniretri/analysis.hpp"
#include "infiniretri/nih.hpp"
#include "infiniretri/planted_oracle.hpp"
#include "infiniretri/render.hpp"
#include "infiniretri/toy_provider.hpp"

namespace ir = infiniretri;
using namespace ir::analysis;

namespace {

const ir::Tokenizer& tok() { return ir::default_tokenizer(); }

std::vector<std::string> svg_fills(const std::string& svg) {
  std::vector<std::string> out;
  const std::regex rect(R"re(<rect[^>]*fill="(#[0-9a-f]{6})")re");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), rect); it != std::sregex_iterator(); ++it) {
    out.push_back((*it)[1]);
  }
  return out;
}

std::vector<QaSample> samples(std::size_t n) {
  std::vector<QaSample> out;
  for (const auto& qa : ir::nih::synthetic_qa(n, 10, 5)) {
    out.push_back(make_qa_sample(qa.context, qa.question, qa.answer, tok()));
  }
  return out;
}

void plant(ir::provider::PlantedOracle& oracle, const std::vector<QaSample>& s) {
  std::vector<std::vector<ir::TokenId>> targets;
  for (const auto& q : s) {
    for (auto& t : answer_sentence_tokens(q, tok())) targets.push_back(std::move(t));
  }
  oracle.set_targets(std::move(targets));
}

}  // namespace

TEST(HeatmapExport, SingleCellIsFullIntensity) {
  Heatmap h{ir::Matrix(1, 1, 0.3), {"q"}, {"k"}};
  const auto fills = svg_fills(heatmap_svg(h));
  ASSERT_EQ(fills.size(), 1u);
  EXPECT_EQ(fills[0], ir::render::hex(ir::render::intensity_color(1.0)));
}

TEST(HeatmapExport, LabelMismatchIsShapeError) {
  Heatmap h{ir::Matrix(2, 2), {"a"}, {"b", "c"}};
  EXPECT_THROW(heatmap_csv(h), ir::ShapeError);
  EXPECT_THROW(heatmap_svg(h), ir::ShapeError);
}

TEST(HeatmapExport, CsvRoundTrip) {
  Heatmap h{ir::Matrix(2, 3), {"what", " is,"}, {"\"x\"", " y", "z\n"}};
  h.values(0, 1) = 0.125;
  h.values(1, 2) = 1.0 / 3.0;
  const auto back = parse_heatmap_csv(heatmap_csv(h));
  EXPECT_EQ(back.row_labels, h.row_labels);
  EXPECT_EQ(back.col_labels, h.col_labels);
  for (std::size_t i = 0; i < h.values.data().size(); ++i) {
    EXPECT_NEAR(back.values.data()[i], h.values.data()[i], 1e-9);
  }
}

TEST(HeatmapExport, OracleBrightestBlockIsTarget) {
  const std::string context = "The mill is old. The secret word is harbor. The lamp is lit.";
  const auto target = tok().encode(" The secret word is harbor.");
  ir::provider::PlantedOracleSpec spec;
  spec.targets = {target};
  ir::provider::PlantedOracle oracle(spec);
  const auto h = question_context_heatmap(oracle, context, " What is the secret word?",
                                          ir::provider::LayerSpec::last());
  const auto start = ir::provider::find_occurrences(tok().encode(context), target, h.values.cols());
  ASSERT_EQ(start.size(), 1u);
  const auto fills = svg_fills(heatmap_svg(h));
  const std::string bright = ir::render::hex(ir::render::intensity_color(1.0));
  for (std::size_t i = 0; i < h.values.rows(); ++i) {
    for (std::size_t j = 0; j < h.values.cols(); ++j) {
      const bool in_target = j >= start[0] && j < start[0] + target.size();
      EXPECT_EQ(fills[i * h.values.cols() + j] == bright, in_target) << i << "," << j;
    }
  }
}

TEST(QaMapping, AnswerSpanCoversAnswerText) {
  const std::string context = "Alpha beta. The code is 481516 today. Gamma.";
  const auto s = make_qa_sample(context, "What is the code?", "481516", tok());
  const auto all = tok().encode(context);
  const std::string covered =
      tok().decode(std::span(all).subspan(s.answer_span.start, s.answer_span.length));
  EXPECT_NE(covered.find("481516"), std::string::npos);
  EXPECT_THROW(make_qa_sample(context, "q", "999", tok()), ir::InputError);
}

TEST(Sweep, SingleLayerModel) {
  ir::toy::ToyModelSpec spec;
  spec.layers = 1;
  ir::provider::ToyProvider toy(spec);
  ir::pipeline::PipelineConfig c;
  c.top_k = 20;
  const auto r = layer_sweep(samples(3), toy, c);
  EXPECT_EQ(r.accuracy.size(), 1u);
  EXPECT_EQ(r.evaluated, 3u);
}

TEST(Sweep, PeakedOracleArgmax) {
  const auto s = samples(20);
  ir::provider::PlantedOracleSpec spec;
  spec.layer_profile = ir::provider::PlantedOracleSpec::peaked_profile(6, 5);
  ir::provider::PlantedOracle oracle(spec);
  plant(oracle, s);
  ir::pipeline::PipelineConfig c;
  c.top_k = 4;
  c.phrase_token_num = 3;
  const auto r = layer_sweep(s, oracle, c);
  EXPECT_EQ(r.best_layer(), 5);
  EXPECT_DOUBLE_EQ(r.accuracy[5], 1.0);
}

TEST(Sweep, ZeroSamples) {
  ir::provider::ToyProvider toy;
  const auto r = layer_sweep({}, toy, {});
  EXPECT_TRUE(r.accuracy.empty());
  EXPECT_EQ(r.best_layer(), -1);
}

TEST(Sweep, OversizedSamplesAreSkipped) {
  ir::toy::ToyModelSpec spec;
  spec.max_window = 40;
  ir::provider::ToyProvider toy(spec);
  const auto r = layer_sweep(samples(2), toy, {});
  EXPECT_EQ(r.skipped, 2u);
  EXPECT_EQ(r.evaluated, 0u);
  EXPECT_EQ(r.warnings.size(), 2u);
}

TEST(Render, Colors) {
  EXPECT_EQ(ir::render::hex(ir::render::score_color(0.0)), "#d73027");
  EXPECT_EQ(ir::render::hex(ir::render::score_color(1.0)), "#1a9850");
  EXPECT_EQ(ir::render::parse_hex("#1a9850"), (ir::render::Rgb{26, 152, 80}));
  EXPECT_EQ(ir::render::hex(ir::render::intensity_color(0.0)), "#ffffff");
  EXPECT_EQ(ir::render::xml_escape("<a&\"b\">"), "&lt;a&amp;&quot;b&quot;&gt;");
  EXPECT_EQ(ir::render::csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(ir::render::fixed(0.5, 3), "0.500");
}
