#include <gtest/gtest.h>

#include <regex>

#include "infiniretri/nih.hpp"
#include "infiniretri/planted_oracle.hpp"
#include "infiniretri/render.hpp"
#include "infiniretri/toy_provider.hpp"

namespace ir = infiniretri;
using namespace ir::nih;

namespace {

const ir::Tokenizer& tok() { return ir::default_tokenizer(); }

std::unique_ptr<ir::provider::Provider> make_oracle() {
  return std::make_unique<ir::provider::PlantedOracle>(ir::provider::PlantedOracleSpec{});
}

CellOutcome cell(std::size_t length, double depth, double match) {
  CellOutcome c;
  c.length = length;
  c.depth = depth;
  c.answer_match = match;
  c.recall_hit = match > 0;
  return c;
}

// (value, fill) for every rect of a grid SVG.
std::vector<std::pair<double, std::string>> svg_cells(const std::string& svg) {
  std::vector<std::pair<double, std::string>> out;
  const std::regex rect(R"re(fill="(#[0-9a-f]{6})"[^>]*data-value="([0-9.]+)")re");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), rect); it != std::sregex_iterator(); ++it) {
    out.emplace_back(std::stod((*it)[2]), (*it)[1]);
  }
  return out;
}

}  // namespace

TEST(Haystack, DepthZeroIsFirst) {
  HaystackSpec spec;
  spec.depth_percent = 0;
  const auto h = build_haystack(spec, tok());
  EXPECT_EQ(h.needle_sentence_id, 0);
  EXPECT_EQ(h.document.rfind(spec.needle, 0), 0u);
}

TEST(Haystack, DepthHundredIsLast) {
  HaystackSpec spec;
  spec.depth_percent = 100;
  const auto h = build_haystack(spec, tok());
  EXPECT_EQ(h.needle_sentence_id, static_cast<ir::SentenceId>(h.sentence_count - 1));
}

TEST(Haystack, LengthIsClose) {
  HaystackSpec spec;
  spec.target_length = 8000;
  const auto h = build_haystack(spec, tok());
  EXPECT_EQ(h.document_tokens, tok().encode(h.document).size());
  EXPECT_GE(h.document_tokens, 8000u);
  EXPECT_LT(h.document_tokens, 8100u);
}

TEST(Haystack, MidDepthOffset) {
  HaystackSpec spec;
  spec.target_length = 10000;
  spec.depth_percent = 50;
  const auto h = build_haystack(spec, tok());
  const auto sentences = ir::textseg::segment_sentences(h.document, tok());
  std::size_t longest = 0;
  for (const auto& s : sentences) longest = std::max(longest, s.tokens.size());
  const double filler = static_cast<double>(h.document_tokens - h.needle_sentence.tokens.size());
  const double offset = std::abs(static_cast<double>(h.needle_sentence.token_start) - filler / 2);
  EXPECT_LE(offset, static_cast<double>(longest));
}

TEST(Haystack, ImpossibleLength) {
  HaystackSpec spec;
  spec.target_length = 10;
  EXPECT_THROW(build_haystack(spec, tok()), ir::ConfigError);
  spec.target_length = 4096;
  spec.needle = "Two sentences. Not allowed.";
  EXPECT_THROW(build_haystack(spec, tok()), ir::ConfigError);
}

TEST(Match, WordRecall) {
  EXPECT_DOUBLE_EQ(answer_match("Eat a sandwich, and sit in Dolores Park on a sunny day!", kDefaultAnswer), 1.0);
  EXPECT_DOUBLE_EQ(answer_match("", kDefaultAnswer), 0.0);
  EXPECT_NEAR(answer_match("a sandwich", "eat a sandwich a"), 0.5, 1e-12);
}

TEST(Grid, OracleHitsEveryCell) {
  GridOptions o;
  o.lengths = {2048, 4096};
  o.depths = {0, 25, 50, 75, 100};
  const auto g = run_grid(o, make_oracle, plant_needle());
  ASSERT_EQ(g.cells.size(), 10u);
  for (const auto& c : g.cells) {
    EXPECT_TRUE(c.error.empty()) << c.error;
    EXPECT_TRUE(c.recall_hit);
  }
  EXPECT_DOUBLE_EQ(g.recall_rate(), 1.0);
}

TEST(Grid, ParallelMatchesSerial) {
  GridOptions o;
  o.lengths = {1024, 2048};
  o.depths = {0, 50, 100};
  const auto serial = run_grid(o, make_oracle, plant_needle());
  o.jobs = 4;
  const auto parallel = run_grid(o, make_oracle, plant_needle());
  EXPECT_EQ(grid_csv(serial), grid_csv(parallel));
}

TEST(Grid, BadConfigurationFailsUpFront) {
  GridOptions o;
  o.lengths = {2048};
  o.depths = {50};
  o.config.top_k = 0;
  EXPECT_THROW(run_grid(o, make_oracle), ir::ConfigError);
  o.config.top_k = 300;
  o.depths = {120};
  EXPECT_THROW(run_grid(o, make_oracle), ir::ConfigError);
}

TEST(Grid, ToyModelStructure) {
  GridOptions o;
  o.lengths = {2048, 4096, 8192};
  o.depths = {0, 50, 100};
  o.jobs = 3;
  const auto g = run_grid(o, [] { return std::make_unique<ir::provider::ToyProvider>(); });
  const std::string csv = grid_csv(g);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);
  for (const auto& c : g.cells) EXPECT_TRUE(c.error.empty()) << c.error;
  EXPECT_EQ(svg_cells(grid_svg(g)).size(), 9u);
}

TEST(Grid, CellErrorsAreRecorded) {
  GridOptions o;
  o.lengths = {30};
  o.depths = {50};
  const auto g = run_grid(o, make_oracle);
  ASSERT_EQ(g.cells.size(), 1u);
  EXPECT_FALSE(g.cells[0].error.empty());
  EXPECT_NE(grid_csv(g).find("target_length"), std::string::npos);
}

TEST(Heatmap, AllHitIsGreenAllMissIsRed) {
  NihGrid g;
  g.lengths = {1, 2};
  g.depths = {0, 100};
  g.cells = {cell(1, 0, 1), cell(1, 100, 1), cell(2, 0, 1), cell(2, 100, 1)};
  for (const auto& [v, fill] : svg_cells(grid_svg(g))) EXPECT_EQ(fill, ir::render::hex(ir::render::score_color(1.0)));
  for (auto& c : g.cells) c.answer_match = 0;
  for (const auto& [v, fill] : svg_cells(grid_svg(g))) EXPECT_EQ(fill, ir::render::hex(ir::render::score_color(0.0)));
}

TEST(Heatmap, SvgColorsMatchCsv) {
  NihGrid g;
  g.lengths = {10, 20};
  g.depths = {0, 50, 100};
  const double values[] = {0.0, 0.25, 0.5, 0.75, 1.0, 0.125};
  for (int i = 0; i < 6; ++i) g.cells.push_back(cell(g.lengths[i / 3], g.depths[i % 3], values[i]));
  const auto rects = svg_cells(grid_svg(g));
  ASSERT_EQ(rects.size(), 6u);
  std::istringstream csv(grid_csv(g));
  std::string line;
  std::getline(csv, line);
  std::map<std::pair<std::string, std::string>, double> by_cell;
  while (std::getline(csv, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    by_cell[{f[0], f[1]}] = std::stod(f[3]);
  }
  const std::regex rect(R"re(fill="(#[0-9a-f]{6})"[^>]*data-length="(\d+)" data-depth="([0-9.]+)")re");
  const std::string svg = grid_svg(g);
  int seen = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), rect); it != std::sregex_iterator(); ++it) {
    const double v = by_cell.at({(*it)[2], (*it)[3]});
    EXPECT_EQ((*it)[1].str(), ir::render::hex(ir::render::score_color(v)));
    ++seen;
  }
  EXPECT_EQ(seen, 6);
}

TEST(Heatmap, UnwritablePath) {
  NihGrid g;
  EXPECT_THROW(emit_heatmap(g, "/nonexistent-dir/grid.csv", "/nonexistent-dir/grid.svg"), ir::IoError);
}

TEST(Synthetic, UniqueAnswers) {
  const auto qa = synthetic_qa(20, 8, 3);
  std::set<std::string> answers;
  for (const auto& q : qa) {
    answers.insert(q.answer);
    EXPECT_NE(q.context.find(q.fact_sentence), std::string::npos);
    EXPECT_NE(q.fact_sentence.find(q.answer), std::string::npos);
  }
  EXPECT_EQ(answers.size(), 20u);
}
