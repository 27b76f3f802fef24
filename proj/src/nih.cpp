#include "infiniretri/nih.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "infiniretri/lexicon.hpp"
#include "infiniretri/planted_oracle.hpp"
#include "infiniretri/render.hpp"

namespace infiniretri::nih {
namespace {

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::vector<std::string> words_of(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      cur += static_cast<char>(std::tolower(uc));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

void validate_needle(const std::string& needle, const Tokenizer& tokenizer) {
  if (needle.empty()) throw ConfigError("needle must be non-empty");
  // A well-formed needle is exactly one terminated sentence.
  const auto probe = textseg::segment_sentences(needle + " x", tokenizer);
  if (probe.size() != 2) {
    throw ConfigError("needle must be a single sentence ending in a terminator: '" + needle + "'");
  }
}

}  // namespace

std::string_view EssayGenerator::pick(std::span<const std::string_view> words) {
  return words[rng_() % words.size()];
}

std::string EssayGenerator::next_sentence() {
  using namespace lexicon;
  std::string s;
  auto w = [&](std::span<const std::string_view> list) { return std::string(pick(list)); };
  switch (rng_() % 6) {
    case 0:
      s = "the " + w(adjectives()) + " " + w(nouns()) + " " + w(verbs()) + " the " + w(nouns()) + ".";
      break;
    case 1:
      s = w(adverbs()) + ", a " + w(adjectives()) + " " + w(nouns()) + " " + w(verbs()) +
          " every " + w(nouns()) + ".";
      break;
    case 2:
      s = "a " + w(nouns()) + " " + w(verbs()) + " the " + w(adjectives()) + " " + w(nouns()) +
          " of the " + w(nouns()) + ".";
      break;
    case 3:
      s = "every " + w(nouns()) + " " + w(verbs()) + " some " + w(adjectives()) + " " +
          w(nouns()) + ", but the " + w(nouns()) + " " + w(verbs()) + " it " + w(adverbs()) + ".";
      break;
    case 4:
      s = "the " + w(nouns()) + " is " + w(adjectives()) + " and the " + w(nouns()) + " is " +
          w(adjectives()) + ".";
      break;
    default:
      s = "this " + w(nouns()) + " " + w(adverbs()) + " " + w(verbs()) + " one " +
          w(adjectives()) + " " + w(nouns()) + " at the " + w(nouns()) + ".";
      break;
  }
  return capitalized(std::move(s));
}

Haystack build_haystack(const HaystackSpec& spec, const Tokenizer& tokenizer) {
  if (spec.depth_percent < 0.0 || spec.depth_percent > 100.0) {
    throw ConfigError("depth_percent must be within [0, 100]");
  }
  validate_needle(spec.needle, tokenizer);
  const std::size_t needle_len = tokenizer.encode(" " + spec.needle).size();

  EssayGenerator gen(spec.filler_seed);
  std::vector<std::string> filler;
  std::vector<std::size_t> filler_len;
  std::size_t filler_total = 0;
  auto add_filler = [&] {
    filler.push_back(gen.next_sentence());
    filler_len.push_back(tokenizer.encode(" " + filler.back()).size());
    filler_total += filler_len.back();
  };
  add_filler();
  add_filler();
  if (spec.target_length < needle_len + filler_total) {
    throw ConfigError("target_length " + std::to_string(spec.target_length) +
                      " is too short for the needle (" + std::to_string(needle_len) +
                      " tokens) plus two filler sentences (" + std::to_string(filler_total) +
                      " tokens)");
  }
  while (filler_total + needle_len < spec.target_length) add_filler();

  // Boundary b sits before filler[b]; pick the one nearest the target depth.
  const double target = spec.depth_percent / 100.0 * static_cast<double>(filler_total);
  std::size_t best = 0;
  double best_gap = target;
  std::size_t cum = 0;
  for (std::size_t b = 0; b <= filler.size(); ++b) {
    const double gap = std::abs(static_cast<double>(cum) - target);
    if (gap < best_gap) {
      best_gap = gap;
      best = b;
    }
    if (b < filler.size()) cum += filler_len[b];
  }

  std::string doc;
  for (std::size_t i = 0; i <= filler.size(); ++i) {
    if (i == best) {
      if (!doc.empty()) doc += ' ';
      doc += spec.needle;
    }
    if (i < filler.size()) {
      if (!doc.empty()) doc += ' ';
      doc += filler[i];
    }
  }

  Haystack out;
  out.document = std::move(doc);
  const auto sentences = textseg::segment_sentences(out.document, tokenizer);
  if (best >= sentences.size() ||
      sentences[best].text.find(spec.needle) == std::string::npos) {
    throw std::logic_error("needle sentence not found at the expected position");
  }
  out.needle_sentence_id = sentences[best].id;
  out.needle_sentence = sentences[best];
  out.sentence_count = sentences.size();
  for (const auto& s : sentences) out.document_tokens += s.token_count();
  return out;
}

double answer_match(const std::string& answer, const std::string& expected) {
  const auto want = words_of(expected);
  if (want.empty()) return 0.0;
  std::map<std::string, int> have;
  for (auto& w : words_of(answer)) ++have[w];
  std::size_t found = 0;
  for (const auto& w : want) {
    auto it = have.find(w);
    if (it != have.end() && it->second > 0) {
      --it->second;
      ++found;
    }
  }
  return static_cast<double>(found) / static_cast<double>(want.size());
}

double NihGrid::recall_rate() const {
  if (cells.empty()) return 0.0;
  const auto hits = std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.recall_hit; });
  return static_cast<double>(hits) / static_cast<double>(cells.size());
}

NihGrid run_grid(const GridOptions& options, const ProviderFactory& make_provider,
                 const CellPrepare& prepare) {
  if (options.lengths.empty() || options.depths.empty()) {
    throw ConfigError("NIH grid needs at least one length and one depth");
  }
  options.config.validate();
  for (double d : options.depths) {
    if (d < 0.0 || d > 100.0) throw ConfigError("NIH depths must be within [0, 100]");
  }
  if (!std::is_sorted(options.lengths.begin(), options.lengths.end()) ||
      !std::is_sorted(options.depths.begin(), options.depths.end())) {
    throw ConfigError("NIH lengths and depths must be ascending");
  }

  NihGrid grid;
  grid.lengths = options.lengths;
  grid.depths = options.depths;
  grid.cells.resize(options.lengths.size() * options.depths.size());

  auto run_cell = [&](std::size_t index) {
    CellOutcome& cell = grid.cells[index];
    cell.length = options.lengths[index / options.depths.size()];
    cell.depth = options.depths[index % options.depths.size()];
    try {
      auto provider = make_provider();
      HaystackSpec spec;
      spec.target_length = cell.length;
      spec.filler_seed = options.filler_seed;
      spec.needle = options.needle;
      spec.depth_percent = cell.depth;
      spec.question = options.question;
      spec.expected_answer = options.expected_answer;
      const Haystack hay = build_haystack(spec, provider->tokenizer());
      if (prepare) prepare(*provider, hay);
      auto result = pipeline::run(hay.document, options.question, options.config, *provider);
      cell.needle_sentence_id = hay.needle_sentence_id;
      cell.recall_hit = result.final_cache.contains(hay.needle_sentence_id);
      cell.answer = result.answer;
      cell.answer_match = answer_match(result.answer, options.expected_answer);
      cell.trace = std::move(result.trace);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, grid.cells.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.cells.size(); i = next++) run_cell(i);
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return grid;
}

std::string grid_csv(const NihGrid& grid) {
  std::ostringstream out;
  out << "length,depth,recall_hit,answer_match,iterations,forward_passes,max_merged_length,"
         "answer_window_ratio,needle_sentence_id,error\n";
  for (const auto& c : grid.cells) {
    out << c.length << ',' << render::fixed(c.depth, 2) << ',' << (c.recall_hit ? 1 : 0) << ','
        << render::fixed(c.answer_match, 6) << ',' << c.trace.iterations.size() << ','
        << c.trace.forward_passes << ',' << c.trace.max_merged_length << ','
        << render::fixed(c.trace.answer_window_ratio, 6) << ',' << c.needle_sentence_id << ','
        << render::csv_field(c.error) << '\n';
  }
  return out.str();
}

std::string grid_svg(const NihGrid& grid) {
  constexpr int kCellW = 48;
  constexpr int kCellH = 24;
  constexpr int kLeft = 70;
  constexpr int kTop = 30;
  const int width = kLeft + kCellW * static_cast<int>(grid.lengths.size()) + 20;
  const int height = kTop + kCellH * static_cast<int>(grid.depths.size()) + 60;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  svg << "<text x=\"" << kLeft << "\" y=\"18\" font-size=\"12\">Needle retrieval (answer match)</text>\n";
  for (std::size_t di = 0; di < grid.depths.size(); ++di) {
    const int y = kTop + kCellH * static_cast<int>(di);
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + kCellH / 2 + 4
        << "\" text-anchor=\"end\">" << render::fixed(grid.depths[di], 0) << "%</text>\n";
    for (std::size_t li = 0; li < grid.lengths.size(); ++li) {
      const auto& cell = grid.at(li, di);
      const int x = kLeft + kCellW * static_cast<int>(li);
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCellW << "\" height=\""
          << kCellH << "\" fill=\"" << render::hex(render::score_color(cell.answer_match))
          << "\" stroke=\"#ffffff\" data-length=\"" << cell.length << "\" data-depth=\""
          << render::fixed(cell.depth, 2) << "\" data-value=\""
          << render::fixed(cell.answer_match, 6) << "\"/>\n";
    }
  }
  const int axis_y = kTop + kCellH * static_cast<int>(grid.depths.size()) + 14;
  for (std::size_t li = 0; li < grid.lengths.size(); ++li) {
    const int x = kLeft + kCellW * static_cast<int>(li) + kCellW / 2;
    svg << "<text x=\"" << x << "\" y=\"" << axis_y << "\" text-anchor=\"middle\">"
        << grid.lengths[li] << "</text>\n";
  }
  svg << "<text x=\"" << kLeft << "\" y=\"" << axis_y + 20
      << "\">context length (tokens) / needle depth</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void emit_heatmap(const NihGrid& grid, const std::string& csv_path, const std::string& svg_path) {
  render::write_file(csv_path, grid_csv(grid));
  render::write_file(svg_path, grid_svg(grid));
}

CellPrepare plant_needle() {
  return [](provider::Provider& p, const Haystack& hay) {
    if (auto* oracle = dynamic_cast<provider::PlantedOracle*>(&p)) {
      oracle->set_targets({hay.needle_sentence.tokens});
    }
  };
}

std::vector<SyntheticQa> synthetic_qa(std::size_t count, std::size_t filler_sentences,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EssayGenerator gen(seed ^ 0x5bd1e995ULL);
  std::set<std::uint64_t> used;
  std::vector<SyntheticQa> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t number;
    do {
      number = 100000 + rng() % 900000;
    } while (!used.insert(number).second);
    const auto adjectives = lexicon::adjectives();
    const auto nouns = lexicon::nouns();
    const std::string subject = std::string(adjectives[rng() % adjectives.size()]) + " " +
                                std::string(nouns[rng() % nouns.size()]);

    SyntheticQa qa;
    qa.fact_sentence = "The secret number of the " + subject + " is " + std::to_string(number) + ".";
    qa.question = "What is the secret number of the " + subject + "?";
    qa.answer = std::to_string(number);
    const std::size_t at = filler_sentences == 0 ? 0 : rng() % (filler_sentences + 1);
    for (std::size_t s = 0; s <= filler_sentences; ++s) {
      if (s == at) {
        if (!qa.context.empty()) qa.context += ' ';
        qa.context += qa.fact_sentence;
      }
      if (s < filler_sentences) {
        if (!qa.context.empty()) qa.context += ' ';
        qa.context += gen.next_sentence();
      }
    }
    out.push_back(std::move(qa));
  }
  return out;
}

}  // namespace infiniretri::nih
