#include "infiniretri/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "infiniretri/analysis.hpp"
#include "infiniretri/nih.hpp"
#include "infiniretri/planted_oracle.hpp"
#include "infiniretri/protocol.hpp"
#include "infiniretri/render.hpp"
#include "infiniretri/toy_provider.hpp"

namespace infiniretri::cli {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) {
    throw ConfigError(key + " must be an integer (got '" + value + "')");
  }
  if (v < 1) throw ConfigError(key + " must be >= 1 (got " + value + ")");
  return static_cast<std::size_t>(v);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      if constexpr (std::is_same_v<T, double>) {
        out.push_back(std::stod(item, &used));
      } else {
        const long long v = std::stoll(item, &used);
        if (v < 1) throw ConfigError(std::string(what) + " entries must be >= 1");
        out.push_back(static_cast<T>(v));
      }
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad ") + what + " entry '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + " must list at least one value");
  return out;
}

// Options shared by every subcommand that runs the pipeline. Values stay
// unset unless given, so flags override the config file only when present.
struct ConfigFlags {
  std::optional<std::size_t> chunk_size, top_k, phrase_token_num, answer_budget;
  std::optional<std::string> layer, cache_mode, provider, provider_cmd;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App& app) {
    app.add_option("--chunk-size", chunk_size, "Tokens per document chunk (default 1024)");
    app.add_option("--top-k", top_k, "Context tokens selected per step (default 300)");
    app.add_option("--phrase-token-num", phrase_token_num,
                   "Width of the ones-kernel phrase window (default 15)");
    app.add_option("--layer", layer, "Attention layer: index or 'last'");
    app.add_option("--answer-budget", answer_budget, "Maximum answer tokens");
    app.add_option("--cache-mode", cache_mode, "token-ids or kv-state");
    app.add_option("--provider", provider, "toy, oracle or proto");
    app.add_option("--provider-cmd", provider_cmd,
                   "Adapter launch command (overrides INFINIRETRI_PROVIDER_CMD)");
    app.add_option("--seed", seed, "Toy model weight seed");
  }

  void apply(Settings& s) const {
    if (chunk_size) s.pipeline.chunk_size = *chunk_size;
    if (top_k) s.pipeline.top_k = *top_k;
    if (phrase_token_num) s.pipeline.phrase_token_num = *phrase_token_num;
    if (answer_budget) s.pipeline.answer_budget = *answer_budget;
    if (layer) s.pipeline.layer = provider::LayerSpec::parse(*layer);
    if (cache_mode) s.pipeline.cache_mode = cache::parse_cache_mode(*cache_mode);
    if (provider) s.pipeline.provider = *provider;
    if (provider_cmd) s.provider_cmd = *provider_cmd;
    if (seed) s.seed = *seed;
  }
};

// Sentences of `document` that contain `target`, as oracle targets.
std::vector<std::vector<TokenId>> oracle_targets(const std::string& document,
                                                 const std::string& target,
                                                 const Tokenizer& tokenizer) {
  std::vector<std::vector<TokenId>> out;
  for (const auto& s : textseg::segment_sentences(document, tokenizer)) {
    if (s.text.find(target) != std::string::npos) out.push_back(s.tokens);
  }
  if (out.empty()) out.push_back(tokenizer.encode(target));
  return out;
}

void set_oracle_targets(provider::Provider& p, std::vector<std::vector<TokenId>> targets) {
  auto* oracle = dynamic_cast<provider::PlantedOracle*>(&p);
  if (!oracle) throw ConfigError("--oracle-target requires --provider oracle");
  oracle->set_targets(std::move(targets));
}

std::string summary_line(const pipeline::RunTrace& t) {
  std::ostringstream out;
  out << "iterations=" << t.iterations.size() << " forward_passes=" << t.forward_passes
      << " document_tokens=" << t.document_tokens
      << " max_merged_length=" << t.max_merged_length << " final_cache_tokens=" << t.final_cache_tokens
      << " tokens_fed=" << t.tokens_fed << " answer_window_ratio=" << render::fixed(t.answer_window_ratio, 4);
  return out.str();
}

std::string replace_extension(const std::string& path, const std::string& ext) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    return path.substr(0, dot) + ext;
  }
  return path + ext;
}

}  // namespace

void apply_config_text(const std::string& text, Settings& settings) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto& p = settings.pipeline;
    if (key == "chunk_size") {
      p.chunk_size = parse_count(key, value);
    } else if (key == "top_k") {
      p.top_k = parse_count(key, value);
    } else if (key == "phrase_token_num") {
      p.phrase_token_num = parse_count(key, value);
    } else if (key == "answer_budget") {
      p.answer_budget = parse_count(key, value);
    } else if (key == "layer") {
      p.layer = provider::LayerSpec::parse(value);
    } else if (key == "cache_mode") {
      p.cache_mode = cache::parse_cache_mode(value);
    } else if (key == "provider") {
      p.provider = value;
    } else if (key == "provider_cmd") {
      settings.provider_cmd = value;
    } else if (key == "seed") {
      settings.seed = parse_count(key, value);
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
}

std::string show_config(const Settings& settings, bool as_json) {
  const auto& p = settings.pipeline;
  if (as_json) {
    ordered_json j = {{"chunk_size", p.chunk_size},
                      {"top_k", p.top_k},
                      {"phrase_token_num", p.phrase_token_num},
                      {"layer", p.layer.to_string()},
                      {"answer_budget", p.answer_budget},
                      {"cache_mode", cache::to_string(p.cache_mode)},
                      {"provider", p.provider}};
    return j.dump() + "\n";
  }
  std::ostringstream out;
  out << "chunk_size=" << p.chunk_size << "\n"
      << "top_k=" << p.top_k << "\n"
      << "phrase_token_num=" << p.phrase_token_num << "\n"
      << "layer=" << p.layer.to_string() << "\n"
      << "answer_budget=" << p.answer_budget << "\n"
      << "cache_mode=" << cache::to_string(p.cache_mode) << "\n"
      << "provider=" << p.provider << "\n";
  return out.str();
}

std::unique_ptr<provider::Provider> make_provider(const Settings& settings) {
  const std::string& name = settings.pipeline.provider;
  if (name == "toy") {
    toy::ToyModelSpec spec;
    spec.seed = settings.seed;
    return std::make_unique<provider::ToyProvider>(spec);
  }
  if (name == "oracle") {
    return std::make_unique<provider::PlantedOracle>(provider::PlantedOracleSpec{});
  }
  if (name == "proto") {
    auto cmd = settings.provider_cmd ? settings.provider_cmd : provider::provider_command_from_env();
    if (!cmd) {
      throw ConfigError("provider 'proto' needs --provider-cmd or INFINIRETRI_PROVIDER_CMD");
    }
    return std::make_unique<provider::ProtocolProvider>(*cmd);
  }
  throw ConfigError("provider must be toy, oracle or proto (got '" + name + "')");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attention-based sliding-window retrieval over unbounded documents"};
  app.name("infiniretri");
  app.set_help_all_flag("--help-all", "Expand all help");
  app.fallthrough();

  bool json = false;
  bool show = false;
  std::string config_path;
  app.add_flag("--json", json, "Machine-readable JSON output");
  app.add_flag("--show-config", show, "Print the effective configuration and exit");
  app.add_option("--config", config_path, "key=value configuration file")->check(CLI::ExistingFile);

  ConfigFlags global_flags;
  global_flags.attach(app);

  // run
  auto* run_cmd = app.add_subcommand("run", "Answer a question over one document");
  ConfigFlags run_flags;
  run_flags.attach(*run_cmd);
  std::string doc_path, question, oracle_target, trace_out, cache_out;
  run_cmd->add_option("--doc", doc_path, "Document text file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--question", question, "Question text")->required();
  run_cmd->add_option("--oracle-target", oracle_target, "Text the oracle provider attends to");
  run_cmd->add_option("--trace-out", trace_out, "Write the run trace JSON here");
  run_cmd->add_option("--cache-out", cache_out, "Write the final cache snapshot here");

  // nih
  auto* nih_cmd = app.add_subcommand("nih", "Needle-in-a-haystack grid");
  ConfigFlags nih_flags;
  nih_flags.attach(*nih_cmd);
  std::string lengths_text = "2048,4096,8192", depths_text = "0,10,20,30,40,50,60,70,80,90,100";
  std::string needle = nih::kDefaultNeedle, nih_question = nih::kDefaultQuestion,
              expected = nih::kDefaultAnswer, grid_out = "grid.csv", svg_out;
  std::size_t jobs = 1;
  std::uint64_t filler_seed = 42;
  nih_cmd->add_option("--lengths", lengths_text, "Comma-separated haystack lengths (tokens)");
  nih_cmd->add_option("--depths", depths_text, "Comma-separated needle depths (percent)");
  nih_cmd->add_option("--needle", needle, "Needle sentence");
  nih_cmd->add_option("--question", nih_question, "Question about the needle");
  nih_cmd->add_option("--answer", expected, "Expected answer");
  nih_cmd->add_option("--out", grid_out, "Grid CSV path");
  nih_cmd->add_option("--svg", svg_out, "Heatmap SVG path (default: CSV path with .svg)");
  nih_cmd->add_option("--jobs", jobs, "Worker threads");
  nih_cmd->add_option("--filler-seed", filler_seed, "Seed of the filler essay generator");

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "Attention analysis tools");
  analyze_cmd->require_subcommand(1);
  analyze_cmd->fallthrough();
  auto* heat_cmd = analyze_cmd->add_subcommand("heatmap", "Question-to-context attention heatmap");
  ConfigFlags heat_flags;
  heat_flags.attach(*heat_cmd);
  std::string heat_context, heat_question, heat_out = "attention", heat_target;
  heat_cmd->add_option("--context", heat_context, "Context text file")->required()->check(CLI::ExistingFile);
  heat_cmd->add_option("--question", heat_question, "Question text")->required();
  heat_cmd->add_option("--out", heat_out, "Output prefix (.svg and .csv are appended)");
  heat_cmd->add_option("--oracle-target", heat_target, "Text the oracle provider attends to");

  auto* sweep_cmd = analyze_cmd->add_subcommand("sweep", "Per-layer retrieval accuracy");
  ConfigFlags sweep_flags;
  sweep_flags.attach(*sweep_cmd);
  std::size_t sample_count = 20, filler_sentences = 12, oracle_layers = 6;
  std::optional<std::size_t> peak_layer;
  std::string qa_file, sweep_out;
  std::uint64_t sample_seed = 11;
  sweep_cmd->add_option("--samples", sample_count, "Number of synthetic QA samples");
  sweep_cmd->add_option("--filler-sentences", filler_sentences, "Filler sentences per sample");
  sweep_cmd->add_option("--sample-seed", sample_seed, "Seed for synthetic samples");
  sweep_cmd->add_option("--qa-file", qa_file, "JSON lines with context, question, answer")
      ->check(CLI::ExistingFile);
  sweep_cmd->add_option("--oracle-layers", oracle_layers, "Layer count of the oracle provider");
  sweep_cmd->add_option("--peak-layer", peak_layer, "Oracle layer with the sharpest attention");
  sweep_cmd->add_option("--out", sweep_out, "Output prefix (.csv and .svg)");

  // provider
  auto* prov_cmd = app.add_subcommand("provider", "External adapter utilities");
  prov_cmd->require_subcommand(1);
  prov_cmd->fallthrough();
  auto* check_cmd = prov_cmd->add_subcommand("check", "Launch the adapter and test the handshake");
  std::optional<std::string> check_cmd_line;
  std::string probe = "Hello world. This is a handshake probe.";
  check_cmd->add_option("--cmd", check_cmd_line, "Adapter command (default INFINIRETRI_PROVIDER_CMD)");
  check_cmd->add_option("--probe", probe, "Text for the tokenize/detokenize round trip");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kInputError;
  }

  try {
    Settings settings;
    if (!config_path.empty()) apply_config_text(read_file(config_path), settings);
    global_flags.apply(settings);

    if (show) {
      out << show_config(settings, json);
      return kOk;
    }

    if (run_cmd->parsed()) {
      run_flags.apply(settings);
      settings.pipeline.validate();
      const std::string document = read_file(doc_path);
      auto prov = make_provider(settings);
      if (!oracle_target.empty()) {
        set_oracle_targets(*prov, oracle_targets(document, oracle_target, prov->tokenizer()));
      }
      const auto result = pipeline::run(document, question, settings.pipeline, *prov);
      const std::string trace_json = pipeline::trace_to_json(result, settings.pipeline);
      if (!trace_out.empty()) render::write_file(trace_out, trace_json + "\n");
      if (!cache_out.empty()) {
        std::ostringstream snap;
        cache::write_snapshot(snap, result.final_cache);
        render::write_file(cache_out, snap.str());
      }
      if (json) {
        out << trace_json << "\n";
      } else {
        out << result.answer << "\n" << summary_line(result.trace) << "\n";
      }
      return kOk;
    }

    if (nih_cmd->parsed()) {
      nih_flags.apply(settings);
      settings.pipeline.validate();
      nih::GridOptions opts;
      opts.lengths = parse_list<std::size_t>(lengths_text, "--lengths");
      opts.depths = parse_list<double>(depths_text, "--depths");
      opts.needle = needle;
      opts.question = nih_question;
      opts.expected_answer = expected;
      opts.filler_seed = filler_seed;
      opts.jobs = jobs;
      opts.config = settings.pipeline;
      // Fail fast on a bad provider selection instead of once per cell.
      make_provider(settings);
      const auto grid = nih::run_grid(opts, [&] { return make_provider(settings); },
                                      nih::plant_needle());
      const std::string svg_path = svg_out.empty() ? replace_extension(grid_out, ".svg") : svg_out;
      nih::emit_heatmap(grid, grid_out, svg_path);
      std::size_t errors = 0;
      for (const auto& c : grid.cells) {
        if (!c.error.empty()) {
          ++errors;
          err << "cell length=" << c.length << " depth=" << c.depth << ": " << c.error << "\n";
        }
      }
      if (json) {
        ordered_json j = {{"cells", grid.cells.size()},
                          {"recall_rate", grid.recall_rate()},
                          {"errors", errors},
                          {"csv", grid_out},
                          {"svg", svg_path}};
        out << j.dump() << "\n";
      } else {
        out << "cells=" << grid.cells.size() << " recall_rate=" << render::fixed(grid.recall_rate(), 4)
            << " errors=" << errors << " csv=" << grid_out << " svg=" << svg_path << "\n";
      }
      return errors == grid.cells.size() ? kProviderError : kOk;
    }

    if (heat_cmd->parsed()) {
      heat_flags.apply(settings);
      settings.pipeline.validate();
      const std::string context = read_file(heat_context);
      auto prov = make_provider(settings);
      if (!heat_target.empty()) {
        set_oracle_targets(*prov, oracle_targets(context, heat_target, prov->tokenizer()));
      }
      const auto map = analysis::question_context_heatmap(*prov, context, heat_question,
                                                          settings.pipeline.layer);
      analysis::export_attention_heatmap(map, heat_out + ".svg", heat_out + ".csv");
      out << "wrote " << heat_out << ".svg and " << heat_out << ".csv (" << map.values.rows()
          << "x" << map.values.cols() << ")\n";
      return kOk;
    }

    if (sweep_cmd->parsed()) {
      sweep_flags.apply(settings);
      settings.pipeline.validate();
      std::unique_ptr<provider::Provider> prov;
      if (settings.pipeline.provider == "oracle") {
        provider::PlantedOracleSpec spec;
        spec.layer_profile = peak_layer
                                 ? provider::PlantedOracleSpec::peaked_profile(oracle_layers, *peak_layer)
                                 : provider::PlantedOracleSpec::rising_profile(oracle_layers);
        prov = std::make_unique<provider::PlantedOracle>(spec);
      } else {
        prov = make_provider(settings);
      }
      std::vector<analysis::QaSample> samples;
      if (!qa_file.empty()) {
        std::istringstream lines(read_file(qa_file));
        std::string line;
        while (std::getline(lines, line)) {
          if (trim(line).empty()) continue;
          const auto j = nlohmann::json::parse(line);
          samples.push_back(analysis::make_qa_sample(j.at("context"), j.at("question"),
                                                     j.at("answer"), prov->tokenizer()));
        }
      } else {
        for (const auto& qa : nih::synthetic_qa(sample_count, filler_sentences, sample_seed)) {
          samples.push_back(analysis::make_qa_sample(qa.context, qa.question, qa.fact_sentence,
                                                     prov->tokenizer()));
        }
      }
      if (auto* oracle = dynamic_cast<provider::PlantedOracle*>(prov.get())) {
        std::vector<std::vector<TokenId>> targets;
        for (const auto& s : samples) {
          for (auto& t : analysis::answer_sentence_tokens(s, prov->tokenizer())) targets.push_back(std::move(t));
        }
        oracle->set_targets(std::move(targets));
      }
      const auto result = analysis::layer_sweep(samples, *prov, settings.pipeline);
      for (const auto& w : result.warnings) err << "warning: " << w << "\n";
      if (!sweep_out.empty()) {
        render::write_file(sweep_out + ".csv", analysis::sweep_csv(result));
        render::write_file(sweep_out + ".svg", analysis::sweep_svg(result));
      }
      if (json) {
        ordered_json j = {{"accuracy", result.accuracy},
                          {"best_layer", result.best_layer()},
                          {"evaluated", result.evaluated},
                          {"skipped", result.skipped}};
        out << j.dump() << "\n";
      } else {
        out << analysis::sweep_csv(result) << "best_layer=" << result.best_layer()
            << " evaluated=" << result.evaluated << " skipped=" << result.skipped << "\n";
      }
      return kOk;
    }

    if (check_cmd->parsed()) {
      auto cmd = check_cmd_line ? check_cmd_line : provider::provider_command_from_env();
      if (!cmd) throw ConfigError("provider check needs --cmd or INFINIRETRI_PROVIDER_CMD");
      provider::ProtocolProvider prov(*cmd);
      const auto info = prov.info();
      const auto tokens = prov.tokenize(probe);
      const std::string back = prov.detokenize(tokens);
      const int status = prov.shutdown();
      if (json) {
        ordered_json j = {{"vocab_size", info.vocab_size},
                          {"layers", info.layers},
                          {"max_window", info.max_window},
                          {"probe_tokens", tokens.size()},
                          {"round_trip", back == probe},
                          {"exit_status", status}};
        out << j.dump() << "\n";
      } else {
        out << "vocab_size=" << info.vocab_size << " layers=" << info.layers
            << " max_window=" << info.max_window << " probe_tokens=" << tokens.size()
            << " round_trip=" << (back == probe ? "ok" : "differs") << "\n";
      }
      return kOk;
    }

    out << app.help();
    return kInputError;
  } catch (const ProviderError& e) {
    err << "provider error: " << e.what() << "\n";
    return kProviderError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace infiniretri::cli
