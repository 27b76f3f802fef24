#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "infiniretri/pipeline.hpp"
#include "infiniretri/provider.hpp"

namespace infiniretri::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kProviderError = 2 };

struct Settings {
  pipeline::PipelineConfig pipeline;
  std::uint64_t seed = 0x1f2e3d4c5b6a7988ULL;  // toy model weights
  std::optional<std::string> provider_cmd;
};

/// Applies `key=value` lines ('#' starts a comment) on top of `settings`.
/// Unknown keys and malformed values raise ConfigError.
void apply_config_text(const std::string& text, Settings& settings);

std::string show_config(const Settings& settings, bool as_json);

/// Builds the provider named in settings.pipeline.provider: toy, oracle or proto.
std::unique_ptr<provider::Provider> make_provider(const Settings& settings);

/// Entry point; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace infiniretri::cli
