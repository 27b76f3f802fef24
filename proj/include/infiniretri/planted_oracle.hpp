#pragma once

#include <cstdint>
#include <vector>

#include "infiniretri/provider.hpp"

namespace infiniretri::provider {

/// Configuration of the synthetic provider.
///
/// Every occurrence of a target token pattern inside the context (the
/// positions before the query rows) receives `target_mass * profile[layer]`
/// per token on top of a uniform `background_mass`. Layers with
/// profile < 1 also place `target_mass * (1 - profile) * U` on a distractor
/// span of the same length, where U in [0, 2) is drawn deterministically from
/// (seed, layer, context). Each row is then normalized to 1.
struct PlantedOracleSpec {
  std::vector<std::vector<TokenId>> targets;
  double target_mass = 1.0;
  double background_mass = 1e-3;
  std::vector<double> layer_profile = rising_profile(4);
  std::size_t heads = 4;
  std::uint64_t seed = 7;
  bool echo_targets = true;
  std::size_t max_window = std::size_t{1} << 22;

  void validate() const;

  // (l + 1) / layers: sharper towards the output, exact in the last layer.
  static std::vector<double> rising_profile(std::size_t layers);
  // 1.0 at `peak`, `base` everywhere else.
  static std::vector<double> peaked_profile(std::size_t layers, std::size_t peak,
                                            double base = 0.2);
};

class PlantedOracle final : public Provider {
 public:
  explicit PlantedOracle(PlantedOracleSpec spec);

  ProviderInfo info() const override;
  const Tokenizer& tokenizer() const override { return default_tokenizer(); }
  std::string name() const override { return "oracle"; }

  attn::AttentionTensor get_attention(const ProviderRequest& request) override;

  /// With echo_targets, returns the earliest target occurrence in the input
  /// (truncated to max_new_tokens); otherwise, or if none occurs, nothing.
  std::vector<TokenId> generate(const ProviderRequest& request) override;

  void set_targets(std::vector<std::vector<TokenId>> targets);
  const PlantedOracleSpec& spec() const { return spec_; }

 private:
  PlantedOracleSpec spec_;
};

/// Start positions of every occurrence of `pattern` lying inside [0, limit).
std::vector<std::size_t> find_occurrences(std::span<const TokenId> haystack,
                                          std::span<const TokenId> pattern, std::size_t limit);

}  // namespace infiniretri::provider
