#include "infiniretri/planted_oracle.hpp"

#include <algorithm>
#include <string>

namespace infiniretri::provider {
namespace {

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_tokens(std::span<const TokenId> tokens) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (TokenId t : tokens) {
    h ^= static_cast<std::uint32_t>(t);
    h *= 0x100000001b3ULL;
  }
  return h;
}

double unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace

void PlantedOracleSpec::validate() const {
  if (layer_profile.empty()) throw ConfigError("planted oracle needs at least one layer");
  if (heads < 1) throw ConfigError("planted oracle heads must be >= 1");
  if (!(background_mass > 0.0)) throw ConfigError("planted oracle background_mass must be > 0");
  if (target_mass < 0.0) throw ConfigError("planted oracle target_mass must be >= 0");
  for (double p : layer_profile) {
    if (p < 0.0 || p > 1.0) throw ConfigError("planted oracle layer_profile entries must be in [0, 1]");
  }
  for (const auto& t : targets) {
    if (t.empty()) throw ConfigError("planted oracle target patterns must be non-empty");
  }
}

std::vector<double> PlantedOracleSpec::rising_profile(std::size_t layers) {
  std::vector<double> out(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    out[l] = static_cast<double>(l + 1) / static_cast<double>(layers);
  }
  return out;
}

std::vector<double> PlantedOracleSpec::peaked_profile(std::size_t layers, std::size_t peak,
                                                      double base) {
  if (peak >= layers) throw ConfigError("peak layer outside the layer profile");
  std::vector<double> out(layers, base);
  out[peak] = 1.0;
  return out;
}

std::vector<std::size_t> find_occurrences(std::span<const TokenId> haystack,
                                          std::span<const TokenId> pattern, std::size_t limit) {
  std::vector<std::size_t> out;
  limit = std::min(limit, haystack.size());
  if (pattern.empty() || pattern.size() > limit) return out;
  auto it = haystack.begin();
  const auto end = haystack.begin() + static_cast<std::ptrdiff_t>(limit);
  while (true) {
    it = std::search(it, end, pattern.begin(), pattern.end());
    if (it == end) break;
    out.push_back(static_cast<std::size_t>(it - haystack.begin()));
    ++it;
  }
  return out;
}

PlantedOracle::PlantedOracle(PlantedOracleSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

void PlantedOracle::set_targets(std::vector<std::vector<TokenId>> targets) {
  spec_.targets = std::move(targets);
  spec_.validate();
}

ProviderInfo PlantedOracle::info() const {
  return {tokenizer().vocab_size(), spec_.layer_profile.size(), spec_.heads, spec_.max_window};
}

attn::AttentionTensor PlantedOracle::get_attention(const ProviderRequest& request) {
  validate_request(request, RequestKind::Attention, info(), supports_state_reuse());
  const int layer = request.layer.resolve(spec_.layer_profile.size());
  const double sharpness = spec_.layer_profile[static_cast<std::size_t>(layer)];
  const std::span<const TokenId> tokens = request.tokens;
  const std::size_t total = tokens.size();
  const std::size_t context_end = request.query_range.start;

  // Unnormalized column weights shared by all rows (before the causal cut).
  std::vector<double> weight(total, spec_.background_mass);
  std::size_t span_len = 8;
  for (const auto& pattern : spec_.targets) {
    span_len = pattern.size();
    for (std::size_t start : find_occurrences(tokens, pattern, context_end)) {
      for (std::size_t j = start; j < start + pattern.size(); ++j) {
        weight[j] += spec_.target_mass * sharpness;
      }
    }
  }
  if (sharpness < 1.0 && context_end > 0) {
    span_len = std::min(span_len, context_end);
    const std::uint64_t h =
        mix(spec_.seed ^ mix(static_cast<std::uint64_t>(layer) ^ hash_tokens(tokens.first(context_end))));
    const double u = 2.0 * unit(mix(h));
    const std::size_t start = static_cast<std::size_t>(unit(h) * static_cast<double>(context_end - span_len + 1));
    for (std::size_t j = start; j < start + span_len; ++j) {
      weight[j] += spec_.target_mass * (1.0 - sharpness) * u;
    }
  }

  Matrix head(request.query_range.length, total, 0.0);
  for (std::size_t r = 0; r < request.query_range.length; ++r) {
    const std::size_t visible = std::min(total, request.query_range.start + r + 1);
    double sum = 0.0;
    for (std::size_t j = 0; j < visible; ++j) sum += weight[j];
    auto row = head.row(r);
    for (std::size_t j = 0; j < visible; ++j) row[j] = weight[j] / sum;
  }

  attn::AttentionTensor out;
  out.layer = layer;
  out.query_positions = request.query_range;
  out.key_positions = {0, total};
  out.heads.assign(spec_.heads, head);
  return out;
}

std::vector<TokenId> PlantedOracle::generate(const ProviderRequest& request) {
  validate_request(request, RequestKind::Generate, info(), supports_state_reuse());
  if (!spec_.echo_targets) return {};
  std::size_t best_pos = request.tokens.size();
  const std::vector<TokenId>* best = nullptr;
  for (const auto& pattern : spec_.targets) {
    auto hits = find_occurrences(request.tokens, pattern, request.tokens.size());
    if (!hits.empty() && hits.front() < best_pos) {
      best_pos = hits.front();
      best = &pattern;
    }
  }
  if (!best) return {};
  const std::size_t n = std::min(best->size(), request.max_new_tokens);
  return {best->begin(), best->begin() + static_cast<std::ptrdiff_t>(n)};
}

}  // namespace infiniretri::provider
