#include "infiniretri/protocol.hpp"

#include <openssl/evp.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <mutex>

#include <json.hpp>

namespace infiniretri::provider {
namespace wire {
namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::Attention: return "attention";
    case Kind::Generate: return "generate";
    case Kind::Tokenize: return "tokenize";
    case Kind::Detokenize: return "detokenize";
  }
  return "attention";
}

Kind parse_kind(const std::string& name) {
  if (name == "attention") return Kind::Attention;
  if (name == "generate") return Kind::Generate;
  if (name == "tokenize") return Kind::Tokenize;
  if (name == "detokenize") return Kind::Detokenize;
  throw ProtocolError("unknown request kind '" + name + "'");
}

json parse(std::string_view line) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed JSON from adapter: ") + e.what());
  }
}

// Parses a response and checks the echoed id and the error field.
json parse_response(std::string_view line, std::int64_t expected_id) {
  json j = parse(line);
  if (!j.is_object() || !j.contains("id") || !j["id"].is_number_integer()) {
    throw ProtocolError("response without an integer id: " + std::string(line));
  }
  const auto id = j["id"].get<std::int64_t>();
  if (id != expected_id) {
    throw ProtocolError("response id " + std::to_string(id) + " does not match request id " +
                        std::to_string(expected_id));
  }
  if (j.contains("error")) {
    throw ProtocolError("adapter error for request " + std::to_string(id) + ": " +
                        j["error"].get<std::string>());
  }
  return j;
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ProtocolError(std::string("response missing field '") + key + "'");
  try {
    return j[key].get<T>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string encode_request(const Request& request) {
  ordered_json j;
  j["id"] = request.id;
  j["kind"] = kind_name(request.kind);
  j["tokens"] = request.tokens ? ordered_json(*request.tokens) : ordered_json(nullptr);
  j["text"] = request.text ? ordered_json(*request.text) : ordered_json(nullptr);
  if (request.layer.is_last()) {
    j["layer"] = "last";
  } else {
    j["layer"] = request.layer.index();
  }
  j["query_start"] = request.query_start;
  j["query_len"] = request.query_len;
  j["max_new_tokens"] = request.max_new_tokens;
  return j.dump();
}

Request decode_request(std::string_view line) {
  const json j = parse(line);
  Request r;
  r.id = field<std::int64_t>(j, "id");
  r.kind = parse_kind(field<std::string>(j, "kind"));
  if (j.contains("tokens") && !j["tokens"].is_null()) r.tokens = j["tokens"].get<std::vector<TokenId>>();
  if (j.contains("text") && !j["text"].is_null()) r.text = j["text"].get<std::string>();
  if (j.contains("layer")) {
    const json& layer = j["layer"];
    if (layer.is_string()) {
      r.layer = LayerSpec::parse(layer.get<std::string>());
    } else {
      r.layer = LayerSpec(layer.get<int>());
    }
  }
  if (j.contains("query_start")) r.query_start = j["query_start"].get<std::size_t>();
  if (j.contains("query_len")) r.query_len = j["query_len"].get<std::size_t>();
  if (j.contains("max_new_tokens")) r.max_new_tokens = j["max_new_tokens"].get<std::size_t>();
  return r;
}

std::string encode_f32_base64(std::span<const float> values) {
  std::string bytes(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<float> decode_f32_base64(std::string_view text) {
  if (text.size() % 4 != 0) throw ProtocolError("base64 payload length is not a multiple of 4");
  std::string bytes(text.size() / 4 * 3 + 1, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(bytes.data()),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw ProtocolError("invalid base64 payload");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock counts padding as zero bytes.
  for (auto it = text.rbegin(); it != text.rend() && *it == '='; ++it) --len;
  if (len % 4 != 0) throw ProtocolError("attention payload is not a whole number of float32 values");
  std::vector<float> out(len / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
    }
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

ProviderInfo decode_handshake(std::string_view line) {
  const json j = parse(line);
  if (j.contains("error")) {
    throw ProtocolError("adapter handshake failed: " + j["error"].get<std::string>());
  }
  ProviderInfo info;
  info.vocab_size = field<std::size_t>(j, "vocab_size");
  info.layers = field<std::size_t>(j, "layers");
  info.max_window = field<std::size_t>(j, "max_window");
  if (j.contains("heads")) info.heads = j["heads"].get<std::size_t>();
  if (info.vocab_size == 0 || info.layers == 0 || info.max_window == 0) {
    throw ProtocolError("handshake advertises a zero vocab_size, layers or max_window");
  }
  return info;
}

std::string encode_handshake(const ProviderInfo& info) {
  ordered_json j;
  j["vocab_size"] = info.vocab_size;
  j["layers"] = info.layers;
  j["max_window"] = info.max_window;
  if (info.heads) j["heads"] = info.heads;
  return j.dump();
}

attn::AttentionTensor decode_attention(std::string_view line, std::int64_t expected_id,
                                       std::size_t expected_rows, std::size_t expected_cols) {
  const json j = parse_response(line, expected_id);
  const auto heads = field<std::size_t>(j, "heads");
  const auto rows = field<std::size_t>(j, "rows");
  const auto cols = field<std::size_t>(j, "cols");
  if (heads == 0) throw ProtocolError("attention response with zero heads");
  if (rows != expected_rows || cols != expected_cols) {
    throw ProtocolError("attention response is " + std::to_string(rows) + "x" +
                        std::to_string(cols) + ", expected " + std::to_string(expected_rows) +
                        "x" + std::to_string(expected_cols));
  }
  const std::vector<float> values = decode_f32_base64(field<std::string>(j, "data_b64"));
  if (values.size() != heads * rows * cols) {
    throw ProtocolError("attention payload has " + std::to_string(values.size()) +
                        " floats, expected " + std::to_string(heads * rows * cols));
  }
  attn::AttentionTensor out;
  out.key_positions = {0, cols};
  out.heads.reserve(heads);
  std::size_t k = 0;
  for (std::size_t h = 0; h < heads; ++h) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = static_cast<double>(values[k++]);
    out.heads.push_back(std::move(m));
  }
  return out;
}

std::vector<TokenId> decode_tokens(std::string_view line, std::int64_t expected_id) {
  return field<std::vector<TokenId>>(parse_response(line, expected_id), "tokens");
}

std::string decode_text(std::string_view line, std::int64_t expected_id) {
  return field<std::string>(parse_response(line, expected_id), "text");
}

std::string encode_attention(std::int64_t id, const attn::AttentionTensor& tensor) {
  std::vector<float> flat;
  flat.reserve(tensor.head_count() * tensor.rows() * tensor.cols());
  for (const auto& head : tensor.heads) {
    for (double v : head.data()) flat.push_back(static_cast<float>(v));
  }
  ordered_json j;
  j["id"] = id;
  j["heads"] = tensor.head_count();
  j["rows"] = tensor.rows();
  j["cols"] = tensor.cols();
  j["data_b64"] = encode_f32_base64(flat);
  return j.dump();
}

std::string encode_tokens(std::int64_t id, std::span<const TokenId> tokens) {
  ordered_json j;
  j["id"] = id;
  j["tokens"] = std::vector<TokenId>(tokens.begin(), tokens.end());
  return j.dump();
}

std::string encode_text(std::int64_t id, std::string_view text) {
  ordered_json j;
  j["id"] = id;
  j["text"] = std::string(text);
  return j.dump();
}

std::string encode_error(std::int64_t id, std::string_view message) {
  ordered_json j;
  j["id"] = id;
  j["error"] = std::string(message);
  return j.dump();
}

}  // namespace wire

Subprocess::Subprocess(const std::string& command) {
  static std::once_flag ignore_sigpipe;
  std::call_once(ignore_sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });

  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) throw ProviderError(std::string("pipe: ") + std::strerror(errno));
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw ProviderError(std::string("pipe: ") + std::strerror(errno));
  }
  pid_ = ::fork();
  if (pid_ < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
    throw ProviderError(std::string("fork: ") + std::strerror(errno));
  }
  if (pid_ == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  to_child_ = to_child[1];
  from_child_ = ::fdopen(from_child[0], "r");
}

Subprocess::~Subprocess() {
  try {
    finish();
  } catch (...) {
  }
}

void Subprocess::write_line(std::string_view line) {
  std::string buf(line);
  buf += '\n';
  std::size_t done = 0;
  while (done < buf.size()) {
    const ssize_t n = ::write(to_child_, buf.data() + done, buf.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("write to adapter failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> Subprocess::read_line() {
  if (!from_child_) return std::nullopt;
  std::string line;
  int c;
  while ((c = std::fgetc(from_child_)) != EOF) {
    if (c == '\n') return line;
    line += static_cast<char>(c);
  }
  if (line.empty()) return std::nullopt;
  return line;
}

int Subprocess::finish() {
  if (status_) return *status_;
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = -1;
  }
  if (from_child_) {
    std::fclose(from_child_);
    from_child_ = nullptr;
  }
  int status = 0;
  if (pid_ > 0) {
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
  }
  status_ = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return *status_;
}

std::vector<TokenId> RemoteTokenizer::encode(std::string_view text) const {
  return owner_->tokenize(text);
}

std::string RemoteTokenizer::decode(std::span<const TokenId> tokens) const {
  return owner_->detokenize(tokens);
}

std::size_t RemoteTokenizer::vocab_size() const { return owner_->info().vocab_size; }

ProtocolProvider::ProtocolProvider(const std::string& command)
    : process_(command), tokenizer_(*this) {
  auto line = process_.read_line();
  if (!line) {
    const int status = process_.finish();
    throw ProtocolError("adapter exited before the handshake (status " + std::to_string(status) +
                        "): " + command);
  }
  info_ = wire::decode_handshake(*line);
}

std::string ProtocolProvider::roundtrip(const wire::Request& request) {
  process_.write_line(wire::encode_request(request));
  auto line = process_.read_line();
  if (!line) throw ProtocolError("adapter closed the connection during request " +
                                 std::to_string(request.id));
  return *line;
}

attn::AttentionTensor ProtocolProvider::get_attention(const ProviderRequest& request) {
  validate_request(request, RequestKind::Attention, info_, supports_state_reuse());
  const int layer = request.layer.resolve(info_.layers);
  wire::Request r;
  r.id = next_id_++;
  r.kind = wire::Kind::Attention;
  r.tokens = request.tokens;
  r.layer = request.layer;
  r.query_start = request.query_range.start;
  r.query_len = request.query_range.length;
  auto tensor = wire::decode_attention(roundtrip(r), r.id, request.query_range.length,
                                       request.tokens.size());
  tensor.layer = layer;
  tensor.query_positions = request.query_range;
  return tensor;
}

std::vector<TokenId> ProtocolProvider::generate(const ProviderRequest& request) {
  validate_request(request, RequestKind::Generate, info_, supports_state_reuse());
  wire::Request r;
  r.id = next_id_++;
  r.kind = wire::Kind::Generate;
  r.tokens = request.tokens;
  r.max_new_tokens = request.max_new_tokens;
  return wire::decode_tokens(roundtrip(r), r.id);
}

std::vector<TokenId> ProtocolProvider::tokenize(std::string_view text) {
  wire::Request r;
  r.id = next_id_++;
  r.kind = wire::Kind::Tokenize;
  r.text = std::string(text);
  return wire::decode_tokens(roundtrip(r), r.id);
}

std::string ProtocolProvider::detokenize(std::span<const TokenId> tokens) {
  wire::Request r;
  r.id = next_id_++;
  r.kind = wire::Kind::Detokenize;
  r.tokens = std::vector<TokenId>(tokens.begin(), tokens.end());
  return wire::decode_text(roundtrip(r), r.id);
}

std::optional<std::string> provider_command_from_env() {
  const char* cmd = std::getenv("INFINIRETRI_PROVIDER_CMD");
  if (!cmd || !*cmd) return std::nullopt;
  return std::string(cmd);
}

}  // namespace infiniretri::provider
