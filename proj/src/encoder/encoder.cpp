#include "cfcdc/encoder/encoder.hpp"

#include <cmath>

#include "cfcdc/error.hpp"

namespace cfcdc::encoder {

using nn::Matrix;
using nn::Var;

void EncoderConfig::validate() const {
  if (n_layers < 1 || hidden_dim < 1 || n_heads < 1 || ffn_dim < 1) {
    throw InputError("encoder: sizes must be positive");
  }
  if (hidden_dim % n_heads != 0) throw InputError("encoder: hidden_dim must be divisible by n_heads");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InputError("encoder: dropout_rate must be in [0, 1)");
  if (max_seq_len < 8) throw InputError("encoder: max_seq_len must be at least 8");
  if (vocab_size < 4) throw InputError("encoder: vocab_size must cover the special tokens");
}

nlohmann::json to_json(const EncoderConfig& c) {
  return {{"n_layers", c.n_layers},     {"hidden_dim", c.hidden_dim},   {"n_heads", c.n_heads},
          {"ffn_dim", c.ffn_dim},       {"dropout_rate", c.dropout_rate}, {"max_seq_len", c.max_seq_len},
          {"vocab_size", c.vocab_size}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.n_layers = j.at("n_layers").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.validate();
  return c;
}

Encoder::Encoder(nn::ParameterStore& store, const std::string& prefix, EncoderConfig cfg, nn::Rng& init)
    : cfg_(cfg) {
  cfg_.validate();
  const int h = cfg_.hidden_dim;
  tok_ = &store.create(prefix + ".tok", nn::gaussian(cfg_.vocab_size, h, 0.1, init));
  pos_ = &store.create(prefix + ".pos", nn::gaussian(cfg_.max_seq_len, h, 0.1, init));
  seg_ = &store.create(prefix + ".seg", nn::gaussian(2, h, 0.1, init));
  match_ = &store.create(prefix + ".match", nn::gaussian(2, h, 0.1, init));
  for (int l = 0; l < cfg_.n_layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    layers_.push_back(Layer{nn::LayerNorm(store, p + ".ln_attn", h), nn::Linear(store, p + ".q", h, h, init),
                            nn::Linear(store, p + ".k", h, h, init), nn::Linear(store, p + ".v", h, h, init),
                            nn::Linear(store, p + ".o", h, h, init), nn::LayerNorm(store, p + ".ln_ffn", h),
                            nn::Linear(store, p + ".ff1", h, cfg_.ffn_dim, init),
                            nn::Linear(store, p + ".ff2", cfg_.ffn_dim, h, init)});
  }
  ln_out_ = nn::LayerNorm(store, prefix + ".ln_out", h);
}

Var Encoder::attention(const Layer& layer, Var x) const {
  const int dh = cfg_.hidden_dim / cfg_.n_heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  Var q = layer.q(x);
  Var k = layer.k(x);
  Var v = layer.v(x);
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(cfg_.n_heads));
  for (int hd = 0; hd < cfg_.n_heads; ++hd) {
    Var qh = nn::slice_cols(q, hd * dh, dh);
    Var kh = nn::slice_cols(k, hd * dh, dh);
    Var vh = nn::slice_cols(v, hd * dh, dh);
    Var a = nn::softmax_rows(nn::scale(nn::matmul_nt(qh, kh), inv));
    heads.push_back(nn::matmul(a, vh));
  }
  return layer.o(nn::concat_cols(heads));
}

EncodedSequence Encoder::encode(nn::Graph& g, const data::TokenizedInput& tokens, nn::Rng* dropout) const {
  const int n = tokens.length();
  if (n < 1 || n > cfg_.max_seq_len) throw InputError("encode: sequence length out of range");
  if (tokens.segment_mask.size() != tokens.token_ids.size()) throw InputError("encode: mask length mismatch");
  for (int id : tokens.token_ids) {
    if (id < 0 || id >= cfg_.vocab_size) throw InputError("encode: token id " + std::to_string(id) + " out of range");
  }
  std::vector<int> positions(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) positions[static_cast<std::size_t>(i)] = i;

  const double rate = cfg_.dropout_rate;
  Var x = nn::embedding(g.param(*tok_), tokens.token_ids);
  x = nn::add(x, nn::embedding(g.param(*pos_), positions));
  x = nn::add(x, nn::embedding(g.param(*seg_), tokens.segment_mask));
  if (tokens.match_mask.size() == tokens.token_ids.size()) {
    x = nn::add(x, nn::embedding(g.param(*match_), tokens.match_mask));
  }
  x = nn::dropout(x, rate, dropout);
  for (const Layer& layer : layers_) {
    x = nn::add(x, nn::dropout(attention(layer, layer.ln_attn(x)), rate, dropout));
    Var f = layer.ff2(nn::gelu(layer.ff1(layer.ln_ffn(x))));
    x = nn::add(x, nn::dropout(f, rate, dropout));
  }
  EncodedSequence out;
  out.hidden = ln_out_(x);
  out.pooled = nn::slice_rows(out.hidden, 0, 1);
  out.segment_mask = Matrix(n, 1);
  for (int i = 0; i < n; ++i) out.segment_mask(i, 0) = tokens.segment_mask[static_cast<std::size_t>(i)];
  return out;
}

std::pair<EncodedSequence, EncodedSequence> Encoder::encode_twice(nn::Graph& g, const data::TokenizedInput& tokens,
                                                                  nn::Rng& rng_a, nn::Rng& rng_b) const {
  EncodedSequence a = encode(g, tokens, &rng_a);
  EncodedSequence b = encode(g, tokens, &rng_b);
  return {std::move(a), std::move(b)};
}

}  // namespace cfcdc::encoder
