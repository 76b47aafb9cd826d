#pragma once

#include <utility>
#include <vector>

#include "json.hpp"

#include "cfcdc/data/tokenizer.hpp"
#include "cfcdc/nn/layers.hpp"

namespace cfcdc::encoder {

struct EncoderConfig {
  int n_layers = 3;
  int hidden_dim = 128;
  int n_heads = 4;
  int ffn_dim = 256;
  double dropout_rate = 0.2;
  int max_seq_len = 64;
  int vocab_size = 0;

  // Throws InputError on an inconsistent configuration.
  void validate() const;
};

nlohmann::json to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

// Per-token states b_1..b_n, the question mask, and the pooled vector b.
struct EncodedSequence {
  nn::Var hidden;        // n x hidden_dim
  nn::Matrix segment_mask;  // n x 1
  nn::Var pooled;        // 1 x hidden_dim, row 0 of hidden
};

// Pre-norm self-attention encoder with learned token, position, segment and
// exact-match embeddings. Parameters live in the caller's store under `prefix`.
class Encoder {
 public:
  Encoder() = default;
  Encoder(nn::ParameterStore& store, const std::string& prefix, EncoderConfig cfg, nn::Rng& init);

  // Eval mode when `dropout` is null. Throws InputError on an out-of-range id.
  EncodedSequence encode(nn::Graph& g, const data::TokenizedInput& tokens, nn::Rng* dropout) const;

  // Two dropout realizations of the same input.
  std::pair<EncodedSequence, EncodedSequence> encode_twice(nn::Graph& g, const data::TokenizedInput& tokens,
                                                           nn::Rng& rng_a, nn::Rng& rng_b) const;

  const EncoderConfig& config() const { return cfg_; }
  nn::Parameter& token_embedding() const { return *tok_; }

 private:
  struct Layer {
    nn::LayerNorm ln_attn;
    nn::Linear q, k, v, o;
    nn::LayerNorm ln_ffn;
    nn::Linear ff1, ff2;
  };

  nn::Var attention(const Layer& layer, nn::Var x) const;

  EncoderConfig cfg_;
  nn::Parameter* tok_ = nullptr;
  nn::Parameter* pos_ = nullptr;
  nn::Parameter* seg_ = nullptr;
  nn::Parameter* match_ = nullptr;
  std::vector<Layer> layers_;
  nn::LayerNorm ln_out_;
};

}  // namespace cfcdc::encoder
