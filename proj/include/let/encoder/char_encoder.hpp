#pragma once

// Character-level transformer encoder over the packed pair
//   [CLS] a_1 .. a_Ta [SEP] b_1 .. b_Tb [SEP]
// with learned char, absolute position and segment (A/B) embeddings and
// post-norm layers: x = LN(x + MHA(x)); x = LN(x + FFN(x)).

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "let/autodiff/params.hpp"
#include "let/lattice/lattice.hpp"
#include "let/nn/layers.hpp"

namespace let::encoder {

using ad::Tensor;
using lattice::CharSeq;

class CharVocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kCls = 2;
  static constexpr std::size_t kSep = 3;
  static constexpr std::size_t kReserved = 4;

  CharVocab() = default;

  // Reserved ids first, then every distinct character in ascending code
  // point order.
  static CharVocab build(const std::vector<CharSeq>& texts);

  // TSV `char<TAB>id`, reserved rows ([PAD], [UNK], [CLS], [SEP]) first.
  static CharVocab load(const std::string& path);
  void save(const std::string& path) const;
  static CharVocab read(std::istream& in, const std::string& origin);
  void write(std::ostream& out) const;

  std::size_t id(char32_t c) const;
  std::size_t size() const { return kReserved + ids_.size(); }

  bool operator==(const CharVocab&) const = default;

 private:
  std::map<char32_t, std::size_t> ids_;
};

struct EncoderConfig {
  std::size_t dim = 128;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ffn_dim = 0;  // 0 means 4 * dim
  std::size_t max_len = 128;
};

struct EncodedPair {
  Tensor cls;     // [1, d]
  Tensor reps_a;  // [Ta, d]
  Tensor reps_b;  // [Tb, d]
  // When requested: attention weights per layer and head, [S, S] each, in
  // layer-major order.
  std::vector<Tensor> attention;
};

class CharEncoder {
 public:
  CharEncoder() = default;
  CharEncoder(ad::ParamStore& store, const std::string& prefix,
              std::size_t vocab_size, const EncoderConfig& config);

  // `pad_to` > 0 appends [PAD] slots up to that length; they are masked out
  // of every attention. Throws let::Error when the packed pair exceeds
  // max_len.
  EncodedPair encode(const CharSeq& a, const CharSeq& b, const CharVocab& vocab,
                     nn::Context& ctx, std::size_t pad_to = 0,
                     bool keep_attention = false) const;

  const EncoderConfig& config() const { return config_; }

 private:
  struct Layer {
    nn::Linear query, key, value, output;
    nn::LayerNorm attn_norm;
    nn::FeedForward ffn;
    nn::LayerNorm ffn_norm;
  };

  EncoderConfig config_;
  Tensor char_emb_, pos_emb_, seg_emb_;
  std::vector<Layer> layers_;
};

}  // namespace let::encoder
