#pragma once

// The LET matching network:
//   encoder -> word reps (attentive pooling over each lattice word's chars)
//           -> sense reps (sememe MD-GAT + pooling)
//           -> L semantic-aware graph transformer layers
//           -> char fusion -> bilateral multi-perspective matching
//           -> relation classifier.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "let/autodiff/params.hpp"
#include "let/encoder/char_encoder.hpp"
#include "let/knowledge/knowledge_base.hpp"
#include "let/lattice/lattice.hpp"
#include "let/nn/md_attention.hpp"

namespace let::model {

using ad::Tensor;
using lattice::CharSeq;
using lattice::LatticeGraph;

struct ModelConfig {
  std::size_t dim = 128;
  std::size_t sagt_layers = 2;
  std::size_t perspectives = 20;
  double dropout = 0.2;
  encoder::EncoderConfig encoder;  // encoder.dim is overwritten by dim
  bool use_sense = true;
  bool use_gru = true;
  bool train_sememe_embeddings = true;
  std::size_t sememe_dim = 200;  // used only when the KB carries no table
  std::size_t max_senses = 0;    // per word; 0 keeps every sense
};

struct Segmenter {
  lattice::Strategy strategy = lattice::Strategy::ForwardMaxMatch;
  std::shared_ptr<const lattice::Dictionary> dict;
};

// A sentence with its lattice and, per lattice node, the senses found in the
// knowledge base as lists of sememe-table rows.
struct SentenceInput {
  CharSeq text;
  LatticeGraph lattice;
  std::vector<std::vector<std::vector<std::size_t>>> node_senses;

  std::size_t sense_count() const;
};

struct PairInput {
  SentenceInput a;
  SentenceInput b;
};

// Word and sense representations of one sentence at some SaGT layer. Sense
// rows are grouped by owning node in node order.
struct NodeState {
  Tensor words;   // [nodes, d]
  Tensor senses;  // [total senses, d]; empty when no node has senses
  std::vector<std::vector<std::size_t>> sense_rows;  // node -> rows in senses
};

struct SagtTrace {
  std::vector<NodeState> states;  // states[0] is the initial state
  // Sense matrix that each layer's word update attended over.
  std::vector<Tensor> senses_seen_by_word_update;
};

struct MatchOutput {
  Tensor sentence_a, sentence_b;      // [1, d]
  Tensor self_a, cross_a, dist_a;     // [Ta, d], [Ta, d], [Ta, P]
  Tensor self_b, cross_b, dist_b;
};

struct ForwardTrace {
  encoder::EncodedPair encoded;
  SagtTrace sagt_a, sagt_b;
  Tensor fused_a, fused_b;
  MatchOutput match;
};

class LetModel {
 public:
  // `kb` may be null (no knowledge). Parameters are seeded per path from
  // `seed`, so toggling modules never perturbs the others' initialization.
  LetModel(const ModelConfig& config, std::size_t vocab_size,
           std::shared_ptr<const knowledge::KnowledgeBase> kb, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ad::ParamStore& params() { return params_; }
  const ad::ParamStore& params() const { return params_; }
  const encoder::CharEncoder& char_encoder() const { return encoder_; }

  // Segments, builds the lattice and resolves senses (none when use_sense is
  // off or the word is unknown).
  SentenceInput prepare(const CharSeq& text, const std::vector<Segmenter>& segmenters) const;

  // Probability that the pair matches, [1, 1].
  Tensor forward(const PairInput& pair, const encoder::CharVocab& vocab, nn::Context& ctx,
                 ForwardTrace* trace = nullptr) const;

  // Steps of forward(), exposed for testing and instrumentation.
  Tensor init_word_reps(const LatticeGraph& lattice, const Tensor& chars,
                        nn::Context& ctx) const;
  Tensor init_sense_reps(const std::vector<std::vector<std::size_t>>& senses,
                         nn::Context& ctx) const;
  NodeState initial_state(const SentenceInput& s, const Tensor& chars, nn::Context& ctx) const;
  NodeState sagt_layer(std::size_t layer, const NodeState& state, const LatticeGraph& lattice,
                       nn::Context& ctx, SagtTrace* trace = nullptr) const;
  NodeState run_sagt(const SentenceInput& s, const Tensor& chars, nn::Context& ctx,
                     SagtTrace* trace = nullptr) const;
  Tensor fuse_chars(const Tensor& words, const LatticeGraph& lattice, const Tensor& chars,
                    nn::Context& ctx) const;
  MatchOutput match_sentences(const Tensor& fused_a, const Tensor& fused_b,
                              nn::Context& ctx) const;
  // [Ta, P] multi-perspective cosine between matching rows of x and y.
  Tensor perspective_distances(const Tensor& x, const Tensor& y) const;
  Tensor classify(const Tensor& cls, const Tensor& ra, const Tensor& rb, nn::Context& ctx) const;

  // Row of each sememe id in the sememe table.
  const std::unordered_map<std::string, std::size_t>& sememe_rows() const {
    return sememe_rows_;
  }

 private:
  struct SagtLayer {
    nn::MdGat sense_fw, sense_bw, word_from_senses;
    nn::Gru sense_gru, word_gru;
    nn::Linear sense_merge;  // [2d, d]; used when GRUs are ablated
    nn::LayerNorm word_norm;
  };

  ModelConfig config_;
  std::shared_ptr<const knowledge::KnowledgeBase> kb_;
  ad::ParamStore params_;
  encoder::CharEncoder encoder_;

  std::unordered_map<std::string, std::size_t> sememe_rows_;
  Tensor sememe_table_;
  nn::Linear sememe_proj_;
  nn::MdGat sememe_gat_;
  nn::AttPooling sememe_pool_;
  nn::AttPooling word_pool_;
  std::vector<SagtLayer> sagt_;

  nn::AttPooling char_pool_;
  nn::LayerNorm fuse_norm_;
  nn::MdGat match_gat_;
  Tensor cos_weights_;  // [P, d]
  nn::FeedForward match_ffn_;
  nn::AttPooling sentence_pool_;
  nn::Linear cls_hidden1_, cls_hidden2_, cls_out_;
};

// -sum_i [y_i log p_i + (1 - y_i) log(1 - p_i)] with p clamped to
// [1e-7, 1 - 1e-7]. `probs` is [N, 1].
Tensor bce_loss(const Tensor& probs, const std::vector<int>& labels);

}  // namespace let::model
