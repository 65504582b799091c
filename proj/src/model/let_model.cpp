#include "let/model/let_model.hpp"

#include <cmath>

#include "let/error.hpp"

namespace let::model {

using namespace ad;

std::size_t SentenceInput::sense_count() const {
  std::size_t n = 0;
  for (const auto& s : node_senses) n += s.size();
  return n;
}

LetModel::LetModel(const ModelConfig& config, std::size_t vocab_size,
                   std::shared_ptr<const knowledge::KnowledgeBase> kb, std::uint64_t seed)
    : config_(config), kb_(std::move(kb)), params_(seed) {
  const std::size_t d = config_.dim;
  if (config_.perspectives == 0) throw Error("model: perspectives must be >= 1");
  if (config_.dropout < 0.0 || config_.dropout >= 1.0) {
    throw Error("model: dropout must lie in [0, 1)");
  }
  config_.encoder.dim = d;
  encoder_ = encoder::CharEncoder(params_, "encoder", vocab_size, config_.encoder);

  std::size_t sememe_dim = config_.sememe_dim;
  if (kb_) {
    const auto ids = kb_->sememe_ids();
    for (std::size_t i = 0; i < ids.size(); ++i) sememe_rows_.emplace(ids[i], i);
    if (!ids.empty() && kb_->has_embeddings()) {
      kb_->require_embeddings();
      sememe_dim = kb_->embedding_dim();
      std::vector<double> data;
      data.reserve(ids.size() * sememe_dim);
      for (const auto& id : ids) {
        const auto& row = kb_->embeddings().find(id)->second;
        data.insert(data.end(), row.begin(), row.end());
      }
      sememe_table_ = params_.adopt(
          "knowledge/sememe_emb",
          Tensor({ids.size(), sememe_dim}, std::move(data), config_.train_sememe_embeddings));
    } else if (!ids.empty()) {
      sememe_table_ = params_.uniform("knowledge/sememe_emb", ids.size(), sememe_dim,
                                      1.0 / std::sqrt(static_cast<double>(sememe_dim)));
    }
  }
  config_.sememe_dim = sememe_dim;
  sememe_proj_ = nn::Linear(params_, "knowledge/proj", sememe_dim, d);
  sememe_gat_ = nn::MdGat(params_, "sense/gat", d);
  sememe_pool_ = nn::AttPooling(params_, "sense/pool", d);
  word_pool_ = nn::AttPooling(params_, "word/pool", d);

  for (std::size_t l = 0; l < config_.sagt_layers; ++l) {
    const auto p = "sagt/" + std::to_string(l);
    SagtLayer layer;
    layer.sense_fw = nn::MdGat(params_, p + "/sense_fw", d);
    layer.sense_bw = nn::MdGat(params_, p + "/sense_bw", d);
    layer.word_from_senses = nn::MdGat(params_, p + "/word_gat", d);
    if (config_.use_gru) {
      layer.sense_gru = nn::Gru(params_, p + "/sense_gru", 2 * d, d);
      layer.word_gru = nn::Gru(params_, p + "/word_gru", d, d);
    } else {
      layer.sense_merge = nn::Linear(params_, p + "/sense_merge", 2 * d, d);
    }
    layer.word_norm = nn::LayerNorm(params_, p + "/word_norm", d);
    sagt_.push_back(std::move(layer));
  }

  char_pool_ = nn::AttPooling(params_, "fuse/pool", d);
  fuse_norm_ = nn::LayerNorm(params_, "fuse/norm", d);
  match_gat_ = nn::MdGat(params_, "match/gat", d);
  cos_weights_ = params_.weight("match/w_cos", config_.perspectives, d);
  match_ffn_ = nn::FeedForward(params_, "match/ffn", d + config_.perspectives, d, d);
  sentence_pool_ = nn::AttPooling(params_, "match/pool", d);
  cls_hidden1_ = nn::Linear(params_, "classifier/h1", 5 * d, d);
  cls_hidden2_ = nn::Linear(params_, "classifier/h2", d, d);
  cls_out_ = nn::Linear(params_, "classifier/out", d, 1);
}

SentenceInput LetModel::prepare(const CharSeq& text,
                                const std::vector<Segmenter>& segmenters) const {
  std::vector<lattice::SegPath> paths;
  for (const auto& s : segmenters) {
    static const lattice::Dictionary no_words;
    paths.push_back(lattice::segment(text, s.dict ? *s.dict : no_words, s.strategy));
  }
  if (paths.empty()) {
    paths.push_back(lattice::segment(text, lattice::Dictionary{},
                                     lattice::Strategy::ForwardMaxMatch));
  }
  SentenceInput out{text, lattice::build_lattice(text, paths), {}};
  out.node_senses.resize(out.lattice.size());
  if (!config_.use_sense || !kb_) return out;
  for (const auto& node : out.lattice.nodes()) {
    const auto& senses = kb_->lookup(lattice::encode_utf8(node.surface));
    auto& dst = out.node_senses[node.id];
    for (const auto& sense : senses) {
      if (config_.max_senses && dst.size() == config_.max_senses) break;
      std::vector<std::size_t> rows;
      for (const auto& id : sense.sememes) rows.push_back(sememe_rows_.at(id));
      dst.push_back(std::move(rows));
    }
  }
  return out;
}

Tensor LetModel::init_word_reps(const LatticeGraph& lattice, const Tensor& chars,
                                nn::Context& ctx) const {
  std::vector<std::vector<std::size_t>> spans;
  for (const auto& node : lattice.nodes()) {
    std::vector<std::size_t> rows;
    for (std::size_t t = node.start; t <= node.end; ++t) rows.push_back(t - 1);
    spans.push_back(std::move(rows));
  }
  return word_pool_.pool_groups(chars, spans, ctx);
}

Tensor LetModel::init_sense_reps(const std::vector<std::vector<std::size_t>>& senses,
                                 nn::Context& ctx) const {
  std::vector<std::size_t> all_rows;
  std::vector<std::vector<std::size_t>> groups;
  for (const auto& sememes : senses) {
    if (sememes.empty()) throw Error("sense without sememes");
    std::vector<std::size_t> group;
    for (auto r : sememes) {
      group.push_back(all_rows.size());
      all_rows.push_back(r);
    }
    groups.push_back(std::move(group));
  }
  // Every sememe attends over its own sense's sememe set (itself included).
  auto projected = sememe_proj_(gather_rows(sememe_table_, all_rows));
  auto memory = sememe_gat_.memory(projected, ctx);
  std::vector<Tensor> contextual;
  for (const auto& group : groups) {
    contextual.push_back(
        sememe_gat_.attend(gather_rows(projected, group), memory, group, ctx));
  }
  auto stacked = contextual.size() == 1 ? contextual.front() : concat(contextual, 0);
  return sememe_pool_.pool_groups(stacked, groups, ctx);
}

NodeState LetModel::initial_state(const SentenceInput& s, const Tensor& chars,
                                  nn::Context& ctx) const {
  NodeState state;
  state.words = init_word_reps(s.lattice, chars, ctx);
  state.sense_rows.resize(s.lattice.size());
  std::vector<std::vector<std::size_t>> flat;
  for (std::size_t i = 0; i < s.node_senses.size(); ++i) {
    for (const auto& sense : s.node_senses[i]) {
      state.sense_rows[i].push_back(flat.size());
      flat.push_back(sense);
    }
  }
  if (!flat.empty()) state.senses = init_sense_reps(flat, ctx);
  return state;
}

NodeState LetModel::sagt_layer(std::size_t layer, const NodeState& state,
                               const LatticeGraph& lattice, nn::Context& ctx,
                               SagtTrace* trace) const {
  const auto& p = sagt_.at(layer);
  if (state.senses.numel() == 0) {
    if (trace) {
      trace->senses_seen_by_word_update.push_back(state.senses);
      trace->states.push_back(state);
    }
    return state;
  }
  NodeState next;
  next.sense_rows = state.sense_rows;

  // Sub-step 1: senses gather context from forward / backward reachable words.
  auto mem_fw = p.sense_fw.memory(state.words, ctx);
  auto mem_bw = p.sense_bw.memory(state.words, ctx);
  std::vector<Tensor> from_fw, from_bw;
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    const auto& rows = state.sense_rows[i];
    if (rows.empty()) continue;
    auto queries = gather_rows(state.senses, rows);
    from_fw.push_back(p.sense_fw.attend(queries, mem_fw, lattice.fw_reach(i), ctx));
    from_bw.push_back(p.sense_bw.attend(queries, mem_bw, lattice.bw_reach(i), ctx));
  }
  auto message = concat({concat(from_fw, 0), concat(from_bw, 0)}, 1);  // [S, 2d]
  next.senses = config_.use_gru ? p.sense_gru(state.senses, message) : p.sense_merge(message);

  // Sub-step 2: words with senses read the updated senses; others are kept.
  auto mem_senses = p.word_from_senses.memory(next.senses, ctx);
  std::vector<std::size_t> updated;
  std::vector<Tensor> queries;
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    const auto& rows = state.sense_rows[i];
    if (rows.empty()) continue;
    updated.push_back(i);
    queries.push_back(p.word_from_senses.attend(slice(state.words, 0, i, i + 1),
                                                mem_senses, rows, ctx));
  }
  auto query = concat(queries, 0);
  auto previous = gather_rows(state.words, updated);
  auto candidate = config_.use_gru ? p.word_gru(previous, query) : query;
  auto refreshed = nn::residual_norm(previous, candidate, p.word_norm);

  std::vector<std::size_t> pick(lattice.size());
  for (std::size_t i = 0; i < lattice.size(); ++i) pick[i] = i;
  for (std::size_t k = 0; k < updated.size(); ++k) pick[updated[k]] = lattice.size() + k;
  next.words = gather_rows(concat({state.words, refreshed}, 0), pick);

  if (trace) {
    trace->senses_seen_by_word_update.push_back(next.senses);
    trace->states.push_back(next);
  }
  return next;
}

NodeState LetModel::run_sagt(const SentenceInput& s, const Tensor& chars, nn::Context& ctx,
                             SagtTrace* trace) const {
  auto state = initial_state(s, chars, ctx);
  if (trace) trace->states.push_back(state);
  for (std::size_t l = 0; l < sagt_.size(); ++l) {
    state = sagt_layer(l, state, s.lattice, ctx, trace);
  }
  return state;
}

Tensor LetModel::fuse_chars(const Tensor& words, const LatticeGraph& lattice,
                            const Tensor& chars, nn::Context& ctx) const {
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t t = 1; t <= lattice.text_length(); ++t) {
    if (lattice.covering(t).empty()) {
      throw Error("fuse_chars: character " + std::to_string(t) + " is not covered by any word");
    }
    groups.push_back(lattice.covering(t));
  }
  auto pooled = char_pool_.pool_groups(words, groups, ctx);
  return nn::residual_norm(chars, pooled, fuse_norm_);
}

Tensor LetModel::perspective_distances(const Tensor& x, const Tensor& y) const {
  auto col = nn::ones(x.rows(), 1);
  std::vector<Tensor> columns;
  for (std::size_t k = 0; k < config_.perspectives; ++k) {
    auto weight = matmul(col, slice(cos_weights_, 0, k, k + 1));  // [T, d]
    columns.push_back(cosine_similarity(mul(weight, x), mul(weight, y)));
  }
  return columns.size() == 1 ? columns.front() : concat(columns, 1);
}

MatchOutput LetModel::match_sentences(const Tensor& fused_a, const Tensor& fused_b,
                                      nn::Context& ctx) const {
  if (fused_a.rows() == 0 || fused_b.rows() == 0) throw Error("match: empty sentence");
  MatchOutput out;
  auto mem_a = match_gat_.memory(fused_a, ctx);
  auto mem_b = match_gat_.memory(fused_b, ctx);
  out.self_a = match_gat_.attend(fused_a, mem_a, {}, ctx);
  out.cross_a = match_gat_.attend(fused_a, mem_b, {}, ctx);
  out.self_b = match_gat_.attend(fused_b, mem_b, {}, ctx);
  out.cross_b = match_gat_.attend(fused_b, mem_a, {}, ctx);
  out.dist_a = perspective_distances(out.self_a, out.cross_a);
  out.dist_b = perspective_distances(out.self_b, out.cross_b);
  auto final_a = match_ffn_(concat({out.self_a, out.dist_a}, 1), ctx);
  auto final_b = match_ffn_(concat({out.self_b, out.dist_b}, 1), ctx);
  out.sentence_a = sentence_pool_(final_a, ctx);
  out.sentence_b = sentence_pool_(final_b, ctx);
  return out;
}

Tensor LetModel::classify(const Tensor& cls, const Tensor& ra, const Tensor& rb,
                          nn::Context& ctx) const {
  auto features = concat({cls, ra, rb, mul(ra, rb), ad::abs(sub(ra, rb))}, 1);
  auto h1 = nn::dropout(relu(cls_hidden1_(features)), ctx);
  auto h2 = nn::dropout(relu(cls_hidden2_(h1)), ctx);
  return sigmoid(cls_out_(h2));
}

Tensor LetModel::forward(const PairInput& pair, const encoder::CharVocab& vocab,
                         nn::Context& ctx, ForwardTrace* trace) const {
  auto encoded = encoder_.encode(pair.a.text, pair.b.text, vocab, ctx);
  SagtTrace* trace_a = trace ? &trace->sagt_a : nullptr;
  SagtTrace* trace_b = trace ? &trace->sagt_b : nullptr;
  auto words_a = run_sagt(pair.a, encoded.reps_a, ctx, trace_a).words;
  auto words_b = run_sagt(pair.b, encoded.reps_b, ctx, trace_b).words;
  auto fused_a = fuse_chars(words_a, pair.a.lattice, encoded.reps_a, ctx);
  auto fused_b = fuse_chars(words_b, pair.b.lattice, encoded.reps_b, ctx);
  auto match = match_sentences(fused_a, fused_b, ctx);
  auto p = classify(encoded.cls, match.sentence_a, match.sentence_b, ctx);
  if (trace) {
    trace->encoded = std::move(encoded);
    trace->fused_a = fused_a;
    trace->fused_b = fused_b;
    trace->match = std::move(match);
  }
  return p;
}

Tensor bce_loss(const Tensor& probs, const std::vector<int>& labels) {
  if (probs.numel() != labels.size()) {
    throw ShapeError("bce_loss: " + std::to_string(probs.numel()) + " probabilities for " +
                     std::to_string(labels.size()) + " labels");
  }
  constexpr double eps = 1e-7;
  std::vector<double> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error("bce_loss: labels must be 0 or 1");
    y[i] = labels[i];
  }
  std::vector<double> rest(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) rest[i] = 1.0 - y[i];
  const Tensor target({labels.size(), 1}, std::move(y));
  const Tensor other({labels.size(), 1}, std::move(rest));
  auto p = clamp(probs.cols() == 1 ? probs : transpose(probs), eps, 1.0 - eps);
  auto pos = mul(target, log(p));
  auto neg = mul(other, log(add_scalar(scale(p, -1.0), 1.0)));
  return scale(sum_all(add(pos, neg)), -1.0);
}

}  // namespace let::model
