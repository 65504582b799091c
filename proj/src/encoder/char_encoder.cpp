#include "let/encoder/char_encoder.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "let/error.hpp"

namespace let::encoder {

using namespace ad;

namespace {
const char* const kReservedNames[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
}

CharVocab CharVocab::build(const std::vector<CharSeq>& texts) {
  std::set<char32_t> chars;
  for (const auto& t : texts) chars.insert(t.begin(), t.end());
  CharVocab v;
  for (char32_t c : chars) v.ids_.emplace(c, kReserved + v.ids_.size());
  return v;
}

CharVocab CharVocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary: " + path);
  return read(in, path);
}

CharVocab CharVocab::read(std::istream& in, const std::string& path) {
  CharVocab v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    const auto where = path + ":" + std::to_string(line_no) + ": ";
    if (tab == std::string::npos) throw ParseError(where + "expected char<TAB>id");
    const auto token = line.substr(0, tab);
    std::size_t id = 0;
    try {
      id = std::stoul(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ParseError(where + "bad id");
    }
    if (line_no <= kReserved) {
      if (token != kReservedNames[line_no - 1] || id != line_no - 1) {
        throw ParseError(where + "reserved rows must come first in order");
      }
      continue;
    }
    const auto chars = lattice::decode_utf8(token);
    if (chars.size() != 1) throw ParseError(where + "expected a single character");
    if (id != v.size()) throw ParseError(where + "ids must be consecutive");
    v.ids_.emplace(chars[0], id);
  }
  return v;
}

void CharVocab::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write vocabulary: " + path);
  write(out);
}

void CharVocab::write(std::ostream& out) const {
  for (std::size_t i = 0; i < kReserved; ++i) out << kReservedNames[i] << '\t' << i << '\n';
  for (const auto& [c, id] : ids_) {
    out << lattice::encode_utf8(std::u32string(1, c)) << '\t' << id << '\n';
  }
}

std::size_t CharVocab::id(char32_t c) const {
  auto it = ids_.find(c);
  return it == ids_.end() ? kUnk : it->second;
}

CharEncoder::CharEncoder(ParamStore& store, const std::string& prefix,
                         std::size_t vocab_size, const EncoderConfig& config)
    : config_(config) {
  const std::size_t d = config_.dim;
  if (config_.heads == 0 || d % config_.heads != 0) {
    throw Error("encoder: dim " + std::to_string(d) + " is not divisible by " +
                std::to_string(config_.heads) + " heads");
  }
  if (config_.ffn_dim == 0) config_.ffn_dim = 4 * d;
  // Lookups are not fan-in products; all three tables share one scale so no
  // table dominates the sum.
  char_emb_ = store.uniform(prefix + "/char_emb", vocab_size, d, 1.0);
  pos_emb_ = store.uniform(prefix + "/pos_emb", config_.max_len, d, 1.0);
  seg_emb_ = store.uniform(prefix + "/seg_emb", 2, d, 1.0);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const auto p = prefix + "/layer" + std::to_string(l);
    layers_.push_back(Layer{nn::Linear(store, p + "/attn/q", d, d),
                            nn::Linear(store, p + "/attn/k", d, d),
                            nn::Linear(store, p + "/attn/v", d, d),
                            nn::Linear(store, p + "/attn/o", d, d),
                            nn::LayerNorm(store, p + "/attn_norm", d),
                            nn::FeedForward(store, p + "/ffn", d, config_.ffn_dim, d),
                            nn::LayerNorm(store, p + "/ffn_norm", d)});
  }
}

EncodedPair CharEncoder::encode(const CharSeq& a, const CharSeq& b,
                                const CharVocab& vocab, nn::Context& ctx,
                                std::size_t pad_to, bool keep_attention) const {
  const std::size_t ta = a.size(), tb = b.size();
  const std::size_t used = ta + tb + 3;
  const std::size_t total = std::max(used, pad_to);
  if (total > config_.max_len) {
    throw Error("encoder: pair of lengths " + std::to_string(ta) + " and " +
                std::to_string(tb) + " needs " + std::to_string(total) +
                " slots, max_len is " + std::to_string(config_.max_len));
  }

  std::vector<std::size_t> tokens, positions, segments;
  tokens.push_back(CharVocab::kCls);
  for (char32_t c : a) tokens.push_back(vocab.id(c));
  tokens.push_back(CharVocab::kSep);
  const std::size_t b_begin = tokens.size();
  for (char32_t c : b) tokens.push_back(vocab.id(c));
  tokens.push_back(CharVocab::kSep);
  while (tokens.size() < total) tokens.push_back(CharVocab::kPad);
  for (std::size_t i = 0; i < total; ++i) {
    positions.push_back(i);
    segments.push_back(i < b_begin ? 0 : 1);
  }

  auto x = add(add(gather_rows(char_emb_, tokens), gather_rows(pos_emb_, positions)),
               gather_rows(seg_emb_, segments));
  x = nn::dropout(x, ctx);

  // Additive key mask: -inf on padding columns.
  std::vector<double> mask_values(total * total, 0.0);
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t j = used; j < total; ++j) {
      mask_values[i * total + j] = -std::numeric_limits<double>::infinity();
    }
  }
  const Tensor mask({total, total}, std::move(mask_values));
  const bool padded = total > used;

  EncodedPair out;
  const std::size_t heads = config_.heads;
  const std::size_t dh = config_.dim / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  for (const auto& layer : layers_) {
    auto q = layer.query(x), k = layer.key(x), v = layer.value(x);
    std::vector<Tensor> head_out;
    for (std::size_t h = 0; h < heads; ++h) {
      auto qh = slice(q, 1, h * dh, (h + 1) * dh);
      auto kh = slice(k, 1, h * dh, (h + 1) * dh);
      auto vh = slice(v, 1, h * dh, (h + 1) * dh);
      auto scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
      if (padded) scores = add(scores, mask);
      auto weights = softmax(scores, 1);
      if (keep_attention) out.attention.push_back(weights);
      head_out.push_back(matmul(weights, vh));
    }
    auto attended = layer.output(heads == 1 ? head_out.front() : concat(head_out, 1));
    x = nn::residual_norm(x, nn::dropout(attended, ctx), layer.attn_norm);
    x = nn::residual_norm(x, nn::dropout(layer.ffn(x, ctx), ctx), layer.ffn_norm);
  }

  out.cls = slice(x, 0, 0, 1);
  out.reps_a = slice(x, 0, 1, 1 + ta);
  out.reps_b = slice(x, 0, b_begin, b_begin + tb);
  return out;
}

}  // namespace let::encoder
