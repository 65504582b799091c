#pragma once

// File-backed word -> senses -> sememes store with an optional sememe
// embedding table.
//
// KB file (UTF-8 TSV, one sense per line):
//   word<TAB>sense_id<TAB>sememe1,sememe2,...
// Embedding file:
//   sememe_id<TAB>v1 v2 ... v_dsem
// Repeated words accumulate senses in file order. Blank lines and lines
// starting with '#' are ignored in both files.

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace let::knowledge {

struct Sense {
  std::string sense_id;
  std::vector<std::string> sememes;  // never empty

  bool operator==(const Sense&) const = default;
};

class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  // `emb_path` may be empty: the model then initializes sememe embeddings
  // itself. Throws let::ParseError / let::Error on malformed input, missing
  // embedding rows, or inconsistent dimensions.
  static KnowledgeBase load(const std::string& kb_path,
                            const std::string& emb_path = "");

  void save(const std::string& kb_path, const std::string& emb_path = "") const;

  void add_sense(const std::string& word, Sense sense);
  void set_embedding(const std::string& sememe, std::vector<double> values);

  // Senses of `word` in file order; empty when the word is unknown.
  const std::vector<Sense>& lookup(std::string_view word) const;

  bool empty() const { return entries_.empty(); }
  std::size_t word_count() const { return entries_.size(); }
  std::size_t max_senses() const;
  const std::map<std::string, std::vector<Sense>, std::less<>>& entries() const {
    return entries_;
  }

  // Sorted ids of every sememe referenced by some sense.
  std::vector<std::string> sememe_ids() const;

  bool has_embeddings() const { return !embeddings_.empty(); }
  std::size_t embedding_dim() const { return dim_; }
  const std::map<std::string, std::vector<double>, std::less<>>& embeddings() const {
    return embeddings_;
  }

  // Throws let::Error listing every referenced sememe without an embedding.
  void require_embeddings() const;

  bool operator==(const KnowledgeBase&) const = default;

 private:
  std::map<std::string, std::vector<Sense>, std::less<>> entries_;
  std::map<std::string, std::vector<double>, std::less<>> embeddings_;
  std::size_t dim_ = 0;
};

}  // namespace let::knowledge
