#pragma once

// Word lattices over a character sequence. Spans are 1-based and inclusive:
// a node [start, end] covers characters text[start - 1 .. end - 1].

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace let::lattice {

using CharSeq = std::u32string;

// Throws let::ParseError on malformed UTF-8.
CharSeq decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view chars);

struct WordNode {
  std::size_t id = 0;
  std::size_t start = 0;
  std::size_t end = 0;
  CharSeq surface;

  std::size_t length() const { return end - start + 1; }
  bool contains(std::size_t t) const { return start <= t && t <= end; }
};

using SegPath = std::vector<WordNode>;

class Dictionary {
 public:
  Dictionary() = default;
  explicit Dictionary(const std::vector<std::string>& words);

  // One word per line, UTF-8; blank lines and lines starting with '#' are
  // skipped.
  static Dictionary load(const std::string& path);

  void insert(CharSeq word);
  bool contains(std::u32string_view word) const;
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  std::size_t max_length() const { return max_len_; }

 private:
  std::unordered_set<CharSeq> words_;
  std::size_t max_len_ = 0;
};

enum class Strategy { ForwardMaxMatch, BackwardMaxMatch, ShortestPath };

// "fmm", "bmm" or "shortest".
Strategy parse_strategy(std::string_view name);
std::string_view strategy_name(Strategy s);

// Always total: a character not starting any dictionary word becomes a
// single-character word.
SegPath segment(const CharSeq& text, const Dictionary& dict, Strategy strategy);

struct Reachability {
  std::vector<std::vector<std::size_t>> forward;   // sorted, includes self
  std::vector<std::vector<std::size_t>> backward;  // sorted, includes self
};

// Throws let::Error when the edge set contains a cycle.
Reachability compute_reachability(
    std::size_t node_count,
    const std::vector<std::pair<std::size_t, std::size_t>>& edges);

class LatticeGraph {
 public:
  LatticeGraph() = default;

  std::size_t text_length() const { return text_.size(); }
  const CharSeq& text() const { return text_; }
  const std::vector<WordNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const {
    return edges_;
  }
  const std::vector<std::size_t>& fw_reach(std::size_t node) const {
    return reach_.forward[node];
  }
  const std::vector<std::size_t>& bw_reach(std::size_t node) const {
    return reach_.backward[node];
  }
  // Ids of nodes whose span contains character t (1-based), ascending.
  const std::vector<std::size_t>& covering(std::size_t t) const {
    return covering_[t - 1];
  }

 private:
  friend LatticeGraph build_lattice(const CharSeq&, const std::vector<SegPath>&);

  CharSeq text_;
  std::vector<WordNode> nodes_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  Reachability reach_;
  std::vector<std::vector<std::size_t>> covering_;
};

// Union of the paths' nodes, deduplicated by span and ordered by
// (start, end). Throws let::Error naming the span where a path leaves a gap,
// overlaps, or runs past the text.
LatticeGraph build_lattice(const CharSeq& text, const std::vector<SegPath>& paths);

// Graphviz rendering for debugging.
void write_dot(std::ostream& os, const LatticeGraph& g);

}  // namespace let::lattice
