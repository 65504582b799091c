#include "let/lattice/lattice.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <ostream>

#include "let/error.hpp"

namespace let::lattice {

CharSeq decode_utf8(std::string_view bytes) {
  CharSeq out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  auto fail = [&](const char* why) {
    throw ParseError("invalid UTF-8 at byte " + std::to_string(i) + ": " + why);
  };
  while (i < bytes.size()) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    std::size_t extra;
    char32_t cp;
    if (b0 < 0x80) {
      extra = 0;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      extra = 1;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      extra = 2;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      extra = 3;
      cp = b0 & 0x07;
    } else {
      fail("bad lead byte");
    }
    if (i + extra >= bytes.size()) fail("truncated sequence");
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto b = static_cast<unsigned char>(bytes[i + k]);
      if ((b & 0xC0) != 0x80) fail("bad continuation byte");
      cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr char32_t min_for[] = {0, 0x80, 0x800, 0x10000};
    if (cp < min_for[extra]) fail("overlong encoding");
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) fail("not a scalar value");
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string encode_utf8(std::u32string_view chars) {
  std::string out;
  out.reserve(chars.size());
  for (char32_t cp : chars) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

Dictionary::Dictionary(const std::vector<std::string>& words) {
  for (const auto& w : words) insert(decode_utf8(w));
}

Dictionary Dictionary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dictionary: " + path);
  Dictionary dict;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                             line.back() == '\t')) {
      line.pop_back();
    }
    if (line.empty() || line.front() == '#') continue;
    dict.insert(decode_utf8(line));
  }
  return dict;
}

void Dictionary::insert(CharSeq word) {
  if (word.empty()) return;
  max_len_ = std::max(max_len_, word.size());
  words_.insert(std::move(word));
}

bool Dictionary::contains(std::u32string_view word) const {
  return words_.count(CharSeq(word)) != 0;
}

Strategy parse_strategy(std::string_view name) {
  if (name == "fmm") return Strategy::ForwardMaxMatch;
  if (name == "bmm") return Strategy::BackwardMaxMatch;
  if (name == "shortest") return Strategy::ShortestPath;
  throw Error("unknown segmentation strategy: " + std::string(name));
}

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::ForwardMaxMatch: return "fmm";
    case Strategy::BackwardMaxMatch: return "bmm";
    case Strategy::ShortestPath: return "shortest";
  }
  return "?";
}

namespace {

WordNode make_word(const CharSeq& text, std::size_t begin0, std::size_t len) {
  return WordNode{0, begin0 + 1, begin0 + len, text.substr(begin0, len)};
}

bool is_word(const CharSeq& text, const Dictionary& dict, std::size_t begin0,
             std::size_t len) {
  return len == 1 || dict.contains(std::u32string_view(text).substr(begin0, len));
}

SegPath forward_max_match(const CharSeq& text, const Dictionary& dict) {
  SegPath path;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = std::min(dict.max_length(), text.size() - i);
    while (len > 1 && !is_word(text, dict, i, len)) --len;
    len = std::max<std::size_t>(len, 1);
    path.push_back(make_word(text, i, len));
    i += len;
  }
  return path;
}

SegPath backward_max_match(const CharSeq& text, const Dictionary& dict) {
  SegPath path;
  std::size_t j = text.size();
  while (j > 0) {
    std::size_t len = std::min(dict.max_length(), j);
    while (len > 1 && !is_word(text, dict, j - len, len)) --len;
    len = std::max<std::size_t>(len, 1);
    path.push_back(make_word(text, j - len, len));
    j -= len;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

// Fewest words; among equally short segmentations, take the longest word at
// each position from the left.
SegPath shortest_path(const CharSeq& text, const Dictionary& dict) {
  const std::size_t n = text.size();
  std::vector<std::size_t> best(n + 1, 0);
  std::vector<std::size_t> choice(n, 1);
  for (std::size_t i = n; i-- > 0;) {
    best[i] = best[i + 1] + 1;
    choice[i] = 1;
    const std::size_t longest = std::min(dict.max_length(), n - i);
    for (std::size_t len = longest; len >= 2; --len) {
      if (!is_word(text, dict, i, len)) continue;
      if (1 + best[i + len] < best[i] ||
          (1 + best[i + len] == best[i] && len > choice[i])) {
        best[i] = 1 + best[i + len];
        choice[i] = len;
      }
    }
  }
  SegPath path;
  for (std::size_t i = 0; i < n; i += choice[i]) {
    path.push_back(make_word(text, i, choice[i]));
  }
  return path;
}

std::string span_str(const WordNode& w) {
  return "[" + std::to_string(w.start) + ", " + std::to_string(w.end) + "]";
}

}  // namespace

SegPath segment(const CharSeq& text, const Dictionary& dict, Strategy strategy) {
  SegPath path;
  switch (strategy) {
    case Strategy::ForwardMaxMatch: path = forward_max_match(text, dict); break;
    case Strategy::BackwardMaxMatch: path = backward_max_match(text, dict); break;
    case Strategy::ShortestPath: path = shortest_path(text, dict); break;
  }
  for (std::size_t i = 0; i < path.size(); ++i) path[i].id = i;
  return path;
}

Reachability compute_reachability(
    std::size_t node_count,
    const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::vector<std::size_t>> succ(node_count), pred(node_count);
  std::vector<std::size_t> indegree(node_count, 0);
  for (auto [from, to] : edges) {
    if (from >= node_count || to >= node_count) {
      throw Error("reachability: edge references a missing node");
    }
    succ[from].push_back(to);
    pred[to].push_back(from);
    ++indegree[to];
  }
  // Kahn's algorithm; anything left unvisited lies on a cycle.
  std::vector<std::size_t> topo;
  std::deque<std::size_t> ready;
  for (std::size_t v = 0; v < node_count; ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  while (!ready.empty()) {
    const auto v = ready.front();
    ready.pop_front();
    topo.push_back(v);
    for (auto w : succ[v]) {
      if (--indegree[w] == 0) ready.push_back(w);
    }
  }
  if (topo.size() != node_count) {
    throw Error("reachability: lattice contains a cycle");
  }

  std::vector<std::vector<bool>> fw(node_count, std::vector<bool>(node_count));
  std::vector<std::vector<bool>> bw(node_count, std::vector<bool>(node_count));
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const auto v = *it;
    fw[v][v] = true;
    for (auto w : succ[v]) {
      for (std::size_t k = 0; k < node_count; ++k) {
        if (fw[w][k]) fw[v][k] = true;
      }
    }
  }
  for (auto v : topo) {
    bw[v][v] = true;
    for (auto u : pred[v]) {
      for (std::size_t k = 0; k < node_count; ++k) {
        if (bw[u][k]) bw[v][k] = true;
      }
    }
  }
  Reachability r;
  r.forward.resize(node_count);
  r.backward.resize(node_count);
  for (std::size_t v = 0; v < node_count; ++v) {
    for (std::size_t k = 0; k < node_count; ++k) {
      if (fw[v][k]) r.forward[v].push_back(k);
      if (bw[v][k]) r.backward[v].push_back(k);
    }
  }
  return r;
}

LatticeGraph build_lattice(const CharSeq& text, const std::vector<SegPath>& paths) {
  std::map<std::pair<std::size_t, std::size_t>, CharSeq> spans;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const std::string where = "segmentation path " + std::to_string(p);
    std::size_t next = 1;
    for (const auto& w : paths[p]) {
      if (w.start < next) {
        throw Error(where + " overlaps at span " + span_str(w));
      }
      if (w.start > next) {
        throw Error(where + " leaves a gap before span " + span_str(w));
      }
      if (w.end < w.start || w.end > text.size()) {
        throw Error(where + " has out-of-range span " + span_str(w));
      }
      if (w.surface != text.substr(w.start - 1, w.length())) {
        throw Error(where + " surface does not match text at span " + span_str(w));
      }
      spans.emplace(std::make_pair(w.start, w.end), w.surface);
      next = w.end + 1;
    }
    if (next != text.size() + 1) {
      throw Error(where + " stops at character " + std::to_string(next - 1) +
                  " of " + std::to_string(text.size()));
    }
  }

  LatticeGraph g;
  g.text_ = text;
  for (const auto& [span, surface] : spans) {
    g.nodes_.push_back(WordNode{g.nodes_.size(), span.first, span.second, surface});
  }
  for (const auto& a : g.nodes_) {
    for (const auto& b : g.nodes_) {
      if (a.end + 1 == b.start) g.edges_.emplace_back(a.id, b.id);
    }
  }
  g.reach_ = compute_reachability(g.nodes_.size(), g.edges_);
  g.covering_.resize(text.size());
  for (const auto& w : g.nodes_) {
    for (std::size_t t = w.start; t <= w.end; ++t) g.covering_[t - 1].push_back(w.id);
  }
  return g;
}

void write_dot(std::ostream& os, const LatticeGraph& g) {
  os << "digraph lattice {\n  rankdir=LR;\n";
  for (const auto& w : g.nodes()) {
    std::string label;
    for (char c : encode_utf8(w.surface)) {
      if (c == '"' || c == '\\') label.push_back('\\');
      label.push_back(c);
    }
    os << "  n" << w.id << " [label=\"" << label << " ["
       << w.start << "," << w.end << "]\"];\n";
  }
  for (auto [a, b] : g.edges()) os << "  n" << a << " -> n" << b << ";\n";
  os << "}\n";
}

}  // namespace let::lattice
