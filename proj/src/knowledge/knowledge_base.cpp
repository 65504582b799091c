#include "let/knowledge/knowledge_base.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "let/error.hpp"

namespace let::knowledge {

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    const auto pos = s.find(sep, begin);
    out.emplace_back(s.substr(begin, pos - begin));
    if (pos == std::string_view::npos) break;
    begin = pos + 1;
  }
  return out;
}

bool skip_line(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line.empty() || line.front() == '#';
}

std::string where(const std::string& path, std::size_t line_no) {
  return path + ":" + std::to_string(line_no) + ": ";
}

}  // namespace

KnowledgeBase KnowledgeBase::load(const std::string& kb_path,
                                  const std::string& emb_path) {
  KnowledgeBase kb;
  std::ifstream in(kb_path);
  if (!in) throw Error("cannot open knowledge base: " + kb_path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw ParseError(where(kb_path, line_no) + "expected 3 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw ParseError(where(kb_path, line_no) + "empty word or sense id");
    }
    Sense sense{fields[1], {}};
    for (auto& s : split(fields[2], ',')) {
      if (!s.empty()) sense.sememes.push_back(std::move(s));
    }
    if (sense.sememes.empty()) {
      throw ParseError(where(kb_path, line_no) + "sense " + fields[1] + " has no sememes");
    }
    kb.add_sense(fields[0], std::move(sense));
  }

  if (emb_path.empty()) return kb;
  std::ifstream emb(emb_path);
  if (!emb) throw Error("cannot open sememe embeddings: " + emb_path);
  line_no = 0;
  while (std::getline(emb, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError(where(emb_path, line_no) + "expected sememe_id<TAB>values");
    }
    std::vector<double> values;
    std::istringstream nums(line.substr(tab + 1));
    std::string tok;
    while (nums >> tok) {
      double v = 0.0;
      const auto* end = tok.data() + tok.size();
      auto [ptr, ec] = std::from_chars(tok.data(), end, v);
      if (ec != std::errc() || ptr != end) {
        throw ParseError(where(emb_path, line_no) + "bad number '" + tok + "'");
      }
      values.push_back(v);
    }
    if (values.empty()) throw ParseError(where(emb_path, line_no) + "empty embedding");
    if (kb.dim_ != 0 && values.size() != kb.dim_) {
      throw Error(where(emb_path, line_no) + "embedding dimension " +
                  std::to_string(values.size()) + " differs from " +
                  std::to_string(kb.dim_));
    }
    kb.set_embedding(line.substr(0, tab), std::move(values));
  }
  kb.require_embeddings();
  return kb;
}

void KnowledgeBase::save(const std::string& kb_path, const std::string& emb_path) const {
  std::ofstream out(kb_path);
  if (!out) throw Error("cannot write knowledge base: " + kb_path);
  for (const auto& [word, senses] : entries_) {
    for (const auto& s : senses) {
      out << word << '\t' << s.sense_id << '\t';
      for (std::size_t i = 0; i < s.sememes.size(); ++i) {
        out << (i ? "," : "") << s.sememes[i];
      }
      out << '\n';
    }
  }
  if (emb_path.empty()) return;
  std::ofstream emb(emb_path);
  if (!emb) throw Error("cannot write sememe embeddings: " + emb_path);
  char buf[32];
  for (const auto& [id, values] : embeddings_) {
    emb << id << '\t';
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", values[i]);
      emb << (i ? " " : "") << buf;
    }
    emb << '\n';
  }
}

void KnowledgeBase::add_sense(const std::string& word, Sense sense) {
  if (sense.sememes.empty()) throw Error("sense " + sense.sense_id + " has no sememes");
  entries_[word].push_back(std::move(sense));
}

void KnowledgeBase::set_embedding(const std::string& sememe, std::vector<double> values) {
  if (dim_ != 0 && values.size() != dim_) {
    throw Error("embedding for " + sememe + " has dimension " +
                std::to_string(values.size()) + ", expected " + std::to_string(dim_));
  }
  dim_ = values.size();
  embeddings_[sememe] = std::move(values);
}

const std::vector<Sense>& KnowledgeBase::lookup(std::string_view word) const {
  static const std::vector<Sense> none;
  auto it = entries_.find(word);
  return it == entries_.end() ? none : it->second;
}

std::size_t KnowledgeBase::max_senses() const {
  std::size_t k = 0;
  for (const auto& [_, senses] : entries_) k = std::max(k, senses.size());
  return k;
}

std::vector<std::string> KnowledgeBase::sememe_ids() const {
  std::set<std::string> ids;
  for (const auto& [_, senses] : entries_) {
    for (const auto& s : senses) ids.insert(s.sememes.begin(), s.sememes.end());
  }
  return {ids.begin(), ids.end()};
}

void KnowledgeBase::require_embeddings() const {
  std::string missing;
  for (const auto& id : sememe_ids()) {
    if (!embeddings_.count(id)) missing += (missing.empty() ? "" : ", ") + id;
  }
  if (!missing.empty()) throw Error("sememes without embeddings: " + missing);
}

}  // namespace let::knowledge
