#include "let/harness/data.hpp"

#include <fstream>

#include "let/error.hpp"

namespace let::harness {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::vector<PairExample> read(const std::string& path, bool labeled) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open pairs file: " + path);
  std::vector<PairExample> out;
  std::string line;
  std::size_t line_no = 0;
  const std::size_t want = labeled ? 3 : 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = path + ":" + std::to_string(line_no) + ": ";
    auto cols = split_tabs(line);
    if (cols.size() != want) {
      throw ParseError(where + "expected " + std::to_string(want) + " tab-separated fields, got " +
                       std::to_string(cols.size()));
    }
    PairExample ex;
    try {
      ex.text_a = lattice::decode_utf8(cols[0]);
      ex.text_b = lattice::decode_utf8(cols[1]);
    } catch (const ParseError& e) {
      throw ParseError(where + e.what());
    }
    if (ex.text_a.empty() || ex.text_b.empty()) throw ParseError(where + "empty sentence");
    if (labeled) {
      if (cols[2] == "0") {
        ex.label = 0;
      } else if (cols[2] == "1") {
        ex.label = 1;
      } else {
        throw ParseError(where + "label must be 0 or 1, got '" + cols[2] + "'");
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

std::vector<PairExample> load_pairs(const std::string& path) { return read(path, true); }

std::vector<PairExample> load_unlabeled(const std::string& path) { return read(path, false); }

}  // namespace let::harness
