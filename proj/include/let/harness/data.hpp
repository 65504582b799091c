#pragma once

#include <string>
#include <vector>

#include "let/lattice/lattice.hpp"

namespace let::harness {

struct PairExample {
  lattice::CharSeq text_a;
  lattice::CharSeq text_b;
  int label = 0;
};

// UTF-8 TSV `text_a<TAB>text_b<TAB>label`, LF or CRLF. Blank lines are
// skipped. Throws let::ParseError with the line number on malformed lines.
std::vector<PairExample> load_pairs(const std::string& path);

// Same format without the label column; labels are set to 0.
std::vector<PairExample> load_unlabeled(const std::string& path);

}  // namespace let::harness
