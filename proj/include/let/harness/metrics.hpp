#pragma once

#include <vector>

namespace let::harness {

struct Metrics {
  double accuracy = 0.0;
  double f1 = 0.0;  // positive class; 0 when precision + recall is 0
  double loss = 0.0;  // mean binary cross-entropy
  std::size_t count = 0;
};

// Threshold 0.5. Throws let::Error on empty input or size mismatch.
Metrics compute_metrics(const std::vector<double>& probs, const std::vector<int>& labels);

}  // namespace let::harness
