#include "let/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "let/error.hpp"

namespace let::harness {

Metrics compute_metrics(const std::vector<double>& probs, const std::vector<int>& labels) {
  if (probs.empty()) throw Error("metrics: no examples");
  if (probs.size() != labels.size()) {
    throw Error("metrics: " + std::to_string(probs.size()) + " predictions for " +
                std::to_string(labels.size()) + " labels");
  }
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const int pred = probs[i] >= 0.5 ? 1 : 0;
    correct += pred == labels[i];
    tp += pred == 1 && labels[i] == 1;
    fp += pred == 1 && labels[i] == 0;
    fn += pred == 0 && labels[i] == 1;
    const double p = std::clamp(probs[i], 1e-7, 1.0 - 1e-7);
    loss -= labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  Metrics m;
  m.count = probs.size();
  m.accuracy = static_cast<double>(correct) / static_cast<double>(probs.size());
  const double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  m.loss = loss / static_cast<double>(probs.size());
  return m;
}

}  // namespace let::harness
