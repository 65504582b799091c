#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "let/autodiff/tensor.hpp"

namespace let::ad {

// Ordered collection of learnable tensors addressed by slash-separated path
// (e.g. "sagt/0/sense_fw/wq"). Iteration order is lexicographic by path, so
// checkpoints and optimizer state do not depend on construction order.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // uniform(+-1/sqrt(rows)) for a [rows, cols] weight used as x * W.
  Tensor weight(const std::string& path, std::size_t rows, std::size_t cols);
  Tensor bias(const std::string& path, std::size_t cols);
  Tensor constant(const std::string& path, std::size_t cols, double value);
  // uniform(+-bound), e.g. embedding tables.
  Tensor uniform(const std::string& path, std::size_t rows, std::size_t cols,
                 double bound);
  // Registers an existing tensor under `path`; throws on duplicates.
  Tensor adopt(const std::string& path, Tensor tensor);

  bool contains(const std::string& path) const;
  const Tensor& get(const std::string& path) const;
  const std::map<std::string, Tensor>& all() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t total_values() const;

  void zero_grad();

 private:
  std::uint64_t seed_;
  std::map<std::string, Tensor> params_;
};

}  // namespace let::ad
