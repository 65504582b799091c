#include "let/autodiff/params.hpp"

#include <cmath>

#include "let/error.hpp"
#include "let/rng.hpp"

namespace let::ad {

Tensor ParamStore::weight(const std::string& path, std::size_t rows,
                          std::size_t cols) {
  return uniform(path, rows, cols, 1.0 / std::sqrt(static_cast<double>(rows)));
}

Tensor ParamStore::bias(const std::string& path, std::size_t cols) {
  return adopt(path, Tensor::zeros({1, cols}, true));
}

Tensor ParamStore::constant(const std::string& path, std::size_t cols,
                            double value) {
  return adopt(path, Tensor::full({1, cols}, value, true));
}

Tensor ParamStore::uniform(const std::string& path, std::size_t rows,
                           std::size_t cols, double bound) {
  Rng rng(derive_seed(seed_, path));
  std::vector<double> data(rows * cols);
  for (auto& v : data) v = let::uniform(rng, -bound, bound);
  return adopt(path, Tensor({rows, cols}, std::move(data), true));
}

Tensor ParamStore::adopt(const std::string& path, Tensor tensor) {
  auto [it, inserted] = params_.emplace(path, tensor);
  if (!inserted) throw Error("parameter registered twice: " + path);
  return it->second;
}

bool ParamStore::contains(const std::string& path) const {
  return params_.count(path) != 0;
}

const Tensor& ParamStore::get(const std::string& path) const {
  auto it = params_.find(path);
  if (it == params_.end()) throw Error("unknown parameter: " + path);
  return it->second;
}

std::size_t ParamStore::total_values() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

}  // namespace let::ad
