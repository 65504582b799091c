#pragma once

#include <cstddef>
#include <string>

#include "let/autodiff/ops.hpp"
#include "let/autodiff/params.hpp"
#include "let/rng.hpp"

namespace let::nn {

using ad::Tensor;

// Per-forward settings. Dropout is active only when training with a rate > 0
// and an RNG to draw masks from.
struct Context {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;

  bool dropout_active() const { return training && dropout > 0.0 && rng; }
};

// Inverted dropout: kept units are scaled by 1 / (1 - rate).
Tensor dropout(const Tensor& x, Context& ctx);

// x * W + b with W stored [in, out].
struct Linear {
  Tensor weight;
  Tensor bias;

  Linear() = default;
  Linear(ad::ParamStore& store, const std::string& prefix, std::size_t in,
         std::size_t out, bool with_bias = true);

  Tensor operator()(const Tensor& x) const;
  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
};

// Two layers with ReLU in between; dropout on the hidden activations.
struct FeedForward {
  Linear first;
  Linear second;

  FeedForward() = default;
  FeedForward(ad::ParamStore& store, const std::string& prefix, std::size_t in,
              std::size_t hidden, std::size_t out);

  Tensor operator()(const Tensor& x, Context& ctx) const;
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  LayerNorm() = default;
  LayerNorm(ad::ParamStore& store, const std::string& prefix, std::size_t dim);

  Tensor operator()(const Tensor& x) const;
};

// LayerNorm(x + f(x)).
Tensor residual_norm(const Tensor& x, const Tensor& fx, const LayerNorm& norm);

// Gated recurrent unit (Cho et al. 2014):
//   z = sigmoid(x Wz + h Uz + bz)
//   r = sigmoid(x Wr + h Ur + br)
//   c = tanh(x Wh + (r * h) Uh + bh)
//   h' = z * h + (1 - z) * c
// Rows are independent, so a whole set of states updates in one call.
struct Gru {
  Linear input_z, input_r, input_h;     // [in, d] with bias
  Linear state_z, state_r, state_h;     // [d, d] without bias

  Gru() = default;
  Gru(ad::ParamStore& store, const std::string& prefix, std::size_t input_dim,
      std::size_t state_dim);

  Tensor operator()(const Tensor& state, const Tensor& input) const;
};

// Constant [rows, cols] tensor of ones (no gradient).
Tensor ones(std::size_t rows, std::size_t cols);

}  // namespace let::nn
