#include "let/nn/layers.hpp"

#include <vector>

namespace let::nn {

Tensor dropout(const Tensor& x, Context& ctx) {
  if (!ctx.dropout_active()) return x;
  const double keep = 1.0 - ctx.dropout;
  std::vector<double> mask(x.numel());
  for (auto& m : mask) m = uniform01(*ctx.rng) < keep ? 1.0 / keep : 0.0;
  return ad::apply_mask(x, mask);
}

Linear::Linear(ad::ParamStore& store, const std::string& prefix, std::size_t in,
               std::size_t out, bool with_bias)
    : weight(store.weight(prefix + "/w", in, out)) {
  if (with_bias) bias = store.bias(prefix + "/b", out);
}

Tensor Linear::operator()(const Tensor& x) const {
  auto y = ad::matmul(x, weight);
  return bias.numel() ? ad::add_row(y, bias) : y;
}

FeedForward::FeedForward(ad::ParamStore& store, const std::string& prefix,
                         std::size_t in, std::size_t hidden, std::size_t out)
    : first(store, prefix + "/l1", in, hidden),
      second(store, prefix + "/l2", hidden, out) {}

Tensor FeedForward::operator()(const Tensor& x, Context& ctx) const {
  return second(dropout(ad::relu(first(x)), ctx));
}

LayerNorm::LayerNorm(ad::ParamStore& store, const std::string& prefix,
                     std::size_t dim)
    : gamma(store.constant(prefix + "/gamma", dim, 1.0)),
      beta(store.bias(prefix + "/beta", dim)) {}

Tensor LayerNorm::operator()(const Tensor& x) const {
  return ad::layer_norm(x, gamma, beta);
}

Tensor residual_norm(const Tensor& x, const Tensor& fx, const LayerNorm& norm) {
  return norm(ad::add(x, fx));
}

Gru::Gru(ad::ParamStore& store, const std::string& prefix, std::size_t input_dim,
         std::size_t state_dim)
    : input_z(store, prefix + "/wz", input_dim, state_dim),
      input_r(store, prefix + "/wr", input_dim, state_dim),
      input_h(store, prefix + "/wh", input_dim, state_dim),
      state_z(store, prefix + "/uz", state_dim, state_dim, false),
      state_r(store, prefix + "/ur", state_dim, state_dim, false),
      state_h(store, prefix + "/uh", state_dim, state_dim, false) {}

Tensor Gru::operator()(const Tensor& state, const Tensor& input) const {
  using namespace ad;
  auto z = sigmoid(add(input_z(input), state_z(state)));
  auto r = sigmoid(add(input_r(input), state_r(state)));
  auto cand = ad::tanh(add(input_h(input), state_h(mul(r, state))));
  auto keep = mul(z, state);
  auto fresh = mul(sub(ones(z.rows(), z.cols()), z), cand);
  return add(keep, fresh);
}

Tensor ones(std::size_t rows, std::size_t cols) {
  return Tensor::full({rows, cols}, 1.0);
}

}  // namespace let::nn
