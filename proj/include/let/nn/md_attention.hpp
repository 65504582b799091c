#pragma once

// Multi-dimensional graph attention (MD-GAT) and attentive pooling.
//
// MD-GAT for a query h_i over neighbors {h_j}:
//   score_ij   = (Wq h_i).(Wk h_j)                 scalar, unscaled
//   alpha_ij   = MD-softmax_j(score_ij + f_m(h_j))  one weight per feature
//   f_m(h)     = W2 relu(W1 h + b1) + b2
//   out_i      = relu(sum_j alpha_ij * (W h_j))
// Attentive pooling of {c_k}:
//   u_k = MD-softmax_k(FFN(c_k)),  out = sum_k u_k * c_k

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "let/nn/layers.hpp"

namespace let::nn {

// Softmax over rows, separately for every feature column. Throws let::Error
// for an empty input.
Tensor md_softmax(const Tensor& scores);

// Per-neighbor projections that do not depend on the query; compute once
// when many queries attend over subsets of the same rows.
struct MdGatMemory {
  Tensor keys;            // N Wk
  Tensor values;          // N W
  Tensor feature_scores;  // f_m(N)
  std::size_t size() const { return keys.rows(); }
};

class MdGat {
 public:
  MdGat() = default;
  MdGat(ad::ParamStore& store, const std::string& prefix, std::size_t dim);

  MdGatMemory memory(const Tensor& neighbors, Context& ctx) const;

  // queries [m, d] each attend over the memory rows in `rows` (all rows when
  // empty) -> [m, d]. When `weights` is given it receives one [n, d] weight
  // matrix per query.
  Tensor attend(const Tensor& queries, const MdGatMemory& mem,
                std::span<const std::size_t> rows, Context& ctx,
                std::vector<Tensor>* weights = nullptr) const;

  // Convenience: every query attends over all of `neighbors`.
  Tensor operator()(const Tensor& queries, const Tensor& neighbors, Context& ctx,
                    std::vector<Tensor>* weights = nullptr) const;

  std::size_t dim() const { return project_q_.rows(); }

  Tensor project_q_, project_k_, project_v_;  // [d, d], no bias
  FeedForward feature_net_;                   // f_m, hidden width d
};

class AttPooling {
 public:
  AttPooling() = default;
  AttPooling(ad::ParamStore& store, const std::string& prefix, std::size_t dim);

  // items [n, d] -> [1, d]. Throws let::Error when n == 0.
  Tensor operator()(const Tensor& items, Context& ctx) const;

  // One pooled row per group of item indices -> [groups, d]. The score FFN
  // runs once over all items.
  Tensor pool_groups(const Tensor& items,
                     const std::vector<std::vector<std::size_t>>& groups,
                     Context& ctx) const;

  FeedForward score_net_;
};

}  // namespace let::nn
