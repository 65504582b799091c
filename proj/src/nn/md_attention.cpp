#include "let/nn/md_attention.hpp"

#include <numeric>

#include "let/error.hpp"

namespace let::nn {

using namespace ad;

Tensor md_softmax(const Tensor& scores) {
  if (scores.rank() != 2 || scores.rows() == 0) {
    throw Error("md_softmax: empty score set (the neighbor set must include the node itself)");
  }
  return softmax(scores, 0);
}

MdGat::MdGat(ParamStore& store, const std::string& prefix, std::size_t dim)
    : project_q_(store.weight(prefix + "/wq", dim, dim)),
      project_k_(store.weight(prefix + "/wk", dim, dim)),
      project_v_(store.weight(prefix + "/w", dim, dim)),
      feature_net_(store, prefix + "/fm", dim, dim, dim) {}

MdGatMemory MdGat::memory(const Tensor& neighbors, Context& ctx) const {
  if (neighbors.rank() != 2 || neighbors.cols() != dim()) {
    throw ShapeError("md_gat: neighbors of shape " + shape_str(neighbors.shape()) +
                     " do not match dimension " + std::to_string(dim()));
  }
  return MdGatMemory{matmul(neighbors, project_k_), matmul(neighbors, project_v_),
                     feature_net_(neighbors, ctx)};
}

Tensor MdGat::attend(const Tensor& queries, const MdGatMemory& mem,
                     std::span<const std::size_t> rows, Context& ctx,
                     std::vector<Tensor>* weights) const {
  if (queries.rank() != 2 || queries.cols() != dim()) {
    throw ShapeError("md_gat: queries of shape " + shape_str(queries.shape()) +
                     " do not match dimension " + std::to_string(dim()));
  }
  Tensor keys = mem.keys, values = mem.values, feats = mem.feature_scores;
  if (!rows.empty()) {
    keys = gather_rows(keys, rows);
    values = gather_rows(values, rows);
    feats = gather_rows(feats, rows);
  }
  if (keys.rows() == 0) throw Error("md_gat: empty neighbor set");
  const std::size_t d = dim();
  // [m, n] pairwise scores, one scalar per (query, neighbor).
  auto pair_scores = matmul(matmul(queries, project_q_), transpose(keys));
  auto spread = ones(1, d);
  std::vector<Tensor> outputs;
  outputs.reserve(queries.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    auto column = transpose(slice(pair_scores, 0, i, i + 1));  // [n, 1]
    auto alpha = md_softmax(add(matmul(column, spread), feats));
    if (weights) weights->push_back(alpha);
    outputs.push_back(sum(mul(alpha, values), 0));
  }
  auto out = outputs.size() == 1 ? outputs.front() : concat(outputs, 0);
  return dropout(relu(out), ctx);
}

Tensor MdGat::operator()(const Tensor& queries, const Tensor& neighbors, Context& ctx,
                         std::vector<Tensor>* weights) const {
  return attend(queries, memory(neighbors, ctx), {}, ctx, weights);
}

AttPooling::AttPooling(ParamStore& store, const std::string& prefix, std::size_t dim)
    : score_net_(store, prefix + "/ffn", dim, dim, dim) {}

Tensor AttPooling::operator()(const Tensor& items, Context& ctx) const {
  if (items.rank() != 2 || items.rows() == 0) throw Error("att_pooling: empty item set");
  auto u = md_softmax(score_net_(items, ctx));
  return sum(mul(u, items), 0);
}

Tensor AttPooling::pool_groups(const Tensor& items,
                               const std::vector<std::vector<std::size_t>>& groups,
                               Context& ctx) const {
  if (groups.empty()) throw Error("att_pooling: no groups");
  auto scores = score_net_(items, ctx);
  std::vector<Tensor> pooled;
  pooled.reserve(groups.size());
  for (const auto& g : groups) {
    if (g.empty()) throw Error("att_pooling: empty item set");
    auto u = md_softmax(gather_rows(scores, g));
    pooled.push_back(sum(mul(u, gather_rows(items, g)), 0));
  }
  return pooled.size() == 1 ? pooled.front() : concat(pooled, 0);
}

}  // namespace let::nn
