#include "let/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "let/error.hpp"
#include "let/rng.hpp"

namespace let::ad {

namespace {

constexpr std::size_t kLadder = 13;

double eval_loss(const std::function<Tensor()>& loss_fn, const std::string& path) {
  NoGradGuard guard;
  const double v = loss_fn().item();
  if (!std::isfinite(v)) {
    throw Error("gradient_check: non-finite loss while perturbing " + path);
  }
  return v;
}

}  // namespace

GradCheckResult gradient_check(const std::function<Tensor()>& loss_fn,
                               const ParamStore& params, std::size_t samples,
                               std::uint64_t seed, double step) {
  std::vector<std::pair<std::string, Tensor>> candidates;
  for (const auto& [path, t] : params.all()) {
    if (t.requires_grad() && t.numel() > 0) candidates.emplace_back(path, t);
  }
  GradCheckResult result;
  if (candidates.empty() || samples == 0) return result;

  for (auto& [_, t] : candidates) t.zero_grad();
  Tensor loss = loss_fn();
  if (!std::isfinite(loss.item())) throw Error("gradient_check: non-finite loss");
  loss.backward();

  std::vector<std::vector<double>> analytic;
  analytic.reserve(candidates.size());
  for (auto& [path, t] : candidates) {
    analytic.push_back(t.grad());
    for (double g : analytic.back()) {
      if (!std::isfinite(g)) {
        throw Error("gradient_check: non-finite gradient in " + path);
      }
    }
  }

  // Loss values carry a few ulps of evaluation noise; the stencil weights
  // sum to 18/12.
  const double round_off =
      8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(loss.item())) * 1.5;

  Rng rng(seed);
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t which = s % candidates.size();
    auto& [path, t] = candidates[which];
    const std::size_t idx = rng() % t.numel();
    auto data = t.mutable_data();
    const double orig = data[idx];
    // Loss at +-step * 2^j, j = 0..kLadder.
    std::vector<double> up(kLadder + 1), down(kLadder + 1);
    for (std::size_t j = 0; j <= kLadder; ++j) {
      const double h = std::ldexp(step, static_cast<int>(j));
      data[idx] = orig + h;
      up[j] = eval_loss(loss_fn, path);
      data[idx] = orig - h;
      down[j] = eval_loss(loss_fn, path);
    }
    data[idx] = orig;
    // Fourth-order central estimate from offsets h and 2h.
    auto estimate = [&](std::size_t j) {
      const double h = std::ldexp(step, static_cast<int>(j));
      return (8 * (up[j] - down[j]) - (up[j + 1] - down[j + 1])) / (12.0 * h);
    };
    // Score each estimate by its worst disagreement with the neighbouring
    // steps plus the cancellation error a step that small can carry; keep
    // the best. Large steps lose to truncation or ReLU kinks, small ones to
    // round-off.
    std::vector<double> e(kLadder);
    for (std::size_t j = 0; j < kLadder; ++j) e[j] = estimate(j);
    double numeric = e[0];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j + 1 < kLadder; ++j) {
      const double h = std::ldexp(step, static_cast<int>(j));
      const double spread = std::max(std::fabs(e[j] - e[j - 1]), std::fabs(e[j] - e[j + 1]));
      const double score = spread + round_off / h;
      if (score < best) {
        best = score;
        numeric = e[j];
      }
    }
    const double a = analytic[which][idx];
    const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
    const double rel = std::fabs(a - numeric) / denom;
    ++result.coordinates;
    if (rel > result.max_rel_error || result.worst_path.empty()) {
      result.max_rel_error = std::max(rel, result.max_rel_error);
      result.worst_path = path;
      result.worst_index = idx;
      result.worst_analytic = a;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

}  // namespace let::ad
