#include "let/harness/optim.hpp"

#include <cmath>

#include "let/error.hpp"

namespace let::harness {

void RmsProp::step(ad::ParamStore& params, double lr,
                   const std::function<double(const std::string&)>& lr_scale) {
  std::vector<std::pair<const std::string*, std::vector<double>>> grads;
  for (const auto& [path, t] : params.all()) {
    if (!t.requires_grad()) continue;
    auto g = t.grad();
    for (double v : g) {
      if (!std::isfinite(v)) throw Error("rmsprop: non-finite gradient in " + path);
    }
    grads.emplace_back(&path, std::move(g));
  }
  for (auto& [path, g] : grads) {
    auto t = params.get(*path);
    auto& s = state_[*path];
    if (s.empty()) s.assign(g.size(), 0.0);
    const double rate = lr_scale ? lr * lr_scale(*path) : lr;
    auto data = t.mutable_data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      s[i] = rho_ * s[i] + (1.0 - rho_) * g[i] * g[i];
      data[i] -= rate * g[i] / std::sqrt(s[i] + eps_);
    }
  }
}

double lr_schedule(long step, long total, double base_lr, double warmup_ratio) {
  if (total <= 0 || step <= 0 || step >= total) return 0.0;
  const long warmup = static_cast<long>(std::ceil(warmup_ratio * static_cast<double>(total)));
  if (step <= warmup) return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
  return base_lr * static_cast<double>(total - step) / static_cast<double>(total - warmup);
}

}  // namespace let::harness
