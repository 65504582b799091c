#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "let/autodiff/params.hpp"

namespace let::harness {

// s <- rho s + (1 - rho) g^2;  theta <- theta - lr g / sqrt(s + eps).
class RmsProp {
 public:
  explicit RmsProp(double rho = 0.9, double eps = 1e-8) : rho_(rho), eps_(eps) {}

  // Updates every requires_grad tensor of `params` from its gradient. The
  // learning rate of each tensor is lr * lr_scale(path) when lr_scale is set.
  // Throws let::Error naming the path on a non-finite gradient, before any
  // tensor is modified.
  void step(ad::ParamStore& params, double lr,
            const std::function<double(const std::string&)>& lr_scale = {});

  const std::map<std::string, std::vector<double>>& state() const { return state_; }

 private:
  double rho_;
  double eps_;
  std::map<std::string, std::vector<double>> state_;
};

// Linear warmup from 0 to base_lr over ceil(warmup_ratio * total) steps,
// then linear decay to 0 at `total`. Steps are 1-indexed; step <= 0 or
// step >= total gives 0.
double lr_schedule(long step, long total, double base_lr, double warmup_ratio);

}  // namespace let::harness
