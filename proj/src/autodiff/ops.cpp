#include "let/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "let/error.hpp"

namespace let::ad {

namespace {

using detail::Node;
using Backward = std::function<void(Node&)>;

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " +
                   shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail(op, a, b);
}

void require_rank2(const char* op, const Tensor& a) {
  if (a.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got shape " +
                     shape_str(a.shape()));
  }
}

void require_axis(const char* op, int axis) {
  if (axis != 0 && axis != 1) {
    throw ShapeError(std::string(op) + ": axis must be 0 or 1, got " +
                     std::to_string(axis));
  }
}

Tensor make(const char* op, Shape shape, std::vector<double> value,
            std::initializer_list<Tensor> inputs, Backward backward) {
  Tensor out(std::move(shape), std::move(value));
  if (!grad_enabled()) return out;
  bool any = false;
  for (const auto& t : inputs) any = any || t.requires_grad();
  if (!any) return out;
  auto& node = *out.node();
  node.op = op;
  node.requires_grad = true;
  for (const auto& t : inputs) node.inputs.push_back(t.node());
  node.backward = std::move(backward);
  return out;
}

Tensor make_n(const char* op, Shape shape, std::vector<double> value,
              std::span<const Tensor> inputs, Backward backward) {
  Tensor out(std::move(shape), std::move(value));
  if (!grad_enabled()) return out;
  bool any = false;
  for (const auto& t : inputs) any = any || t.requires_grad();
  if (!any) return out;
  auto& node = *out.node();
  node.op = op;
  node.requires_grad = true;
  for (const auto& t : inputs) node.inputs.push_back(t.node());
  node.backward = std::move(backward);
  return out;
}

// Shared machinery for ops of the form y = f(x) with dy/dx = g(x, y).
template <typename Fwd, typename Deriv>
Tensor unary(const char* op, const Tensor& a, Fwd fwd, Deriv deriv) {
  std::vector<double> out(a.numel());
  auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  return make(op, a.shape(), std::move(out), {a}, [deriv](Node& self) {
    Node& x = *self.inputs[0];
    if (!x.requires_grad) return;
    auto& g = x.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * deriv(x.value[i], self.value[i]);
    }
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) shape_fail("matmul", a, b);
  std::vector<double> out(m * n, 0.0);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double s = av[i * k + p];
      if (s == 0.0) continue;
      const double* brow = &bv[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += s * brow[j];
    }
  }
  return make("matmul", {m, n}, std::move(out), {a, b},
              [m, k, n](Node& self) {
                Node& A = *self.inputs[0];
                Node& B = *self.inputs[1];
                const auto& g = self.grad;
                if (A.requires_grad) {
                  auto& ga = A.grad_buffer();
                  for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                      double acc = 0.0;
                      for (std::size_t j = 0; j < n; ++j) {
                        acc += g[i * n + j] * B.value[p * n + j];
                      }
                      ga[i * k + p] += acc;
                    }
                  }
                }
                if (B.requires_grad) {
                  auto& gb = B.grad_buffer();
                  for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                      const double s = A.value[i * k + p];
                      if (s == 0.0) continue;
                      for (std::size_t j = 0; j < n; ++j) {
                        gb[p * n + j] += s * g[i * n + j];
                      }
                    }
                  }
                }
              });
}

Tensor transpose(const Tensor& a) {
  require_rank2("transpose", a);
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  auto av = a.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  }
  return make("transpose", {n, m}, std::move(out), {a}, [m, n](Node& self) {
    Node& A = *self.inputs[0];
    if (!A.requires_grad) return;
    auto& g = A.grad_buffer();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same("add", a, b);
  std::vector<double> out(a.numel());
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make("add", a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (int s = 0; s < 2; ++s) {
      Node& x = *self.inputs[s];
      if (!x.requires_grad) continue;
      auto& g = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same("sub", a, b);
  std::vector<double> out(a.numel());
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make("sub", a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (int s = 0; s < 2; ++s) {
      Node& x = *self.inputs[s];
      if (!x.requires_grad) continue;
      const double sign = s == 0 ? 1.0 : -1.0;
      auto& g = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same("mul", a, b);
  std::vector<double> out(a.numel());
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make("mul", a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& A = *self.inputs[0];
    Node& B = *self.inputs[1];
    if (A.requires_grad) {
      auto& g = A.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * B.value[i];
    }
    if (B.requires_grad) {
      auto& g = B.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * A.value[i];
    }
  });
}

Tensor add_row(const Tensor& a, const Tensor& bias) {
  require_rank2("add_row", a);
  const std::size_t m = a.rows(), n = a.cols();
  const bool row_shaped = (bias.rank() == 2 && bias.rows() == 1) ||
                          bias.rank() == 1;
  if (!row_shaped || bias.numel() != n) shape_fail("add_row", a, bias);
  std::vector<double> out(m * n);
  auto av = a.data();
  auto bv = bias.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] + bv[j];
  }
  return make("add_row", a.shape(), std::move(out), {a, bias},
              [m, n](Node& self) {
                Node& A = *self.inputs[0];
                Node& B = *self.inputs[1];
                if (A.requires_grad) {
                  auto& g = A.grad_buffer();
                  for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                }
                if (B.requires_grad) {
                  auto& g = B.grad_buffer();
                  for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
                  }
                }
              });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary(
      "add_scalar", a, [value](double x) { return x + value; },
      [](double, double) { return 1.0; });
}

Tensor elementwise_max(const Tensor& a, const Tensor& b) {
  require_same("elementwise_max", a, b);
  std::vector<double> out(a.numel());
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(av[i], bv[i]);
  // Ties route the gradient to the first argument.
  return make("elementwise_max", a.shape(), std::move(out), {a, b},
              [](Node& self) {
                Node& A = *self.inputs[0];
                Node& B = *self.inputs[1];
                for (std::size_t i = 0; i < self.grad.size(); ++i) {
                  const bool first = A.value[i] >= B.value[i];
                  Node& dst = first ? A : B;
                  if (dst.requires_grad) dst.grad_buffer()[i] += self.grad[i];
                }
              });
}

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(
      "log", a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor abs(const Tensor& a) {
  return unary(
      "abs", a, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary(
      "clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& a, int axis) {
  require_rank2("sum", a);
  require_axis("sum", axis);
  const std::size_t m = a.rows(), n = a.cols();
  auto av = a.data();
  if (axis == 0) {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) out[j] += av[i * n + j];
    }
    return make("sum", {1, n}, std::move(out), {a}, [m, n](Node& self) {
      Node& A = *self.inputs[0];
      if (!A.requires_grad) return;
      auto& g = A.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j];
      }
    });
  }
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i] += av[i * n + j];
  }
  return make("sum", {m, 1}, std::move(out), {a}, [m, n](Node& self) {
    Node& A = *self.inputs[0];
    if (!A.requires_grad) return;
    auto& g = A.grad_buffer();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[i];
    }
  });
}

Tensor mean(const Tensor& a, int axis) {
  require_rank2("mean", a);
  require_axis("mean", axis);
  const double count = static_cast<double>(axis == 0 ? a.rows() : a.cols());
  return scale(sum(a, axis), 1.0 / count);
}

Tensor sum_all(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make("sum_all", {1, 1}, {total}, {a}, [](Node& self) {
    Node& A = *self.inputs[0];
    if (!A.requires_grad) return;
    auto& g = A.grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor softmax(const Tensor& a, int axis) {
  require_rank2("softmax", a);
  require_axis("softmax", axis);
  const std::size_t m = a.rows(), n = a.cols();
  // Address element k of lane `lane` independent of axis.
  const std::size_t lanes = axis == 1 ? m : n;
  const std::size_t len = axis == 1 ? n : m;
  auto index = [axis, n](std::size_t lane, std::size_t k) {
    return axis == 1 ? lane * n + k : k * n + lane;
  };
  auto av = a.data();
  std::vector<double> out(m * n);
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < len; ++k) mx = std::max(mx, av[index(lane, k)]);
    double total = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      const double e = std::exp(av[index(lane, k)] - mx);
      out[index(lane, k)] = e;
      total += e;
    }
    for (std::size_t k = 0; k < len; ++k) out[index(lane, k)] /= total;
  }
  return make("softmax", a.shape(), std::move(out), {a},
              [lanes, len, index](Node& self) {
                Node& A = *self.inputs[0];
                if (!A.requires_grad) return;
                auto& g = A.grad_buffer();
                for (std::size_t lane = 0; lane < lanes; ++lane) {
                  double dot = 0.0;
                  for (std::size_t k = 0; k < len; ++k) {
                    const auto i = index(lane, k);
                    dot += self.grad[i] * self.value[i];
                  }
                  for (std::size_t k = 0; k < len; ++k) {
                    const auto i = index(lane, k);
                    g[i] += self.value[i] * (self.grad[i] - dot);
                  }
                }
              });
}

namespace {

struct RowStats {
  std::vector<double> xhat;
  std::vector<double> inv_std;
};

RowStats normalize_rows(std::span<const double> x, std::size_t m, std::size_t n,
                        double eps) {
  RowStats st{std::vector<double>(m * n), std::vector<double>(m)};
  for (std::size_t i = 0; i < m; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += x[i * n + j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double c = x[i * n + j] - mu;
      var += c * c;
    }
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    st.inv_std[i] = inv;
    for (std::size_t j = 0; j < n; ++j) st.xhat[i * n + j] = (x[i * n + j] - mu) * inv;
  }
  return st;
}

// dx from d(xhat) for one row.
void layer_norm_input_grad(const double* dxhat, const double* xhat, double inv,
                           std::size_t n, double* dx) {
  double sum_d = 0.0, sum_dx = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    sum_d += dxhat[j];
    sum_dx += dxhat[j] * xhat[j];
  }
  const double nn = static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    dx[j] += inv / nn * (nn * dxhat[j] - sum_d - xhat[j] * sum_dx);
  }
}

}  // namespace

Tensor layer_norm(const Tensor& a, double eps) {
  require_rank2("layer_norm", a);
  const std::size_t m = a.rows(), n = a.cols();
  auto st = normalize_rows(a.data(), m, n, eps);
  auto out = st.xhat;
  return make("layer_norm", a.shape(), std::move(out), {a},
              [m, n, inv = std::move(st.inv_std)](Node& self) {
                Node& A = *self.inputs[0];
                if (!A.requires_grad) return;
                auto& g = A.grad_buffer();
                for (std::size_t i = 0; i < m; ++i) {
                  layer_norm_input_grad(&self.grad[i * n], &self.value[i * n],
                                        inv[i], n, &g[i * n]);
                }
              });
}

Tensor layer_norm(const Tensor& a, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  require_rank2("layer_norm", a);
  const std::size_t m = a.rows(), n = a.cols();
  if (gamma.numel() != n) shape_fail("layer_norm", a, gamma);
  if (beta.numel() != n) shape_fail("layer_norm", a, beta);
  auto st = normalize_rows(a.data(), m, n, eps);
  std::vector<double> out(m * n);
  auto gv = gamma.data();
  auto bv = beta.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = st.xhat[i * n + j] * gv[j] + bv[j];
    }
  }
  return make(
      "layer_norm", a.shape(), std::move(out), {a, gamma, beta},
      [m, n, st = std::move(st)](Node& self) {
        Node& A = *self.inputs[0];
        Node& G = *self.inputs[1];
        Node& B = *self.inputs[2];
        if (G.requires_grad) {
          auto& g = G.grad_buffer();
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
              g[j] += self.grad[i * n + j] * st.xhat[i * n + j];
            }
          }
        }
        if (B.requires_grad) {
          auto& g = B.grad_buffer();
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
          }
        }
        if (A.requires_grad) {
          auto& g = A.grad_buffer();
          std::vector<double> dxhat(n);
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
              dxhat[j] = self.grad[i * n + j] * G.value[j];
            }
            layer_norm_input_grad(dxhat.data(), &st.xhat[i * n], st.inv_std[i],
                                  n, &g[i * n]);
          }
        }
      });
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b, double eps) {
  require_rank2("cosine_similarity", a);
  require_same("cosine_similarity", a, b);
  const std::size_t m = a.rows(), n = a.cols();
  auto av = a.data();
  auto bv = b.data();
  std::vector<double> out(m);
  std::vector<double> na(m), nb(m), denom(m);
  for (std::size_t i = 0; i < m; ++i) {
    double dot = 0.0, sa = 0.0, sb = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dot += av[i * n + j] * bv[i * n + j];
      sa += av[i * n + j] * av[i * n + j];
      sb += bv[i * n + j] * bv[i * n + j];
    }
    na[i] = std::sqrt(sa);
    nb[i] = std::sqrt(sb);
    denom[i] = std::max(na[i] * nb[i], eps);
    out[i] = dot / denom[i];
  }
  return make(
      "cosine_similarity", {m, 1}, std::move(out), {a, b},
      [m, n, eps, na = std::move(na), nb = std::move(nb),
       denom = std::move(denom)](Node& self) {
        Node& A = *self.inputs[0];
        Node& B = *self.inputs[1];
        for (std::size_t i = 0; i < m; ++i) {
          const double g = self.grad[i];
          const double c = self.value[i];
          // Inside the clamp the denominator is constant.
          const bool clamped = na[i] * nb[i] <= eps;
          for (int side = 0; side < 2; ++side) {
            Node& x = side == 0 ? A : B;
            Node& y = side == 0 ? B : A;
            if (!x.requires_grad) continue;
            const double nx = side == 0 ? na[i] : nb[i];
            auto& gx = x.grad_buffer();
            for (std::size_t j = 0; j < n; ++j) {
              const auto k = i * n + j;
              double d = y.value[k] / denom[i];
              if (!clamped) d -= c * x.value[k] / (nx * nx);
              gx[k] += g * d;
            }
          }
        }
      });
}

Tensor concat(std::span<const Tensor> parts, int axis) {
  require_axis("concat", axis);
  if (parts.empty()) throw ShapeError("concat: no inputs");
  for (const auto& p : parts) require_rank2("concat", p);
  const auto& first = parts.front();
  std::size_t m = first.rows(), n = first.cols();
  if (axis == 0) {
    m = 0;
    for (const auto& p : parts) {
      if (p.cols() != n) shape_fail("concat", first, p);
      m += p.rows();
    }
  } else {
    n = 0;
    for (const auto& p : parts) {
      if (p.rows() != m) shape_fail("concat", first, p);
      n += p.cols();
    }
  }
  std::vector<double> out(m * n);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::size_t pm = p.rows(), pn = p.cols();
    auto pv = p.data();
    for (std::size_t i = 0; i < pm; ++i) {
      for (std::size_t j = 0; j < pn; ++j) {
        const auto dst = axis == 0 ? (off + i) * n + j : i * n + off + j;
        out[dst] = pv[i * pn + j];
      }
    }
    off += axis == 0 ? pm : pn;
  }
  return make_n("concat", {m, n}, std::move(out), parts,
                [axis, n, offsets = std::move(offsets)](Node& self) {
                  for (std::size_t s = 0; s < self.inputs.size(); ++s) {
                    Node& p = *self.inputs[s];
                    if (!p.requires_grad) continue;
                    const std::size_t pm = p.shape[0], pn = p.shape[1];
                    auto& g = p.grad_buffer();
                    for (std::size_t i = 0; i < pm; ++i) {
                      for (std::size_t j = 0; j < pn; ++j) {
                        const auto src = axis == 0 ? (offsets[s] + i) * n + j
                                                   : i * n + offsets[s] + j;
                        g[i * pn + j] += self.grad[src];
                      }
                    }
                  }
                });
}

Tensor concat(std::initializer_list<Tensor> parts, int axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor slice(const Tensor& a, int axis, std::size_t begin, std::size_t end) {
  require_rank2("slice", a);
  require_axis("slice", axis);
  const std::size_t m = a.rows(), n = a.cols();
  const std::size_t limit = axis == 0 ? m : n;
  if (begin > end || end > limit) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") out of bounds for shape " +
                     shape_str(a.shape()));
  }
  const std::size_t om = axis == 0 ? end - begin : m;
  const std::size_t on = axis == 0 ? n : end - begin;
  std::vector<double> out(om * on);
  auto av = a.data();
  for (std::size_t i = 0; i < om; ++i) {
    for (std::size_t j = 0; j < on; ++j) {
      const auto src = axis == 0 ? (begin + i) * n + j : i * n + begin + j;
      out[i * on + j] = av[src];
    }
  }
  return make("slice", {om, on}, std::move(out), {a},
              [axis, begin, n, om, on](Node& self) {
                Node& A = *self.inputs[0];
                if (!A.requires_grad) return;
                auto& g = A.grad_buffer();
                for (std::size_t i = 0; i < om; ++i) {
                  for (std::size_t j = 0; j < on; ++j) {
                    const auto dst =
                        axis == 0 ? (begin + i) * n + j : i * n + begin + j;
                    g[dst] += self.grad[i * on + j];
                  }
                }
              });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> indices) {
  require_rank2("gather_rows", a);
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(indices.size() * n);
  auto av = a.data();
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= m) {
      throw ShapeError("gather_rows: index " + std::to_string(indices[r]) +
                       " out of range for shape " + shape_str(a.shape()));
    }
    std::copy_n(&av[indices[r] * n], n, &out[r * n]);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return make("gather_rows", {indices.size(), n}, std::move(out), {a},
              [n, idx = std::move(idx)](Node& self) {
                Node& A = *self.inputs[0];
                if (!A.requires_grad) return;
                auto& g = A.grad_buffer();
                for (std::size_t r = 0; r < idx.size(); ++r) {
                  for (std::size_t j = 0; j < n; ++j) {
                    g[idx[r] * n + j] += self.grad[r * n + j];
                  }
                }
              });
}

Tensor apply_mask(const Tensor& a, std::span<const double> mask) {
  if (mask.empty()) return a;
  if (mask.size() != a.numel()) {
    throw ShapeError("apply_mask: mask of " + std::to_string(mask.size()) +
                     " values for shape " + shape_str(a.shape()));
  }
  std::vector<double> out(a.numel());
  auto av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * mask[i];
  std::vector<double> keep(mask.begin(), mask.end());
  return make("apply_mask", a.shape(), std::move(out), {a},
              [keep = std::move(keep)](Node& self) {
                Node& A = *self.inputs[0];
                if (!A.requires_grad) return;
                auto& g = A.grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) {
                  g[i] += self.grad[i] * keep[i];
                }
              });
}

}  // namespace let::ad
