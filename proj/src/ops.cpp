#include "sgnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgnet/errors.hpp"
#include "sgnet/tape.hpp"

namespace sgnet {
namespace {

void require_same_shape(const char* op, const Tensor& x, const Tensor& y) {
  if (!(x.shape() == y.shape())) {
    throw ConfigError(std::string(op) + ": shape mismatch " +
                      x.shape().str() + " vs " + y.shape().str());
  }
}

// Accumulates g into t's gradient when t participates in backward.
void accumulate(Tensor t, std::span<const double> g) {
  if (!t.requires_grad()) return;
  auto dst = t.grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

int alpha_channels(const Tensor& alpha, int channels) {
  const Shape& s = alpha.shape();
  if (s.n != 1 || s.h != 1 || s.w != 1 || (s.c != channels && s.c != 1)) {
    throw ConfigError("scale_channels: alpha shape " + s.str() +
                      " does not match " + std::to_string(channels) +
                      " channels");
  }
  return s.c;
}

}  // namespace

Tensor add(const Tensor& x, const Tensor& y) {
  require_same_shape("add", x, y);
  Tensor out(x.shape());
  auto o = out.mutable_data();
  auto a = x.data();
  auto b = y.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] + b[i];
  Tape::current().record("add", {x, y}, out,
                         [x, y](std::span<const double> g) {
                           accumulate(x, g);
                           accumulate(y, g);
                         });
  return out;
}

Tensor mul(const Tensor& x, const Tensor& y) {
  require_same_shape("mul", x, y);
  Tensor out(x.shape());
  auto o = out.mutable_data();
  auto a = x.data();
  auto b = y.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] * b[i];
  Tape::current().record(
      "mul", {x, y}, out, [x, y](std::span<const double> g) {
        auto a = x.data();
        auto b = y.data();
        if (Tensor xs = x; xs.requires_grad()) {
          auto dx = xs.grad_buffer();
          for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * b[i];
        }
        if (Tensor ys = y; ys.requires_grad()) {
          auto dy = ys.grad_buffer();
          for (std::size_t i = 0; i < g.size(); ++i) dy[i] += g[i] * a[i];
        }
      });
  return out;
}

Tensor scale_channels(const Tensor& x, const Tensor& alpha) {
  const Shape s = x.shape();
  const int ac = alpha_channels(alpha, s.c);
  Tensor out(s);
  auto o = out.mutable_data();
  auto in = x.data();
  auto a = alpha.data();
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double k = a[ac == 1 ? 0 : c];
      const std::size_t base = offset(s, n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) o[base + i] = k * in[base + i];
    }
  }
  Tape::current().record(
      "scale_channels", {x, alpha}, out,
      [x, alpha, ac](std::span<const double> g) {
        const Shape s = x.shape();
        const std::size_t plane = s.plane();
        auto a = alpha.data();
        auto in = x.data();
        if (Tensor xs = x; xs.requires_grad()) {
          auto dx = xs.grad_buffer();
          for (int n = 0; n < s.n; ++n) {
            for (int c = 0; c < s.c; ++c) {
              const double k = a[ac == 1 ? 0 : c];
              const std::size_t base = offset(s, n, c, 0, 0);
              for (std::size_t i = 0; i < plane; ++i) {
                dx[base + i] += k * g[base + i];
              }
            }
          }
        }
        if (Tensor as = alpha; as.requires_grad()) {
          auto da = as.grad_buffer();
          for (int c = 0; c < s.c; ++c) {
            double acc = 0.0;
            for (int n = 0; n < s.n; ++n) {
              const std::size_t base = offset(s, n, c, 0, 0);
              for (std::size_t i = 0; i < plane; ++i) {
                acc += g[base + i] * in[base + i];
              }
            }
            da[ac == 1 ? 0 : c] += acc;
          }
        }
      });
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out(x.shape());
  auto o = out.mutable_data();
  auto in = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] > 0.0 ? in[i] : 0.0;
  Tape::current().record("relu", {x}, out, [x](std::span<const double> g) {
    Tensor xs = x;
    auto in = x.data();
    auto dx = xs.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (in[i] > 0.0) dx[i] += g[i];
    }
  });
  return out;
}

Tensor sigmoid(const Tensor& x) {
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  Tensor out(x.shape());
  auto o = out.mutable_data();
  auto in = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = std::clamp(1.0 / (1.0 + std::exp(-in[i])), lo, hi);
  }
  Tape::current().record(
      "sigmoid", {x}, out, [x, out](std::span<const double> g) {
        Tensor xs = x;
        auto s = out.data();
        auto dx = xs.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
          dx[i] += g[i] * s[i] * (1.0 - s[i]);
        }
      });
  return out;
}

Tensor maxpool2x2(const Tensor& x) {
  const Shape s = x.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw ConfigError("maxpool2x2: spatial dims must be even, got " + s.str());
  }
  const Shape os{s.n, s.c, s.h / 2, s.w / 2};
  Tensor out(os);
  // Flat input index of each window's maximum; first maximum wins on ties.
  auto argmax = std::make_shared<std::vector<std::size_t>>(os.numel());
  auto o = out.mutable_data();
  auto in = x.data();
  std::size_t k = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int i = 0; i < os.h; ++i) {
        for (int j = 0; j < os.w; ++j, ++k) {
          std::size_t best = offset(s, n, c, 2 * i, 2 * j);
          for (int di = 0; di < 2; ++di) {
            for (int dj = 0; dj < 2; ++dj) {
              const std::size_t idx = offset(s, n, c, 2 * i + di, 2 * j + dj);
              if (in[idx] > in[best]) best = idx;
            }
          }
          (*argmax)[k] = best;
          o[k] = in[best];
        }
      }
    }
  }
  Tape::current().record("maxpool2x2", {x}, out,
                         [x, argmax](std::span<const double> g) {
                           Tensor xs = x;
                           auto dx = xs.grad_buffer();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             dx[(*argmax)[i]] += g[i];
                           }
                         });
  return out;
}

Tensor upsample_nearest2x(const Tensor& x) {
  const Shape s = x.shape();
  const Shape os{s.n, s.c, s.h * 2, s.w * 2};
  Tensor out(os);
  auto o = out.mutable_data();
  auto in = x.data();
  for (int n = 0; n < os.n; ++n) {
    for (int c = 0; c < os.c; ++c) {
      for (int i = 0; i < os.h; ++i) {
        for (int j = 0; j < os.w; ++j) {
          o[offset(os, n, c, i, j)] = in[offset(s, n, c, i / 2, j / 2)];
        }
      }
    }
  }
  Tape::current().record(
      "upsample_nearest2x", {x}, out, [x](std::span<const double> g) {
        Tensor xs = x;
        const Shape s = x.shape();
        const Shape os{s.n, s.c, s.h * 2, s.w * 2};
        auto dx = xs.grad_buffer();
        for (int n = 0; n < os.n; ++n) {
          for (int c = 0; c < os.c; ++c) {
            for (int i = 0; i < os.h; ++i) {
              for (int j = 0; j < os.w; ++j) {
                dx[offset(s, n, c, i / 2, j / 2)] += g[offset(os, n, c, i, j)];
              }
            }
          }
        }
      });
  return out;
}

Tensor concat_channels(std::span<const Tensor> xs) {
  if (xs.empty()) throw ConfigError("concat_channels: no inputs");
  Shape os = xs[0].shape();
  os.c = 0;
  for (const auto& t : xs) {
    const Shape& s = t.shape();
    if (s.n != os.n || s.h != os.h || s.w != os.w) {
      throw ConfigError("concat_channels: " + s.str() +
                        " disagrees with " + xs[0].shape().str() +
                        " on N/H/W");
    }
    os.c += s.c;
  }
  Tensor out(os);
  auto o = out.mutable_data();
  const std::size_t plane = os.plane();
  for (int n = 0; n < os.n; ++n) {
    int c0 = 0;
    for (const auto& t : xs) {
      const std::size_t len = t.shape().c * plane;
      auto src = t.data().subspan(n * len, len);
      std::copy(src.begin(), src.end(), o.begin() + offset(os, n, c0, 0, 0));
      c0 += t.shape().c;
    }
  }
  std::vector<Tensor> inputs(xs.begin(), xs.end());
  Tape::current().record(
      "concat_channels", inputs, out,
      [inputs, os](std::span<const double> g) {
        const std::size_t plane = os.plane();
        int c0 = 0;
        for (Tensor t : inputs) {
          const int tc = t.shape().c;
          if (t.requires_grad()) {
            auto dst = t.grad_buffer();
            const std::size_t len = tc * plane;
            for (int n = 0; n < os.n; ++n) {
              const std::size_t src = offset(os, n, c0, 0, 0);
              for (std::size_t i = 0; i < len; ++i) {
                dst[n * len + i] += g[src + i];
              }
            }
          }
          c0 += tc;
        }
      });
  return out;
}

Tensor concat_channels(std::initializer_list<Tensor> xs) {
  return concat_channels(std::span<const Tensor>(xs.begin(), xs.size()));
}

Tensor slice_channels(const Tensor& x, int begin, int end) {
  const Shape s = x.shape();
  if (begin < 0 || end > s.c || begin >= end) {
    throw ConfigError("slice_channels: bad range [" + std::to_string(begin) +
                      "," + std::to_string(end) + ") for " + s.str());
  }
  const Shape os{s.n, end - begin, s.h, s.w};
  Tensor out(os);
  auto o = out.mutable_data();
  auto in = x.data();
  const std::size_t len = os.c * s.plane();
  for (int n = 0; n < s.n; ++n) {
    std::copy_n(in.begin() + offset(s, n, begin, 0, 0), len,
                o.begin() + n * len);
  }
  Tape::current().record(
      "slice_channels", {x}, out, [x, begin, os](std::span<const double> g) {
        Tensor xs = x;
        auto dx = xs.grad_buffer();
        const std::size_t len = os.c * os.plane();
        for (int n = 0; n < os.n; ++n) {
          const std::size_t dst = offset(x.shape(), n, begin, 0, 0);
          for (std::size_t i = 0; i < len; ++i) dx[dst + i] += g[n * len + i];
        }
      });
  return out;
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  Tensor out = Tensor::scalar(acc);
  Tape::current().record("sum", {x}, out, [x](std::span<const double> g) {
    Tensor xs = x;
    auto dx = xs.grad_buffer();
    for (double& d : dx) d += g[0];
  });
  return out;
}

}  // namespace sgnet
