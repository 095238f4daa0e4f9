#include "sgnet/batchnorm.hpp"

#include <cmath>
#include <vector>

#include "sgnet/errors.hpp"
#include "sgnet/tape.hpp"

namespace sgnet {

BatchNormState BatchNormState::fresh(int channels) {
  return {Tensor::zeros({1, channels, 1, 1}),
          Tensor::full({1, channels, 1, 1}, 1.0)};
}

Tensor batchnorm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormState& state, Mode mode) {
  const Shape s = x.shape();
  const Shape ps{1, s.c, 1, 1};
  if (!(gamma.shape() == ps) || !(beta.shape() == ps) ||
      !(state.running_mean.shape() == ps) ||
      !(state.running_var.shape() == ps)) {
    throw ConfigError("batchnorm2d: parameter shapes do not match " +
                      std::to_string(s.c) + " channels");
  }
  const std::size_t plane = s.plane();
  const std::size_t count = plane * s.n;
  if (mode == Mode::kTrain && count < 2) {
    throw ConfigError("batchnorm2d: train mode needs N*H*W >= 2 per channel, "
                      "got " + s.str());
  }

  auto in = x.data();
  auto gd = gamma.data();
  auto bd = beta.data();
  // Normalized input and 1/sqrt(var + eps), kept for backward.
  auto xhat = std::make_shared<std::vector<double>>(s.numel());
  auto inv_std = std::make_shared<std::vector<double>>(s.c);
  Tensor out(s);
  auto o = out.mutable_data();

  for (int c = 0; c < s.c; ++c) {
    double mean, var;
    if (mode == Mode::kTrain) {
      double acc = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const std::size_t base = offset(s, n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) acc += in[base + i];
      }
      mean = acc / count;
      double sq = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const std::size_t base = offset(s, n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = in[base + i] - mean;
          sq += d * d;
        }
      }
      var = sq / count;
      auto rm = state.running_mean.mutable_data();
      auto rv = state.running_var.mutable_data();
      rm[c] = (1.0 - kBatchNormMomentum) * rm[c] + kBatchNormMomentum * mean;
      rv[c] = (1.0 - kBatchNormMomentum) * rv[c] +
              kBatchNormMomentum * (sq / (count - 1));
    } else {
      mean = state.running_mean.data()[c];
      var = state.running_var.data()[c];
    }
    const double istd = 1.0 / std::sqrt(var + kBatchNormEps);
    (*inv_std)[c] = istd;
    for (int n = 0; n < s.n; ++n) {
      const std::size_t base = offset(s, n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) {
        const double xh = (in[base + i] - mean) * istd;
        (*xhat)[base + i] = xh;
        o[base + i] = gd[c] * xh + bd[c];
      }
    }
  }

  Tape::current().record(
      "batchnorm2d", {x, gamma, beta}, out,
      [x, gamma, beta, xhat, inv_std, mode](std::span<const double> g) {
        const Shape s = x.shape();
        const std::size_t plane = s.plane();
        const double count = static_cast<double>(plane * s.n);
        Tensor xs = x, gs = gamma, bs = beta;
        auto gd = gamma.data();
        for (int c = 0; c < s.c; ++c) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (int n = 0; n < s.n; ++n) {
            const std::size_t base = offset(s, n, c, 0, 0);
            for (std::size_t i = 0; i < plane; ++i) {
              sum_g += g[base + i];
              sum_gx += g[base + i] * (*xhat)[base + i];
            }
          }
          if (gs.requires_grad()) gs.grad_buffer()[c] += sum_gx;
          if (bs.requires_grad()) bs.grad_buffer()[c] += sum_g;
          if (!xs.requires_grad()) continue;
          auto dx = xs.grad_buffer();
          const double k = gd[c] * (*inv_std)[c];
          for (int n = 0; n < s.n; ++n) {
            const std::size_t base = offset(s, n, c, 0, 0);
            for (std::size_t i = 0; i < plane; ++i) {
              if (mode == Mode::kTrain) {
                dx[base + i] += k * (g[base + i] - sum_g / count -
                                     (*xhat)[base + i] * sum_gx / count);
              } else {
                dx[base + i] += k * g[base + i];
              }
            }
          }
        }
      });
  return out;
}

}  // namespace sgnet
