#include "sgnet/conv.hpp"

#include <Eigen/Core>
#include <vector>

#include "sgnet/errors.hpp"
#include "sgnet/parallel.hpp"
#include "sgnet/tape.hpp"

namespace sgnet {
namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

struct Geometry {
  Shape in;
  Shape out;
  int cg;     // input channels per group
  int og;     // output channels per group
  int rows;   // patch length: cg * kh * kw
  int cols;   // output pixels per sample
  bool pointwise;  // 1x1, stride 1, no padding: the patch matrix is the input
};

Geometry geometry(const ConvSpec& spec, const Shape& in) {
  Geometry g;
  g.in = in;
  g.out = conv_output_shape(spec, in);
  g.cg = spec.in_channels / spec.groups;
  g.og = spec.out_channels / spec.groups;
  g.rows = g.cg * spec.kernel[0] * spec.kernel[1];
  g.cols = g.out.h * g.out.w;
  g.pointwise = spec.kernel[0] == 1 && spec.kernel[1] == 1 &&
                spec.stride[0] == 1 && spec.stride[1] == 1 &&
                spec.padding[0] == 0 && spec.padding[1] == 0;
  return g;
}

// Patch matrix of channels [c0, c0+cg) of sample n: rows (c, ki, kj),
// columns output pixels.
void im2col(const double* x, const Geometry& g, const ConvSpec& spec, int c0,
            double* col) {
  const int kh = spec.kernel[0], kw = spec.kernel[1];
  const int sh = spec.stride[0], sw = spec.stride[1];
  const int ph = spec.padding[0], pw = spec.padding[1];
  const int H = g.in.h, W = g.in.w, Ho = g.out.h, Wo = g.out.w;
  for (int c = 0; c < g.cg; ++c) {
    const double* plane = x + static_cast<std::size_t>(c0 + c) * H * W;
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        double* row = col + static_cast<std::size_t>((c * kh + ki) * kw + kj) *
                                Ho * Wo;
        for (int i = 0; i < Ho; ++i) {
          const int y = i * sh - ph + ki;
          if (y < 0 || y >= H) {
            std::fill_n(row + i * Wo, Wo, 0.0);
            continue;
          }
          for (int j = 0; j < Wo; ++j) {
            const int xx = j * sw - pw + kj;
            row[i * Wo + j] = (xx >= 0 && xx < W) ? plane[y * W + xx] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* col, const Geometry& g, const ConvSpec& spec,
            int c0, double* dx) {
  const int kh = spec.kernel[0], kw = spec.kernel[1];
  const int sh = spec.stride[0], sw = spec.stride[1];
  const int ph = spec.padding[0], pw = spec.padding[1];
  const int H = g.in.h, W = g.in.w, Ho = g.out.h, Wo = g.out.w;
  for (int c = 0; c < g.cg; ++c) {
    double* plane = dx + static_cast<std::size_t>(c0 + c) * H * W;
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        const double* row =
            col + static_cast<std::size_t>((c * kh + ki) * kw + kj) * Ho * Wo;
        for (int i = 0; i < Ho; ++i) {
          const int y = i * sh - ph + ki;
          if (y < 0 || y >= H) continue;
          for (int j = 0; j < Wo; ++j) {
            const int xx = j * sw - pw + kj;
            if (xx >= 0 && xx < W) plane[y * W + xx] += row[i * Wo + j];
          }
        }
      }
    }
  }
}

void forward_im2col(const Tensor& x, const Tensor& w, const Geometry& g,
                    const ConvSpec& spec, Tensor& out) {
  const std::size_t in_stride = g.in.c * g.in.plane();
  const std::size_t out_stride = g.out.c * g.out.plane();
  const double* xd = x.data().data();
  const double* wd = w.data().data();
  double* od = out.mutable_data().data();
  parallel_for(g.in.n, [&](int n) {
    std::vector<double> col(g.pointwise ? 0 : std::size_t(g.rows) * g.cols);
    for (int grp = 0; grp < spec.groups; ++grp) {
      const double* patches;
      if (g.pointwise) {
        patches = xd + n * in_stride + std::size_t(grp) * g.cg * g.cols;
      } else {
        im2col(xd + n * in_stride, g, spec, grp * g.cg, col.data());
        patches = col.data();
      }
      ConstMap W(wd + std::size_t(grp) * g.og * g.rows, g.og, g.rows);
      ConstMap P(patches, g.rows, g.cols);
      MutMap Y(od + n * out_stride + std::size_t(grp) * g.og * g.cols, g.og,
               g.cols);
      Y.noalias() = W * P;
    }
  });
}

void forward_direct(const Tensor& x, const Tensor& w, const Geometry& g,
                    const ConvSpec& spec, Tensor& out) {
  const int kh = spec.kernel[0], kw = spec.kernel[1];
  auto xd = x.data();
  auto wd = w.data();
  auto od = out.mutable_data();
  for (int n = 0; n < g.out.n; ++n) {
    for (int o = 0; o < g.out.c; ++o) {
      const int grp = o / g.og;
      for (int i = 0; i < g.out.h; ++i) {
        for (int j = 0; j < g.out.w; ++j) {
          double acc = 0.0;
          for (int c = 0; c < g.cg; ++c) {
            for (int ki = 0; ki < kh; ++ki) {
              const int y = i * spec.stride[0] - spec.padding[0] + ki;
              if (y < 0 || y >= g.in.h) continue;
              for (int kj = 0; kj < kw; ++kj) {
                const int xx = j * spec.stride[1] - spec.padding[1] + kj;
                if (xx < 0 || xx >= g.in.w) continue;
                acc += wd[((std::size_t(o) * g.cg + c) * kh + ki) * kw + kj] *
                       xd[offset(g.in, n, grp * g.cg + c, y, xx)];
              }
            }
          }
          od[offset(g.out, n, o, i, j)] = acc;
        }
      }
    }
  }
}

void backward_im2col(const Tensor& x, const Tensor& w, const Geometry& g,
                     const ConvSpec& spec, std::span<const double> grad,
                     bool want_dx, bool want_dw, std::span<double> dx,
                     std::span<double> dw) {
  const std::size_t in_stride = g.in.c * g.in.plane();
  const std::size_t out_stride = g.out.c * g.out.plane();
  const std::size_t wsize = w.numel();
  const double* xd = x.data().data();
  const double* wd = w.data().data();
  // Per-sample weight gradients, reduced in sample order afterwards so the
  // sum does not depend on the worker count.
  std::vector<double> dw_parts(want_dw ? wsize * g.in.n : 0, 0.0);
  parallel_for(g.in.n, [&](int n) {
    std::vector<double> col(want_dw && !g.pointwise
                                ? std::size_t(g.rows) * g.cols
                                : 0);
    std::vector<double> dcol(
        want_dx && !g.pointwise ? std::size_t(g.rows) * g.cols : 0);
    for (int grp = 0; grp < spec.groups; ++grp) {
      ConstMap W(wd + std::size_t(grp) * g.og * g.rows, g.og, g.rows);
      ConstMap dY(grad.data() + n * out_stride + std::size_t(grp) * g.og * g.cols,
                  g.og, g.cols);
      if (want_dw) {
        const double* patches;
        if (g.pointwise) {
          patches = xd + n * in_stride + std::size_t(grp) * g.cg * g.cols;
        } else {
          im2col(xd + n * in_stride, g, spec, grp * g.cg, col.data());
          patches = col.data();
        }
        ConstMap P(patches, g.rows, g.cols);
        MutMap dW(dw_parts.data() + n * wsize + std::size_t(grp) * g.og * g.rows,
                  g.og, g.rows);
        dW.noalias() = dY * P.transpose();
      }
      if (want_dx) {
        if (g.pointwise) {
          MutMap dX(dx.data() + n * in_stride + std::size_t(grp) * g.cg * g.cols,
                    g.rows, g.cols);
          dX.noalias() += W.transpose() * dY;
        } else {
          MutMap dC(dcol.data(), g.rows, g.cols);
          dC.noalias() = W.transpose() * dY;
          col2im(dcol.data(), g, spec, grp * g.cg, dx.data() + n * in_stride);
        }
      }
    }
  });
  if (want_dw) {
    for (int n = 0; n < g.in.n; ++n) {
      const double* part = dw_parts.data() + n * wsize;
      for (std::size_t i = 0; i < wsize; ++i) dw[i] += part[i];
    }
  }
}

void backward_direct(const Tensor& x, const Tensor& w, const Geometry& g,
                     const ConvSpec& spec, std::span<const double> grad,
                     bool want_dx, bool want_dw, std::span<double> dx,
                     std::span<double> dw) {
  const int kh = spec.kernel[0], kw = spec.kernel[1];
  auto xd = x.data();
  auto wd = w.data();
  for (int n = 0; n < g.out.n; ++n) {
    for (int o = 0; o < g.out.c; ++o) {
      const int grp = o / g.og;
      for (int i = 0; i < g.out.h; ++i) {
        for (int j = 0; j < g.out.w; ++j) {
          const double go = grad[offset(g.out, n, o, i, j)];
          for (int c = 0; c < g.cg; ++c) {
            for (int ki = 0; ki < kh; ++ki) {
              const int y = i * spec.stride[0] - spec.padding[0] + ki;
              if (y < 0 || y >= g.in.h) continue;
              for (int kj = 0; kj < kw; ++kj) {
                const int xx = j * spec.stride[1] - spec.padding[1] + kj;
                if (xx < 0 || xx >= g.in.w) continue;
                const std::size_t wi =
                    ((std::size_t(o) * g.cg + c) * kh + ki) * kw + kj;
                const std::size_t xi = offset(g.in, n, grp * g.cg + c, y, xx);
                if (want_dw) dw[wi] += go * xd[xi];
                if (want_dx) dx[xi] += go * wd[wi];
              }
            }
          }
        }
      }
    }
  }
}

int out_extent(int in, int k, int s, int p, bool floor_output,
               const char* axis) {
  const int span = in + 2 * p - k;
  if (span < 0) {
    throw ConfigError(std::string("conv2d: kernel larger than padded input "
                                  "along ") + axis);
  }
  if (!floor_output && span % s != 0) {
    throw ConfigError(std::string("conv2d: non-integer output ") + axis +
                      " ((" + std::to_string(in) + "+2*" + std::to_string(p) +
                      "-" + std::to_string(k) + ")/" + std::to_string(s) + ")");
  }
  return span / s + 1;
}

}  // namespace

void ConvSpec::validate() const {
  if (in_channels <= 0 || out_channels <= 0 || groups <= 0) {
    throw ConfigError("conv2d: channel counts and groups must be positive");
  }
  if (in_channels % groups != 0 || out_channels % groups != 0) {
    throw ConfigError("conv2d: channels " + std::to_string(in_channels) +
                      "->" + std::to_string(out_channels) +
                      " not divisible by groups=" + std::to_string(groups));
  }
  for (int a = 0; a < 2; ++a) {
    if (kernel[a] < 1 || stride[a] < 1 || padding[a] < 0) {
      throw ConfigError("conv2d: kernel/stride must be >= 1, padding >= 0");
    }
  }
}

Shape ConvSpec::weight_shape() const {
  return {out_channels, in_channels / groups, kernel[0], kernel[1]};
}

std::int64_t ConvSpec::weight_count() const {
  return static_cast<std::int64_t>(out_channels) * (in_channels / groups) *
         kernel[0] * kernel[1];
}

Shape conv_output_shape(const ConvSpec& spec, const Shape& input) {
  spec.validate();
  if (input.c != spec.in_channels) {
    throw ConfigError("conv2d: input has " + std::to_string(input.c) +
                      " channels, spec expects " +
                      std::to_string(spec.in_channels));
  }
  return {input.n, spec.out_channels,
          out_extent(input.h, spec.kernel[0], spec.stride[0], spec.padding[0],
                     spec.floor_output, "height"),
          out_extent(input.w, spec.kernel[1], spec.stride[1], spec.padding[1],
                     spec.floor_output, "width")};
}

std::uint64_t& conv_mac_counter() {
  thread_local std::uint64_t counter = 0;
  return counter;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b,
              const ConvSpec& spec, ConvAlgo algo) {
  const Geometry g = geometry(spec, x.shape());
  if (!(w.shape() == spec.weight_shape())) {
    throw ConfigError("conv2d: weight shape " + w.shape().str() +
                      ", expected " + spec.weight_shape().str());
  }
  if (b.defined() && !(b.shape() == Shape{1, spec.out_channels, 1, 1})) {
    throw ConfigError("conv2d: bias shape " + b.shape().str());
  }
  Tensor out(g.out);
  if (algo == ConvAlgo::kIm2col) {
    forward_im2col(x, w, g, spec, out);
  } else {
    forward_direct(x, w, g, spec, out);
  }
  if (b.defined()) {
    auto o = out.mutable_data();
    auto bd = b.data();
    const std::size_t plane = g.out.plane();
    for (int n = 0; n < g.out.n; ++n) {
      for (int c = 0; c < g.out.c; ++c) {
        const std::size_t base = offset(g.out, n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) o[base + i] += bd[c];
      }
    }
  }
  conv_mac_counter() += static_cast<std::uint64_t>(spec.weight_count()) *
                        g.cols * g.in.n;

  std::vector<Tensor> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  Tape::current().record(
      "conv2d", std::move(inputs), out,
      [x, w, b, spec, g, algo](std::span<const double> grad) {
        Tensor xs = x, ws = w, bs = b;
        const bool want_dx = xs.requires_grad();
        const bool want_dw = ws.requires_grad();
        std::span<double> dx = want_dx ? xs.grad_buffer() : std::span<double>{};
        std::span<double> dw = want_dw ? ws.grad_buffer() : std::span<double>{};
        if (algo == ConvAlgo::kIm2col) {
          backward_im2col(x, w, g, spec, grad, want_dx, want_dw, dx, dw);
        } else {
          backward_direct(x, w, g, spec, grad, want_dx, want_dw, dx, dw);
        }
        if (bs.defined() && bs.requires_grad()) {
          auto db = bs.grad_buffer();
          const std::size_t plane = g.out.plane();
          for (int c = 0; c < g.out.c; ++c) {
            double acc = 0.0;
            for (int n = 0; n < g.out.n; ++n) {
              const std::size_t base = offset(g.out, n, c, 0, 0);
              for (std::size_t i = 0; i < plane; ++i) acc += grad[base + i];
            }
            db[c] += acc;
          }
        }
      });
  return out;
}

}  // namespace sgnet
