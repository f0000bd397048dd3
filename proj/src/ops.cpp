// Copyright 2026 The shrinknas Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "shrinknas/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shrinknas/error.hpp"
#include "shrinknas/kernels/kernels.hpp"
#include "shrinknas/tape.hpp"

namespace shrinknas::ops {

namespace {

thread_local std::uint64_t t_macs = 0;

bool any_requires_grad(std::initializer_list<const Tensor*> inputs) {
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

// Output tensor that tracks gradients iff a tape is active and an input does.
Tensor make_output(Shape shape, bool track) {
  Tensor out = Tensor::zeros(std::move(shape));
  if (track && Tape::current() != nullptr) out.set_requires_grad(true);
  return out;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                     ", got " + shape_str(t.shape()));
  }
}

void require_finite(std::span<const double> v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericalError(std::string(op) + ": non-finite input value");
  }
}

struct AxisSplit {
  std::size_t outer, n, inner;
};

AxisSplit split_axis(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for shape " + shape_str(s));
  }
  AxisSplit r{1, s[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

struct ConvGeom {
  std::size_t n, cin, h, w, cout, kh, kw, ho, wo, cin_g, cout_g;
};

// col[(c*kh + r)*kw + s][oh*wo + ow] for one sample and group.
void im2col(const double* x, const ConvGeom& g, const Conv2dArgs& a, std::size_t group,
            double* col) {
  const std::size_t plane = g.ho * g.wo;
  for (std::size_t c = 0; c < g.cin_g; ++c) {
    const double* xc = x + (group * g.cin_g + c) * g.h * g.w;
    for (std::size_t r = 0; r < g.kh; ++r) {
      for (std::size_t s = 0; s < g.kw; ++s) {
        double* dst = col + ((c * g.kh + r) * g.kw + s) * plane;
        for (std::size_t oh = 0; oh < g.ho; ++oh) {
          const long ih = static_cast<long>(oh * a.stride + r * a.dilation) - static_cast<long>(a.padding);
          double* row = dst + oh * g.wo;
          if (ih < 0 || ih >= static_cast<long>(g.h)) {
            std::fill(row, row + g.wo, 0.0);
            continue;
          }
          const double* xrow = xc + static_cast<std::size_t>(ih) * g.w;
          for (std::size_t ow = 0; ow < g.wo; ++ow) {
            const long iw = static_cast<long>(ow * a.stride + s * a.dilation) - static_cast<long>(a.padding);
            row[ow] = (iw < 0 || iw >= static_cast<long>(g.w)) ? 0.0 : xrow[iw];
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, const ConvGeom& g, const Conv2dArgs& a, std::size_t group,
                double* gx) {
  const std::size_t plane = g.ho * g.wo;
  for (std::size_t c = 0; c < g.cin_g; ++c) {
    double* gxc = gx + (group * g.cin_g + c) * g.h * g.w;
    for (std::size_t r = 0; r < g.kh; ++r) {
      for (std::size_t s = 0; s < g.kw; ++s) {
        const double* src = col + ((c * g.kh + r) * g.kw + s) * plane;
        for (std::size_t oh = 0; oh < g.ho; ++oh) {
          const long ih = static_cast<long>(oh * a.stride + r * a.dilation) - static_cast<long>(a.padding);
          if (ih < 0 || ih >= static_cast<long>(g.h)) continue;
          double* gxrow = gxc + static_cast<std::size_t>(ih) * g.w;
          const double* row = src + oh * g.wo;
          for (std::size_t ow = 0; ow < g.wo; ++ow) {
            const long iw = static_cast<long>(ow * a.stride + s * a.dilation) - static_cast<long>(a.padding);
            if (iw >= 0 && iw < static_cast<long>(g.w)) gxrow[iw] += row[ow];
          }
        }
      }
    }
  }
}

}  // namespace

std::size_t conv_output_size(std::size_t in, std::size_t kernel, const Conv2dArgs& args) {
  const long span = static_cast<long>(in + 2 * args.padding) -
                    static_cast<long>(args.dilation * (kernel - 1)) - 1;
  if (span < 0) return 0;
  return static_cast<std::size_t>(span) / args.stride + 1;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Conv2dArgs& args) {
  require_rank(input, 4, "conv2d", "input");
  require_rank(weight, 4, "conv2d", "weight");
  if (args.stride == 0 || args.dilation == 0 || args.groups == 0) {
    throw ShapeError("conv2d: stride, dilation and groups must be positive");
  }
  ConvGeom g{};
  g.n = input.dim(0);
  g.cin = input.dim(1);
  g.h = input.dim(2);
  g.w = input.dim(3);
  g.cout = weight.dim(0);
  g.kh = weight.dim(2);
  g.kw = weight.dim(3);
  if (g.cin % args.groups != 0) {
    throw ShapeError("conv2d: input channels (dim 1) = " + std::to_string(g.cin) +
                     " not divisible by groups = " + std::to_string(args.groups));
  }
  if (g.cout % args.groups != 0) {
    throw ShapeError("conv2d: output channels (weight dim 0) = " + std::to_string(g.cout) +
                     " not divisible by groups = " + std::to_string(args.groups));
  }
  g.cin_g = g.cin / args.groups;
  g.cout_g = g.cout / args.groups;
  if (weight.dim(1) != g.cin_g) {
    throw ShapeError("conv2d: weight dim 1 = " + std::to_string(weight.dim(1)) +
                     " but input channels / groups = " + std::to_string(g.cin_g));
  }
  g.ho = conv_output_size(g.h, g.kh, args);
  g.wo = conv_output_size(g.w, g.kw, args);
  if (g.ho == 0 || g.h == 0) {
    throw ShapeError("conv2d: non-positive output height (input dim 2 = " + std::to_string(g.h) + ")");
  }
  if (g.wo == 0 || g.w == 0) {
    throw ShapeError("conv2d: non-positive output width (input dim 3 = " + std::to_string(g.w) + ")");
  }

  const auto& k = kernels::active();
  const std::size_t plane = g.ho * g.wo;
  const std::size_t rows = g.cin_g * g.kh * g.kw;
  t_macs += static_cast<std::uint64_t>(g.n) * g.cout * plane * rows;

  Tensor out = make_output({g.n, g.cout, g.ho, g.wo}, any_requires_grad({&input, &weight}));
  std::vector<double> col(rows * plane);
  {
    const double* x = input.data().data();
    const double* wt = weight.data().data();
    double* y = out.data().data();
    for (std::size_t n = 0; n < g.n; ++n) {
      for (std::size_t grp = 0; grp < args.groups; ++grp) {
        im2col(x + n * g.cin * g.h * g.w, g, args, grp, col.data());
        for (std::size_t co = 0; co < g.cout_g; ++co) {
          const std::size_t oc = grp * g.cout_g + co;
          double* yrow = y + (n * g.cout + oc) * plane;
          const double* wrow = wt + oc * rows;
          for (std::size_t r = 0; r < rows; ++r) k.axpy(wrow[r], col.data() + r * plane, yrow, plane);
        }
      }
    }
  }

  if (out.requires_grad()) {
    Tape::current()->record({input, weight}, out, [input, weight, out, g, args]() mutable {
      std::span<const double> gy = out.grad();
      if (gy.empty()) return;
      const auto& k = kernels::active();
      const std::size_t plane = g.ho * g.wo;
      const std::size_t rows = g.cin_g * g.kh * g.kw;
      std::vector<double> col(rows * plane);
      std::vector<double> gcol(rows * plane);
      const double* x = input.data().data();
      const double* wt = weight.data().data();
      double* gw = weight.requires_grad() ? weight.grad_mut().data() : nullptr;
      double* gx = input.requires_grad() ? input.grad_mut().data() : nullptr;
      for (std::size_t n = 0; n < g.n; ++n) {
        for (std::size_t grp = 0; grp < args.groups; ++grp) {
          if (gw) im2col(x + n * g.cin * g.h * g.w, g, args, grp, col.data());
          if (gx) std::fill(gcol.begin(), gcol.end(), 0.0);
          for (std::size_t co = 0; co < g.cout_g; ++co) {
            const std::size_t oc = grp * g.cout_g + co;
            const double* gyrow = gy.data() + (n * g.cout + oc) * plane;
            for (std::size_t r = 0; r < rows; ++r) {
              if (gw) gw[oc * rows + r] += k.dot(gyrow, col.data() + r * plane, plane);
              if (gx) k.axpy(wt[oc * rows + r], gyrow, gcol.data() + r * plane, plane);
            }
          }
          if (gx) col2im_add(gcol.data(), g, args, grp, gx + n * g.cin * g.h * g.w);
        }
      }
    });
  }
  return out;
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank(input, 2, "linear", "input");
  require_rank(weight, 2, "linear", "weight");
  require_rank(bias, 1, "linear", "bias");
  const std::size_t b = input.dim(0), in = input.dim(1), outf = weight.dim(0);
  if (weight.dim(1) != in) {
    throw ShapeError("linear: weight dim 1 = " + std::to_string(weight.dim(1)) +
                     " but input features (dim 1) = " + std::to_string(in));
  }
  if (bias.dim(0) != outf) {
    throw ShapeError("linear: bias dim 0 = " + std::to_string(bias.dim(0)) +
                     " but weight dim 0 = " + std::to_string(outf));
  }
  const auto& k = kernels::active();
  t_macs += static_cast<std::uint64_t>(b) * in * outf;
  Tensor out = make_output({b, outf}, any_requires_grad({&input, &weight, &bias}));
  {
    const double* x = input.data().data();
    const double* w = weight.data().data();
    const double* bb = bias.data().data();
    double* y = out.data().data();
    for (std::size_t r = 0; r < b; ++r) {
      for (std::size_t o = 0; o < outf; ++o) y[r * outf + o] = k.dot(x + r * in, w + o * in, in) + bb[o];
    }
  }
  if (out.requires_grad()) {
    Tape::current()->record({input, weight, bias}, out, [input, weight, bias, out, b, in, outf]() mutable {
      std::span<const double> gy = out.grad();
      if (gy.empty()) return;
      const auto& k = kernels::active();
      const double* x = input.data().data();
      const double* w = weight.data().data();
      if (input.requires_grad()) {
        double* gx = input.grad_mut().data();
        for (std::size_t r = 0; r < b; ++r)
          for (std::size_t o = 0; o < outf; ++o) k.axpy(gy[r * outf + o], w + o * in, gx + r * in, in);
      }
      if (weight.requires_grad()) {
        double* gw = weight.grad_mut().data();
        for (std::size_t r = 0; r < b; ++r)
          for (std::size_t o = 0; o < outf; ++o) k.axpy(gy[r * outf + o], x + r * in, gw + o * in, in);
      }
      if (bias.requires_grad()) {
        auto gb = bias.grad_mut();
        for (std::size_t r = 0; r < b; ++r)
          for (std::size_t o = 0; o < outf; ++o) gb[o] += gy[r * outf + o];
      }
    });
  }
  return out;
}

Tensor affine_channel_norm(const Tensor& input, const Tensor& gain, const Tensor& bias) {
  require_rank(input, 4, "affine_channel_norm", "input");
  const std::size_t n = input.dim(0), c = input.dim(1), plane = input.dim(2) * input.dim(3);
  if (gain.numel() != c || bias.numel() != c) {
    throw ShapeError("affine_channel_norm: gain/bias size must equal input channels (dim 1) = " +
                     std::to_string(c));
  }
  Tensor out = make_output(input.shape(), any_requires_grad({&input, &gain, &bias}));
  {
    const double* x = input.data().data();
    const double* gg = gain.data().data();
    const double* bb = bias.data().data();
    double* y = out.data().data();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t off = (i * c + ch) * plane;
        for (std::size_t p = 0; p < plane; ++p) y[off + p] = gg[ch] * x[off + p] + bb[ch];
      }
  }
  if (out.requires_grad()) {
    Tape::current()->record({input, gain, bias}, out, [input, gain, bias, out, n, c, plane]() mutable {
      std::span<const double> gy = out.grad();
      if (gy.empty()) return;
      const auto& k = kernels::active();
      const double* x = input.data().data();
      const double* gg = gain.data().data();
      double* gx = input.requires_grad() ? input.grad_mut().data() : nullptr;
      double* ggain = gain.requires_grad() ? gain.grad_mut().data() : nullptr;
      double* gbias = bias.requires_grad() ? bias.grad_mut().data() : nullptr;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t ch = 0; ch < c; ++ch) {
          const std::size_t off = (i * c + ch) * plane;
          if (gx) k.axpy(gg[ch], gy.data() + off, gx + off, plane);
          if (ggain) ggain[ch] += k.dot(gy.data() + off, x + off, plane);
          if (gbias) gbias[ch] += k.sum(gy.data() + off, plane);
        }
    });
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = make_output(x.shape(), x.requires_grad());
  kernels::active().relu(x.data().data(), out.data().data(), x.numel());
  if (out.requires_grad()) {
    Tape::current()->record({x}, out, [x, out]() mutable {
      std::span<const double> gy = out.grad();
      if (gy.empty()) return;
      kernels::active().relu_backward(x.data().data(), gy.data(), x.grad_mut().data(), x.numel());
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = make_output(a.shape(), any_requires_grad({&a, &b}));
  auto y = out.data();
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
  if (out.requires_grad()) {
    Tape::current()->record({a, b}, out, [a, b, out]() mutable {
      std::span<const double> gy = out.grad();
      if (gy.empty()) return;
      const auto& k = kernels::active();
      if (a.requires_grad()) k.axpy(1.0, gy.data(), a.grad_mut().data(), gy.size());
      if (b.requires_grad()) k.axpy(1.0, gy.data(), b.grad_mut().data(), gy.size());
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = make_output(a.shape(), any_requires_grad({&a, &b}));
  auto y = out.data();
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
  if (out.requires_grad()) {
    Tape::current()->record({a, b}, out, [a, b, out]() mutable {
      std::span<const double> gy = out.grad();
      if (gy.empty()) return;
      // Read both operands before writing: a and b may be the same tensor.
      auto av = a.data();
      auto bv = b.data();
      if (a.requires_grad()) {
        auto ga = a.grad_mut();
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_mut();
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& x, double factor) {
  Tensor out = make_output(x.shape(), x.requires_grad());
  auto y = out.data();
  auto xv = x.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = factor * xv[i];
  if (out.requires_grad()) {
    Tape::current()->record({x}, out, [x, out, factor]() mutable {
      std::span<const double> gy = out.grad();
      if (gy.empty()) return;
      kernels::active().axpy(factor, gy.data(), x.grad_mut().data(), gy.size());
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  Tensor out = make_output({}, x.requires_grad());
  out.data()[0] = kernels::active().sum(x.data().data(), x.numel());
  if (out.requires_grad()) {
    Tape::current()->record({x}, out, [x, out]() mutable {
      std::span<const double> gy = out.grad();
      if (gy.empty()) return;
      const double g = gy[0];
      for (double& v : x.grad_mut()) v += g;
    });
  }
  return out;
}

Tensor concat(const std::vector<Tensor>& inputs) {
  if (inputs.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = inputs.front().shape();
  if (first.size() < 2) throw ShapeError("concat: inputs need rank >= 2, got " + shape_str(first));
  std::size_t channels = 0;
  bool track = false;
  for (const Tensor& t : inputs) {
    const Shape& s = t.shape();
    if (s.size() != first.size()) {
      throw ShapeError("concat: rank mismatch " + shape_str(first) + " vs " + shape_str(s));
    }
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != 1 && s[d] != first[d]) {
        throw ShapeError("concat: dim " + std::to_string(d) + " differs (" + shape_str(first) +
                         " vs " + shape_str(s) + ")");
      }
    }
    channels += s[1];
    track = track || t.requires_grad();
  }
  Shape out_shape = first;
  out_shape[1] = channels;
  const std::size_t outer = first[0];
  std::size_t inner = 1;
  for (std::size_t d = 2; d < first.size(); ++d) inner *= first[d];

  Tensor out = make_output(out_shape, track);
  double* y = out.data().data();
  std::size_t offset = 0;
  for (const Tensor& t : inputs) {
    const std::size_t chunk = t.dim(1) * inner;
    const double* x = t.data().data();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy(x + o * chunk, x + (o + 1) * chunk, y + o * channels * inner + offset);
    offset += chunk;
  }
  if (out.requires_grad()) {
    Tape::current()->record(inputs, out, [inputs, out, outer, channels, inner]() mutable {
      std::span<const double> gy = out.grad();
      if (gy.empty()) return;
      std::size_t offset = 0;
      for (const Tensor& t : inputs) {
        const std::size_t chunk = t.dim(1) * inner;
        if (t.requires_grad()) {
          double* gx = t.grad_mut().data();
          for (std::size_t o = 0; o < outer; ++o) {
            const double* src = gy.data() + o * channels * inner + offset;
            for (std::size_t i = 0; i < chunk; ++i) gx[o * chunk + i] += src[i];
          }
        }
        offset += chunk;
      }
    });
  }
  return out;
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 4, "global_avg_pool", "input");
  const std::size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  if (plane == 0) throw ShapeError("global_avg_pool: empty spatial extent");
  Tensor out = make_output({n, c}, x.requires_grad());
  const auto& k = kernels::active();
  const double* xv = x.data().data();
  auto y = out.data();
  for (std::size_t i = 0; i < n * c; ++i) y[i] = k.sum(xv + i * plane, plane) / static_cast<double>(plane);
  if (out.requires_grad()) {
    Tape::current()->record({x}, out, [x, out, n, c, plane]() mutable {
      std::span<const double> gy = out.grad();
      if (gy.empty()) return;
      auto gx = x.grad_mut();
      for (std::size_t i = 0; i < n * c; ++i) {
        const double g = gy[i] / static_cast<double>(plane);
        for (std::size_t p = 0; p < plane; ++p) gx[i * plane + p] += g;
      }
    });
  }
  return out;
}

Tensor softmax(const Tensor& logits, std::size_t axis) {
  const AxisSplit sp = split_axis(logits.shape(), axis, "softmax");
  require_finite(logits.data(), "softmax");
  Tensor out = make_output(logits.shape(), logits.requires_grad());
  const double* x = logits.data().data();
  double* y = out.data().data();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t in = 0; in < sp.inner; ++in) {
      const std::size_t base = o * sp.n * sp.inner + in;
      double mx = x[base];
      for (std::size_t i = 1; i < sp.n; ++i) mx = std::max(mx, x[base + i * sp.inner]);
      double z = 0.0;
      for (std::size_t i = 0; i < sp.n; ++i) {
        const double e = std::exp(x[base + i * sp.inner] - mx);
        y[base + i * sp.inner] = e;
        z += e;
      }
      for (std::size_t i = 0; i < sp.n; ++i) y[base + i * sp.inner] /= z;
    }
  if (out.requires_grad()) {
    Tape::current()->record({logits}, out, [logits, out, sp]() mutable {
      std::span<const double> gy = out.grad();
      if (gy.empty()) return;
      auto y = out.data();
      auto gx = logits.grad_mut();
      for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t in = 0; in < sp.inner; ++in) {
          const std::size_t base = o * sp.n * sp.inner + in;
          double dotp = 0.0;
          for (std::size_t i = 0; i < sp.n; ++i) dotp += gy[base + i * sp.inner] * y[base + i * sp.inner];
          for (std::size_t i = 0; i < sp.n; ++i) {
            const std::size_t idx = base + i * sp.inner;
            gx[idx] += y[idx] * (gy[idx] - dotp);
          }
        }
    });
  }
  return out;
}

Tensor log_softmax(const Tensor& logits, std::size_t axis) {
  const AxisSplit sp = split_axis(logits.shape(), axis, "log_softmax");
  require_finite(logits.data(), "log_softmax");
  Tensor out = make_output(logits.shape(), logits.requires_grad());
  const double* x = logits.data().data();
  double* y = out.data().data();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t in = 0; in < sp.inner; ++in) {
      const std::size_t base = o * sp.n * sp.inner + in;
      double mx = x[base];
      for (std::size_t i = 1; i < sp.n; ++i) mx = std::max(mx, x[base + i * sp.inner]);
      double z = 0.0;
      for (std::size_t i = 0; i < sp.n; ++i) z += std::exp(x[base + i * sp.inner] - mx);
      const double lse = mx + std::log(z);
      for (std::size_t i = 0; i < sp.n; ++i) y[base + i * sp.inner] = x[base + i * sp.inner] - lse;
    }
  if (out.requires_grad()) {
    Tape::current()->record({logits}, out, [logits, out, sp]() mutable {
      std::span<const double> gy = out.grad();
      if (gy.empty()) return;
      auto y = out.data();
      auto gx = logits.grad_mut();
      for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t in = 0; in < sp.inner; ++in) {
          const std::size_t base = o * sp.n * sp.inner + in;
          double gsum = 0.0;
          for (std::size_t i = 0; i < sp.n; ++i) gsum += gy[base + i * sp.inner];
          for (std::size_t i = 0; i < sp.n; ++i) {
            const std::size_t idx = base + i * sp.inner;
            gx[idx] += gy[idx] - std::exp(y[idx]) * gsum;
          }
        }
    });
  }
  return out;
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "cross_entropy", "logits");
  const std::size_t b = logits.dim(0), c = logits.dim(1);
  if (labels.size() != b) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch dim 0 = " +
                     std::to_string(b));
  }
  if (b == 0) throw ShapeError("cross_entropy: empty batch");
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= c) {
      throw ShapeError("cross_entropy: label " + std::to_string(l) + " outside [0, " + std::to_string(c) + ")");
    }
  }
  require_finite(logits.data(), "cross_entropy");
  std::vector<double> probs(b * c);
  double loss = 0.0;
  const double* x = logits.data().data();
  for (std::size_t r = 0; r < b; ++r) {
    const double* row = x + r * c;
    double mx = row[0];
    for (std::size_t i = 1; i < c; ++i) mx = std::max(mx, row[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < c; ++i) z += std::exp(row[i] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t i = 0; i < c; ++i) probs[r * c + i] = std::exp(row[i] - lse);
    loss -= row[labels[r]] - lse;
  }
  loss /= static_cast<double>(b);
  Tensor out = make_output({}, logits.requires_grad());
  out.data()[0] = loss;
  if (out.requires_grad()) {
    std::vector<int> lab(labels.begin(), labels.end());
    Tape::current()->record({logits}, out, [logits, out, probs = std::move(probs), lab = std::move(lab), b, c]() mutable {
      std::span<const double> gy = out.grad();
      if (gy.empty()) return;
      const double g = gy[0] / static_cast<double>(b);
      auto gx = logits.grad_mut();
      for (std::size_t r = 0; r < b; ++r)
        for (std::size_t i = 0; i < c; ++i) {
          const double onehot = static_cast<std::size_t>(lab[r]) == i ? 1.0 : 0.0;
          gx[r * c + i] += g * (probs[r * c + i] - onehot);
        }
    });
  }
  return out;
}

Tensor gather(const Tensor& x, std::span<const std::size_t> indices) {
  const std::size_t n = x.numel();
  for (std::size_t idx : indices) {
    if (idx >= n) {
      throw ShapeError("gather: index " + std::to_string(idx) + " out of range for " + std::to_string(n) +
                       " elements");
    }
  }
  Tensor out = make_output({indices.size()}, x.requires_grad());
  auto xv = x.data();
  auto y = out.data();
  for (std::size_t m = 0; m < indices.size(); ++m) y[m] = xv[indices[m]];
  if (out.requires_grad()) {
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    Tape::current()->record({x}, out, [x, out, idx = std::move(idx)]() mutable {
      std::span<const double> gy = out.grad();
      if (gy.empty()) return;
      auto gx = x.grad_mut();
      for (std::size_t m = 0; m < idx.size(); ++m) gx[idx[m]] += gy[m];
    });
  }
  return out;
}

Tensor weighted_sum(const std::vector<Tensor>& xs, const Tensor& weights) {
  if (xs.empty()) throw ShapeError("weighted_sum: no inputs");
  require_rank(weights, 1, "weighted_sum", "weights");
  if (weights.dim(0) != xs.size()) {
    throw ShapeError("weighted_sum: weights dim 0 = " + std::to_string(weights.dim(0)) + " for " +
                     std::to_string(xs.size()) + " inputs");
  }
  bool track = weights.requires_grad();
  for (const Tensor& t : xs) {
    require_same_shape(t, xs.front(), "weighted_sum");
    track = track || t.requires_grad();
  }
  const auto& k = kernels::active();
  Tensor out = make_output(xs.front().shape(), track);
  auto w = weights.data();
  const std::size_t n = out.numel();
  for (std::size_t m = 0; m < xs.size(); ++m) k.axpy(w[m], xs[m].data().data(), out.data().data(), n);
  if (out.requires_grad()) {
    std::vector<Tensor> inputs = xs;
    inputs.push_back(weights);
    Tape::current()->record(std::move(inputs), out, [xs, weights, out, n]() mutable {
      std::span<const double> gy = out.grad();
      if (gy.empty()) return;
      const auto& k = kernels::active();
      auto w = weights.data();
      for (std::size_t m = 0; m < xs.size(); ++m) {
        if (xs[m].requires_grad()) k.axpy(w[m], gy.data(), xs[m].grad_mut().data(), n);
        if (weights.requires_grad()) weights.grad_mut()[m] += k.dot(gy.data(), xs[m].data().data(), n);
      }
    });
  }
  return out;
}

std::uint64_t mac_count() { return t_macs; }
void reset_mac_count() { t_macs = 0; }

}  // namespace shrinknas::ops
