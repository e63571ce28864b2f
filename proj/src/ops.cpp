#include "salclass/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace salclass {

namespace {

using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got " +
                     shape_to_string(t.shape()));
  }
}

struct ConvGeometry {
  Index n, c, h, w, k, kh, kw, stride, padding, oh, ow;
  Index patch() const { return c * kh * kw; }
  Index plane() const { return oh * ow; }
};

void im2col(const double* image, const ConvGeometry& g, double* cols) {
  for (Index c = 0; c < g.c; ++c) {
    for (Index ki = 0; ki < g.kh; ++ki) {
      for (Index kj = 0; kj < g.kw; ++kj) {
        double* row = cols + ((c * g.kh + ki) * g.kw + kj) * g.plane();
        for (Index oy = 0; oy < g.oh; ++oy) {
          const Index iy = oy * g.stride - g.padding + ki;
          double* dst = row + oy * g.ow;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.ow, 0.0);
            continue;
          }
          const double* src = image + (c * g.h + iy) * g.w;
          for (Index ox = 0; ox < g.ow; ++ox) {
            const Index ix = ox * g.stride - g.padding + kj;
            dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, const ConvGeometry& g, double* image) {
  for (Index c = 0; c < g.c; ++c) {
    for (Index ki = 0; ki < g.kh; ++ki) {
      for (Index kj = 0; kj < g.kw; ++kj) {
        const double* row = cols + ((c * g.kh + ki) * g.kw + kj) * g.plane();
        for (Index oy = 0; oy < g.oh; ++oy) {
          const Index iy = oy * g.stride - g.padding + ki;
          if (iy < 0 || iy >= g.h) continue;
          double* dst = image + (c * g.h + iy) * g.w;
          const double* src = row + oy * g.ow;
          for (Index ox = 0; ox < g.ow; ++ox) {
            const Index ix = ox * g.stride - g.padding + kj;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

struct AxisWeights {
  std::vector<Index> lo, hi;
  std::vector<double> frac;
};

AxisWeights align_corners_axis(Index in, Index out) {
  AxisWeights a;
  a.lo.resize(out);
  a.hi.resize(out);
  a.frac.resize(out);
  for (Index i = 0; i < out; ++i) {
    // Integer numerator keeps the last target exactly on the last source.
    const double src = out > 1 ? static_cast<double>(i * (in - 1)) / static_cast<double>(out - 1) : 0.0;
    Index lo = static_cast<Index>(std::floor(src));
    lo = std::min(lo, in - 1);
    a.lo[i] = lo;
    a.hi[i] = std::min(lo + 1, in - 1);
    a.frac[i] = src - static_cast<double>(lo);
  }
  return a;
}

}  // namespace

Index pooled_extent(Index extent, Index window, Index stride, bool ceil_mode) {
  const Index span = extent - window;
  Index out = ceil_mode ? (span + stride - 1) / stride + 1 : span / stride + 1;
  // A clipped window must still start inside the input.
  if (ceil_mode && (out - 1) * stride >= extent) --out;
  return out;
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, Index stride, Index padding) {
  require_rank(input, 4, "conv2d", "input");
  require_rank(kernel, 4, "conv2d", "kernel");
  require_rank(bias, 1, "conv2d", "bias");
  if (stride < 1) throw ShapeError("conv2d: stride must be positive");
  if (padding < 0) throw ShapeError("conv2d: padding must be non-negative");
  ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), input.dim(3), kernel.dim(0), kernel.dim(2),
                 kernel.dim(3), stride, padding, 0, 0};
  if (kernel.dim(1) != g.c) {
    throw ShapeError("conv2d: kernel " + shape_to_string(kernel.shape()) + " expects " +
                     std::to_string(kernel.dim(1)) + " input channels, input " + shape_to_string(input.shape()) +
                     " has " + std::to_string(g.c));
  }
  if (bias.dim(0) != g.k) {
    throw ShapeError("conv2d: bias " + shape_to_string(bias.shape()) + " does not match " +
                     std::to_string(g.k) + " kernels");
  }
  if (g.h + 2 * padding < g.kh || g.w + 2 * padding < g.kw) {
    throw ShapeError("conv2d: kernel " + shape_to_string(kernel.shape()) + " larger than padded input " +
                     shape_to_string(input.shape()));
  }
  g.oh = (g.h + 2 * padding - g.kh) / stride + 1;
  g.ow = (g.w + 2 * padding - g.kw) / stride + 1;

  const Index in_sample = g.c * g.h * g.w;
  const Index out_sample = g.k * g.plane();
  const Index col_size = g.patch() * g.plane();
  const bool keep_cols = grad_enabled() && kernel.requires_grad();

  Eigen::VectorXd out(g.n * out_sample);
  Eigen::VectorXd saved_cols(keep_cols ? g.n * col_size : 0);
  Eigen::VectorXd scratch(keep_cols ? 0 : col_size);
  const ConstRowMap weights(kernel.data(), g.k, g.patch());
  const Eigen::Map<const Eigen::VectorXd> b(bias.data(), g.k);

  for (Index n = 0; n < g.n; ++n) {
    double* cols = keep_cols ? saved_cols.data() + n * col_size : scratch.data();
    im2col(input.data() + n * in_sample, g, cols);
    RowMap result(out.data() + n * out_sample, g.k, g.plane());
    result.noalias() = weights * ConstRowMap(cols, g.patch(), g.plane());
    result.colwise() += b;
  }

  return make_result(
      "conv2d", {g.n, g.k, g.oh, g.ow}, std::move(out), {input.node(), kernel.node(), bias.node()},
      [g, cols = std::move(saved_cols), in_sample, out_sample, col_size](Node& self) {
        Node& x = *self.inputs[0];
        Node& w = *self.inputs[1];
        Node& b = *self.inputs[2];
        const ConstRowMap weights(w.value.data(), g.k, g.patch());
        RowMatrix dcols;
        for (Index n = 0; n < g.n; ++n) {
          const ConstRowMap dout(self.grad.data() + n * out_sample, g.k, g.plane());
          if (w.requires_grad) {
            RowMap dw(w.ensure_grad().data(), g.k, g.patch());
            dw.noalias() += dout * ConstRowMap(cols.data() + n * col_size, g.patch(), g.plane()).transpose();
          }
          if (b.requires_grad) b.ensure_grad() += dout.rowwise().sum();
          if (x.requires_grad) {
            dcols.noalias() = weights.transpose() * dout;
            col2im(dcols.data(), g, x.ensure_grad().data() + n * in_sample);
          }
        }
      });
}

MaxPoolResult maxpool2d(const Tensor& input, Index window, Index stride, bool ceil_mode) {
  require_rank(input, 4, "maxpool2d", "input");
  if (window < 1 || stride < 1) throw ShapeError("maxpool2d: window and stride must be positive");
  const Index n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h < window || w < window) {
    throw ShapeError("maxpool2d: window " + std::to_string(window) + " larger than spatial extent of " +
                     shape_to_string(input.shape()));
  }
  const Index oh = pooled_extent(h, window, stride, ceil_mode);
  const Index ow = pooled_extent(w, window, stride, ceil_mode);
  Eigen::VectorXd out(n * c * oh * ow);
  std::vector<Index> argmax(static_cast<std::size_t>(out.size()));
  const double* x = input.data();
  Index o = 0;
  for (Index plane = 0; plane < n * c; ++plane) {
    const Index base = plane * h * w;
    for (Index oy = 0; oy < oh; ++oy) {
      const Index y0 = oy * stride, y1 = std::min(y0 + window, h);
      for (Index ox = 0; ox < ow; ++ox, ++o) {
        const Index x0 = ox * stride, x1 = std::min(x0 + window, w);
        Index best = base + y0 * w + x0;
        for (Index yy = y0; yy < y1; ++yy) {
          for (Index xx = x0; xx < x1; ++xx) {
            const Index idx = base + yy * w + xx;
            if (x[idx] > x[best]) best = idx;  // strict: first occurrence wins ties
          }
        }
        out[o] = x[best];
        argmax[static_cast<std::size_t>(o)] = best;
      }
    }
  }
  Tensor result = make_result("maxpool2d", {n, c, oh, ow}, std::move(out), {input.node()},
                              [argmax](Node& self) {
                                Eigen::VectorXd& dx = self.inputs[0]->ensure_grad();
                                for (std::size_t i = 0; i < argmax.size(); ++i) {
                                  dx[argmax[i]] += self.grad[static_cast<Index>(i)];
                                }
                              });
  return {std::move(result), std::move(argmax)};
}

Tensor relu(const Tensor& input) {
  Eigen::VectorXd out = input.values().cwiseMax(0.0);
  return make_result("relu", input.shape(), std::move(out), {input.node()}, [](Node& self) {
    Node& x = *self.inputs[0];
    x.accumulate_grad((x.value.array() > 0.0).select(self.grad, 0.0));
  });
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank(input, 2, "linear", "input");
  require_rank(weight, 2, "linear", "weight");
  require_rank(bias, 1, "linear", "bias");
  const Index n = input.dim(0), d = input.dim(1), m = weight.dim(0);
  if (weight.dim(1) != d || bias.dim(0) != m) {
    throw ShapeError("linear: input " + shape_to_string(input.shape()) + ", weight " +
                     shape_to_string(weight.shape()) + ", bias " + shape_to_string(bias.shape()) +
                     " are inconsistent");
  }
  Eigen::VectorXd out(n * m);
  RowMap y(out.data(), n, m);
  y.noalias() = ConstRowMap(input.data(), n, d) * ConstRowMap(weight.data(), m, d).transpose();
  y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.data(), m);
  return make_result("linear", {n, m}, std::move(out), {input.node(), weight.node(), bias.node()},
                     [n, d, m](Node& self) {
                       Node& x = *self.inputs[0];
                       Node& w = *self.inputs[1];
                       Node& b = *self.inputs[2];
                       const ConstRowMap dy(self.grad.data(), n, m);
                       if (x.requires_grad) {
                         RowMap dx(x.ensure_grad().data(), n, d);
                         dx.noalias() += dy * ConstRowMap(w.value.data(), m, d);
                       }
                       if (w.requires_grad) {
                         RowMap dw(w.ensure_grad().data(), m, d);
                         dw.noalias() += dy.transpose() * ConstRowMap(x.value.data(), n, d);
                       }
                       if (b.requires_grad) b.ensure_grad() += dy.colwise().sum().transpose();
                     });
}

Tensor softmax(const Tensor& input) {
  require_rank(input, 2, "softmax", "input");
  const Index n = input.dim(0), k = input.dim(1);
  Eigen::VectorXd out(n * k);
  const ConstRowMap x(input.data(), n, k);
  RowMap y(out.data(), n, k);
  for (Index r = 0; r < n; ++r) {
    const double peak = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - peak).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  return make_result("softmax", {n, k}, out, {input.node()}, [n, k](Node& self) {
    const ConstRowMap y(self.value.data(), n, k);
    const ConstRowMap dy(self.grad.data(), n, k);
    RowMap dx(self.inputs[0]->ensure_grad().data(), n, k);
    for (Index r = 0; r < n; ++r) {
      const double dot = y.row(r).dot(dy.row(r));
      dx.row(r).array() += y.row(r).array() * (dy.row(r).array() - dot);
    }
  });
}

Tensor batchnorm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats,
                   NormMode mode, double epsilon, double momentum) {
  require_rank(input, 4, "batchnorm2d", "input");
  const Index n = input.dim(0), c = input.dim(1), hw = input.dim(2) * input.dim(3);
  if (gamma.size() != c || beta.size() != c || stats.running_mean.size() != c ||
      stats.running_var.size() != c) {
    throw ShapeError("batchnorm2d: parameters do not match " + std::to_string(c) + " channels");
  }
  const Index count = n * hw;
  if (mode == NormMode::train && count < 2) {
    throw DegenerateError("batchnorm2d: train mode needs at least 2 values per channel, got " +
                          std::to_string(count));
  }

  Eigen::VectorXd mu(c), inv_std(c);
  const double* x = input.data();
  for (Index ch = 0; ch < c; ++ch) {
    if (mode == NormMode::train) {
      double s = 0.0;
      for (Index i = 0; i < n; ++i) {
        s += Eigen::Map<const Eigen::VectorXd>(x + (i * c + ch) * hw, hw).sum();
      }
      const double m = s / static_cast<double>(count);
      double ss = 0.0;
      for (Index i = 0; i < n; ++i) {
        ss += (Eigen::Map<const Eigen::VectorXd>(x + (i * c + ch) * hw, hw).array() - m).square().sum();
      }
      const double var = ss / static_cast<double>(count);
      mu[ch] = m;
      inv_std[ch] = 1.0 / std::sqrt(var + epsilon);
      const double unbiased = ss / static_cast<double>(count - 1);
      stats.running_mean[ch] = (1.0 - momentum) * stats.running_mean[ch] + momentum * m;
      stats.running_var[ch] = (1.0 - momentum) * stats.running_var[ch] + momentum * unbiased;
    } else {
      mu[ch] = stats.running_mean[ch];
      inv_std[ch] = 1.0 / std::sqrt(stats.running_var[ch] + epsilon);
    }
  }

  Eigen::VectorXd xhat(input.size());
  Eigen::VectorXd out(input.size());
  for (Index i = 0; i < n; ++i) {
    for (Index ch = 0; ch < c; ++ch) {
      const Index off = (i * c + ch) * hw;
      auto xh = xhat.segment(off, hw);
      xh = (Eigen::Map<const Eigen::VectorXd>(x + off, hw).array() - mu[ch]) * inv_std[ch];
      out.segment(off, hw) = (xh.array() * gamma.data()[ch] + beta.data()[ch]).matrix();
    }
  }

  return make_result(
      "batchnorm2d", input.shape(), std::move(out), {input.node(), gamma.node(), beta.node()},
      [n, c, hw, count, mode, xhat = std::move(xhat), inv_std](Node& self) {
        Node& x = *self.inputs[0];
        Node& g = *self.inputs[1];
        Node& b = *self.inputs[2];
        for (Index ch = 0; ch < c; ++ch) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (Index i = 0; i < n; ++i) {
            const Index off = (i * c + ch) * hw;
            sum_dy += self.grad.segment(off, hw).sum();
            sum_dy_xhat += self.grad.segment(off, hw).dot(xhat.segment(off, hw));
          }
          if (g.requires_grad) g.ensure_grad()[ch] += sum_dy_xhat;
          if (b.requires_grad) b.ensure_grad()[ch] += sum_dy;
          if (!x.requires_grad) continue;
          const double gam = g.value[ch];
          Eigen::VectorXd& dx = x.ensure_grad();
          for (Index i = 0; i < n; ++i) {
            const Index off = (i * c + ch) * hw;
            if (mode == NormMode::train) {
              const double m = static_cast<double>(count);
              dx.segment(off, hw).array() +=
                  gam * inv_std[ch] / m *
                  (m * self.grad.segment(off, hw).array() - sum_dy - xhat.segment(off, hw).array() * sum_dy_xhat);
            } else {
              dx.segment(off, hw) += gam * inv_std[ch] * self.grad.segment(off, hw);
            }
          }
        }
      });
}

Tensor bilinear_upsample(const Tensor& input, Index out_h, Index out_w) {
  require_rank(input, 4, "bilinear_upsample", "input");
  if (out_h < 1 || out_w < 1) {
    throw ShapeError("bilinear_upsample: output extent must be positive, got " + std::to_string(out_h) + "x" +
                     std::to_string(out_w));
  }
  const Index planes = input.dim(0) * input.dim(1), h = input.dim(2), w = input.dim(3);
  auto ay = align_corners_axis(h, out_h);
  auto ax = align_corners_axis(w, out_w);
  Eigen::VectorXd out(planes * out_h * out_w);
  const double* x = input.data();
  double* y = out.data();
  for (Index p = 0; p < planes; ++p) {
    const double* src = x + p * h * w;
    for (Index i = 0; i < out_h; ++i) {
      const double fy = ay.frac[i];
      const double* r0 = src + ay.lo[i] * w;
      const double* r1 = src + ay.hi[i] * w;
      for (Index j = 0; j < out_w; ++j, ++y) {
        const double fx = ax.frac[j];
        const double top = (1.0 - fx) * r0[ax.lo[j]] + fx * r0[ax.hi[j]];
        const double bottom = (1.0 - fx) * r1[ax.lo[j]] + fx * r1[ax.hi[j]];
        *y = (1.0 - fy) * top + fy * bottom;
      }
    }
  }
  return make_result(
      "bilinear_upsample", {input.dim(0), input.dim(1), out_h, out_w}, std::move(out), {input.node()},
      [planes, h, w, out_h, out_w, ay = std::move(ay), ax = std::move(ax)](Node& self) {
        double* dx = self.inputs[0]->ensure_grad().data();
        const double* dy = self.grad.data();
        for (Index p = 0; p < planes; ++p) {
          double* dst = dx + p * h * w;
          for (Index i = 0; i < out_h; ++i) {
            const double fy = ay.frac[i];
            double* r0 = dst + ay.lo[i] * w;
            double* r1 = dst + ay.hi[i] * w;
            for (Index j = 0; j < out_w; ++j, ++dy) {
              const double fx = ax.frac[j];
              const double g = *dy;
              r0[ax.lo[j]] += (1.0 - fy) * (1.0 - fx) * g;
              r0[ax.hi[j]] += (1.0 - fy) * fx * g;
              r1[ax.lo[j]] += fy * (1.0 - fx) * g;
              r1[ax.hi[j]] += fy * fx * g;
            }
          }
        }
      });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 4, "concat_channels", "first input");
  require_rank(b, 4, "concat_channels", "second input");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw ShapeError("concat_channels: " + shape_to_string(a.shape()) + " and " + shape_to_string(b.shape()) +
                     " differ outside the channel axis");
  }
  const Index n = a.dim(0), hw = a.dim(2) * a.dim(3);
  const Index sa = a.dim(1) * hw, sb = b.dim(1) * hw;
  Eigen::VectorXd out(n * (sa + sb));
  for (Index i = 0; i < n; ++i) {
    out.segment(i * (sa + sb), sa) = a.values().segment(i * sa, sa);
    out.segment(i * (sa + sb) + sa, sb) = b.values().segment(i * sb, sb);
  }
  return make_result("concat_channels", {n, a.dim(1) + b.dim(1), a.dim(2), a.dim(3)}, std::move(out),
                     {a.node(), b.node()}, [n, sa, sb](Node& self) {
                       Node& na = *self.inputs[0];
                       Node& nb = *self.inputs[1];
                       for (Index i = 0; i < n; ++i) {
                         if (na.requires_grad) {
                           na.ensure_grad().segment(i * sa, sa) += self.grad.segment(i * (sa + sb), sa);
                         }
                         if (nb.requires_grad) {
                           nb.ensure_grad().segment(i * sb, sb) += self.grad.segment(i * (sa + sb) + sa, sb);
                         }
                       }
                     });
}

Tensor global_avg_pool(const Tensor& input) {
  require_rank(input, 4, "global_avg_pool", "input");
  const Index planes = input.dim(0) * input.dim(1), hw = input.dim(2) * input.dim(3);
  const ConstRowMap x(input.data(), planes, hw);
  Eigen::VectorXd out = x.rowwise().mean();
  return make_result("global_avg_pool", {input.dim(0), input.dim(1)}, std::move(out), {input.node()},
                     [planes, hw](Node& self) {
                       RowMap dx(self.inputs[0]->ensure_grad().data(), planes, hw);
                       dx.colwise() += self.grad / static_cast<double>(hw);
                     });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  }
  return make_result("add", a.shape(), a.values() + b.values(), {a.node(), b.node()}, [](Node& self) {
    for (auto& in : self.inputs) {
      if (in->requires_grad) in->accumulate_grad(self.grad);
    }
  });
}

Tensor scale(const Tensor& input, double factor) {
  return make_result("scale", input.shape(), input.values() * factor, {input.node()},
                     [factor](Node& self) { self.inputs[0]->accumulate_grad(self.grad * factor); });
}

Tensor sum(const Tensor& input) {
  return make_result("sum", {1}, Eigen::VectorXd::Constant(1, input.values().sum()), {input.node()},
                     [](Node& self) {
                       Node& x = *self.inputs[0];
                       x.accumulate_grad(Eigen::VectorXd::Constant(x.value.size(), self.grad[0]));
                     });
}

Tensor mean(const Tensor& input) {
  const double n = static_cast<double>(input.size());
  return make_result("mean", {1}, Eigen::VectorXd::Constant(1, input.values().sum() / n), {input.node()},
                     [n](Node& self) {
                       Node& x = *self.inputs[0];
                       x.accumulate_grad(Eigen::VectorXd::Constant(x.value.size(), self.grad[0] / n));
                     });
}

Tensor mse(const Tensor& prediction, const Tensor& target) {
  if (prediction.shape() != target.shape()) {
    throw ShapeError("mse: prediction " + shape_to_string(prediction.shape()) + " vs target " +
                     shape_to_string(target.shape()));
  }
  const double n = static_cast<double>(prediction.size());
  Eigen::VectorXd diff = prediction.values() - target.values();
  const double loss = diff.squaredNorm() / n;
  return make_result("mse", {1}, Eigen::VectorXd::Constant(1, loss), {prediction.node(), target.node()},
                     [diff = std::move(diff), n](Node& self) {
                       const double g = 2.0 * self.grad[0] / n;
                       if (self.inputs[0]->requires_grad) self.inputs[0]->accumulate_grad(g * diff);
                       if (self.inputs[1]->requires_grad) self.inputs[1]->accumulate_grad(-g * diff);
                     });
}

Tensor cross_entropy(const Tensor& probs, std::span<const int> labels) {
  require_rank(probs, 2, "cross_entropy", "probs");
  const Index n = probs.dim(0), k = probs.dim(1);
  if (static_cast<Index>(labels.size()) != n) {
    throw ContractError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) +
                        " rows");
  }
  std::vector<int> targets(labels.begin(), labels.end());
  double total = 0.0;
  for (Index r = 0; r < n; ++r) {
    const int t = targets[static_cast<std::size_t>(r)];
    if (t < 0 || t >= k) {
      throw ContractError("cross_entropy: class index " + std::to_string(t) + " outside [0," +
                          std::to_string(k) + ")");
    }
    total -= std::log(std::max(probs.data()[r * k + t], kProbabilityFloor));
  }
  return make_result("cross_entropy", {1}, Eigen::VectorXd::Constant(1, total / static_cast<double>(n)),
                     {probs.node()}, [n, k, targets = std::move(targets)](Node& self) {
                       Node& p = *self.inputs[0];
                       Eigen::VectorXd& dp = p.ensure_grad();
                       const double g = self.grad[0] / static_cast<double>(n);
                       for (Index r = 0; r < n; ++r) {
                         const Index idx = r * k + targets[static_cast<std::size_t>(r)];
                         const double y = p.value[idx];
                         if (y > kProbabilityFloor) dp[idx] -= g / y;
                       }
                     });
}

}  // namespace salclass
