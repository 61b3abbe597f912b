// diffcore/layers.hpp

// Copyright 2026 The affectkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Forward passes are const and write their intermediates into caller-owned
// caches, so evaluation-only passes can share a model across threads.
// backward() accumulates into Parameter::grad and is single-writer.

#ifndef AFFECTKIT_LAYERS_HPP
#define AFFECTKIT_LAYERS_HPP

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "affectkit/metrics.hpp"
#include "affectkit/tensor.hpp"

namespace affectkit {

// ---------------------------------------------------------------------------
// Dense: y = xW + b over the trailing axis.

struct DenseCache {
  Tensor x;  // [n, in]
};

class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng)
      : w_(name + ".w", glorot_uniform({in, out}, in, out, rng)),
        b_(name + ".b", Tensor({out})), in_(in), out_(out) {}

  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }

  Tensor forward(const Tensor& x, DenseCache& cache) const {
    check_input(x.rank() == 2 && x.dim(1) == in_,
                "dense input width mismatch: got " +
                    std::to_string(x.rank() == 2 ? x.dim(1) : 0) + ", want " +
                    std::to_string(in_));
    const std::size_t n = x.dim(0);
    Tensor y({n, out_});
    y.mat(n, out_).noalias() = x.mat(n, in_) * w_.value.mat(in_, out_);
    y.mat(n, out_).rowwise() +=
        b_.value.mat(1, out_).row(0);
    cache.x = x;
    return y;
  }

  Tensor backward(const Tensor& dy, const DenseCache& cache) {
    const std::size_t n = cache.x.dim(0);
    check_input(dy.rank() == 2 && dy.dim(0) == n && dy.dim(1) == out_,
                "dense backward shape mismatch");
    w_.grad.mat(in_, out_).noalias() +=
        cache.x.mat(n, in_).transpose() * dy.mat(n, out_);
    b_.grad.mat(1, out_).row(0) += dy.mat(n, out_).colwise().sum();
    Tensor dx({n, in_});
    dx.mat(n, in_).noalias() = dy.mat(n, out_) * w_.value.mat(in_, out_).transpose();
    return dx;
  }

  Parameter& weight() { return w_; }
  Parameter& bias() { return b_; }
  const Parameter& weight() const { return w_; }
  const Parameter& bias() const { return b_; }

  void collect(std::vector<Parameter*>& out) {
    out.push_back(&w_);
    out.push_back(&b_);
  }

 private:
  Parameter w_, b_;
  std::size_t in_ = 0, out_ = 0;
};

// ---------------------------------------------------------------------------
// Elementwise tanh.

struct TanhCache {
  Tensor y;
};

inline Tensor tanh_forward(const Tensor& x, TanhCache& cache) {
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(y[i]);
  cache.y = y;
  return y;
}

inline Tensor tanh_backward(const Tensor& dy, const TanhCache& cache) {
  check_input(dy.same_shape(cache.y), "tanh backward shape mismatch");
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i)
    dx[i] *= 1.0 - cache.y[i] * cache.y[i];
  return dx;
}

// ---------------------------------------------------------------------------
// Time convolution with additive skip connection:
//   y = tanh(conv1d_time(x) + x)
// Channels are preserved (the skip is additive) and the kernel width is odd;
// sequence edges are zero padded.

struct TimeConvCache {
  Tensor x;  // [b, f, ch]
  Tensor y;  // post-tanh output
};

class TimeConv {
 public:
  TimeConv() = default;
  TimeConv(const std::string& name, std::size_t channels, std::size_t kernel,
           Rng& rng)
      : k_(name + ".k", glorot_uniform({kernel, channels, channels},
                                       kernel * channels, kernel * channels,
                                       rng)),
        b_(name + ".b", Tensor({channels})), ch_(channels), kw_(kernel) {
    check_input(kernel % 2 == 1, "time-conv kernel width must be odd");
    check_input(channels >= 1, "time-conv needs at least one channel");
  }

  std::size_t channels() const { return ch_; }
  std::size_t kernel() const { return kw_; }

  Tensor forward(const Tensor& x, TimeConvCache& cache) const {
    check_input(x.rank() == 3 && x.dim(2) == ch_, "time-conv input mismatch");
    const std::size_t b = x.dim(0), f = x.dim(1);
    const std::size_t half = kw_ / 2;
    Tensor y({b, f, ch_});
    ConstMatMap kmat = k_.value.mat(kw_ * ch_, ch_);
    EigenRowMat cols(f, kw_ * ch_);
    for (std::size_t bi = 0; bi < b; ++bi) {
      cols.setZero();
      for (std::size_t t = 0; t < f; ++t) {
        for (std::size_t dt = 0; dt < kw_; ++dt) {
          const std::ptrdiff_t src =
              static_cast<std::ptrdiff_t>(t + dt) - static_cast<std::ptrdiff_t>(half);
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(f)) continue;
          for (std::size_t ci = 0; ci < ch_; ++ci)
            cols(t, dt * ch_ + ci) = x.at(bi, static_cast<std::size_t>(src), ci);
        }
      }
      EigenRowMat pre = cols * kmat;
      for (std::size_t t = 0; t < f; ++t)
        for (std::size_t co = 0; co < ch_; ++co)
          y.at(bi, t, co) =
              std::tanh(pre(t, co) + b_.value[co] + x.at(bi, t, co));
    }
    cache.x = x;
    cache.y = y;
    return y;
  }

  Tensor backward(const Tensor& dy, const TimeConvCache& cache) {
    check_input(dy.same_shape(cache.y), "time-conv backward shape mismatch");
    const std::size_t b = dy.dim(0), f = dy.dim(1);
    const std::size_t half = kw_ / 2;
    Tensor dx({b, f, ch_});
    MatMap kgrad = k_.grad.mat(kw_ * ch_, ch_);
    ConstMatMap kmat = std::as_const(k_.value).mat(kw_ * ch_, ch_);
    EigenRowMat cols(f, kw_ * ch_), dpre(f, ch_);
    for (std::size_t bi = 0; bi < b; ++bi) {
      cols.setZero();
      for (std::size_t t = 0; t < f; ++t) {
        for (std::size_t dt = 0; dt < kw_; ++dt) {
          const std::ptrdiff_t src =
              static_cast<std::ptrdiff_t>(t + dt) - static_cast<std::ptrdiff_t>(half);
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(f)) continue;
          for (std::size_t ci = 0; ci < ch_; ++ci)
            cols(t, dt * ch_ + ci) =
                cache.x.at(bi, static_cast<std::size_t>(src), ci);
        }
      }
      for (std::size_t t = 0; t < f; ++t) {
        for (std::size_t co = 0; co < ch_; ++co) {
          const double yv = cache.y.at(bi, t, co);
          dpre(t, co) = dy.at(bi, t, co) * (1.0 - yv * yv);
          b_.grad[co] += dpre(t, co);
        }
      }
      kgrad.noalias() += cols.transpose() * dpre;
      EigenRowMat dcols = dpre * kmat.transpose();
      for (std::size_t t = 0; t < f; ++t) {
        for (std::size_t dt = 0; dt < kw_; ++dt) {
          const std::ptrdiff_t src =
              static_cast<std::ptrdiff_t>(t + dt) - static_cast<std::ptrdiff_t>(half);
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(f)) continue;
          for (std::size_t ci = 0; ci < ch_; ++ci)
            dx.at(bi, static_cast<std::size_t>(src), ci) += dcols(t, dt * ch_ + ci);
        }
        for (std::size_t ci = 0; ci < ch_; ++ci)
          dx.at(bi, t, ci) += dpre(t, ci);  // skip connection
      }
    }
    return dx;
  }

  Parameter& kernel_param() { return k_; }
  Parameter& bias() { return b_; }

  void collect(std::vector<Parameter*>& out) {
    out.push_back(&k_);
    out.push_back(&b_);
  }

 private:
  Parameter k_, b_;
  std::size_t ch_ = 0, kw_ = 0;
};

// ---------------------------------------------------------------------------
// Stacked GRU.  Cell equations per layer:
//   z_t = sigmoid(x_t Wz + h_{t-1} Uz + bz)
//   r_t = sigmoid(x_t Wr + h_{t-1} Ur + br)
//   c_t = tanh(x_t Wh + (r_t . h_{t-1}) Uh + bh)
//   h_t = (1 - z_t) . c_t + z_t . h_{t-1},  h_0 = 0
// The full output sequence of the top layer is returned; backward is exact
// backprop through time.

struct GruLayerCache {
  Tensor x;           // [b, f, in] input to the layer
  Tensor z, r, c, h;  // [b, f, hidden]
};

struct GruCache {
  std::vector<GruLayerCache> layers;
};

class Gru {
 public:
  Gru() = default;
  Gru(const std::string& name, std::size_t input, std::size_t hidden,
      std::size_t n_layers, Rng& rng) {
    check_input(hidden >= 1 && n_layers >= 1, "bad GRU geometry");
    for (std::size_t l = 0; l < n_layers; ++l) {
      const std::size_t in = l == 0 ? input : hidden;
      const std::string base = name + ".l" + std::to_string(l);
      Cell cell;
      cell.in = in;
      cell.hidden = hidden;
      cell.wz = Parameter(base + ".wz", glorot_uniform({in, hidden}, in, hidden, rng));
      cell.uz = Parameter(base + ".uz", glorot_uniform({hidden, hidden}, hidden, hidden, rng));
      cell.bz = Parameter(base + ".bz", Tensor({hidden}));
      cell.wr = Parameter(base + ".wr", glorot_uniform({in, hidden}, in, hidden, rng));
      cell.ur = Parameter(base + ".ur", glorot_uniform({hidden, hidden}, hidden, hidden, rng));
      cell.br = Parameter(base + ".br", Tensor({hidden}));
      cell.wh = Parameter(base + ".wh", glorot_uniform({in, hidden}, in, hidden, rng));
      cell.uh = Parameter(base + ".uh", glorot_uniform({hidden, hidden}, hidden, hidden, rng));
      cell.bh = Parameter(base + ".bh", Tensor({hidden}));
      cells_.push_back(std::move(cell));
    }
  }

  std::size_t hidden() const { return cells_.back().hidden; }
  std::size_t input() const { return cells_.front().in; }
  std::size_t layers() const { return cells_.size(); }

  Tensor forward(const Tensor& x, GruCache& cache) const {
    check_input(x.rank() == 3 && x.dim(2) == cells_.front().in,
                "GRU input width mismatch");
    cache.layers.assign(cells_.size(), {});
    Tensor cur = x;
    for (std::size_t l = 0; l < cells_.size(); ++l) {
      cur = forward_layer(cells_[l], cur, cache.layers[l]);
    }
    return cur;
  }

  // dtop: gradient on the top layer's output sequence; returns dx.
  Tensor backward(const Tensor& dtop, const GruCache& cache) {
    Tensor d = dtop;
    for (std::size_t l = cells_.size(); l > 0; --l)
      d = backward_layer(cells_[l - 1], d, cache.layers[l - 1]);
    return d;
  }

  void collect(std::vector<Parameter*>& out) {
    for (auto& c : cells_) {
      out.push_back(&c.wz);
      out.push_back(&c.uz);
      out.push_back(&c.bz);
      out.push_back(&c.wr);
      out.push_back(&c.ur);
      out.push_back(&c.br);
      out.push_back(&c.wh);
      out.push_back(&c.uh);
      out.push_back(&c.bh);
    }
  }

 private:
  struct Cell {
    Parameter wz, uz, bz, wr, ur, br, wh, uh, bh;
    std::size_t in = 0, hidden = 0;
  };

  static Tensor forward_layer(const Cell& cell, const Tensor& x,
                              GruLayerCache& cache) {
    const std::size_t b = x.dim(0), f = x.dim(1), h = cell.hidden;
    cache.x = x;
    cache.z = Tensor({b, f, h});
    cache.r = Tensor({b, f, h});
    cache.c = Tensor({b, f, h});
    cache.h = Tensor({b, f, h});
    EigenRowMat hprev = EigenRowMat::Zero(b, h);
    EigenRowMat z(b, h), r(b, h), cand(b, h), q(b, h);
    ConstMatMap wz = cell.wz.value.mat(cell.in, h), uz = cell.uz.value.mat(h, h);
    ConstMatMap wr = cell.wr.value.mat(cell.in, h), ur = cell.ur.value.mat(h, h);
    ConstMatMap wh = cell.wh.value.mat(cell.in, h), uh = cell.uh.value.mat(h, h);
    ConstMatMap bz = cell.bz.value.mat(1, h), br = cell.br.value.mat(1, h),
                bh = cell.bh.value.mat(1, h);
    for (std::size_t t = 0; t < f; ++t) {
      auto xt = cache.x.step(t);
      z.noalias() = xt * wz + hprev * uz;
      z.rowwise() += bz.row(0);
      z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      r.noalias() = xt * wr + hprev * ur;
      r.rowwise() += br.row(0);
      r = r.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      q = r.cwiseProduct(hprev);
      cand.noalias() = xt * wh + q * uh;
      cand.rowwise() += bh.row(0);
      cand = cand.unaryExpr([](double v) { return std::tanh(v); });
      hprev = (1.0 - z.array()).matrix().cwiseProduct(cand) +
              z.cwiseProduct(hprev);
      cache.z.step(t) = z;
      cache.r.step(t) = r;
      cache.c.step(t) = cand;
      cache.h.step(t) = hprev;
    }
    return cache.h;
  }

  static Tensor backward_layer(Cell& cell, const Tensor& dtop,
                               const GruLayerCache& cache) {
    const std::size_t b = cache.x.dim(0), f = cache.x.dim(1), h = cell.hidden;
    check_input(dtop.rank() == 3 && dtop.dim(0) == b && dtop.dim(1) == f &&
                    dtop.dim(2) == h,
                "GRU backward shape mismatch");
    Tensor dx({b, f, cell.in});
    EigenRowMat dh = EigenRowMat::Zero(b, h);
    ConstMatMap wz = std::as_const(cell.wz.value).mat(cell.in, h),
                uz = std::as_const(cell.uz.value).mat(h, h);
    ConstMatMap wr = std::as_const(cell.wr.value).mat(cell.in, h),
                ur = std::as_const(cell.ur.value).mat(h, h);
    ConstMatMap wh = std::as_const(cell.wh.value).mat(cell.in, h),
                uh = std::as_const(cell.uh.value).mat(h, h);
    MatMap gwz = cell.wz.grad.mat(cell.in, h), guz = cell.uz.grad.mat(h, h);
    MatMap gwr = cell.wr.grad.mat(cell.in, h), gur = cell.ur.grad.mat(h, h);
    MatMap gwh = cell.wh.grad.mat(cell.in, h), guh = cell.uh.grad.mat(h, h);
    MatMap gbz = cell.bz.grad.mat(1, h), gbr = cell.br.grad.mat(1, h),
           gbh = cell.bh.grad.mat(1, h);
    EigenRowMat hprev(b, h), z(b, h), r(b, h), cand(b, h);
    EigenRowMat dz(b, h), dr(b, h), dc(b, h), dq(b, h);
    for (std::size_t t = f; t > 0; --t) {
      const std::size_t ti = t - 1;
      dh += dtop.step(ti);
      if (ti == 0)
        hprev.setZero();
      else
        hprev = cache.h.step(ti - 1);
      z = cache.z.step(ti);
      r = cache.r.step(ti);
      cand = cache.c.step(ti);
      // h = (1-z).c + z.hprev
      dz = dh.cwiseProduct(hprev - cand)
               .cwiseProduct(z)
               .cwiseProduct((1.0 - z.array()).matrix());
      dc = dh.cwiseProduct((1.0 - z.array()).matrix())
               .cwiseProduct((1.0 - cand.array().square()).matrix());
      dq.noalias() = dc * uh.transpose();
      dr = dq.cwiseProduct(hprev)
               .cwiseProduct(r)
               .cwiseProduct((1.0 - r.array()).matrix());
      auto xt = cache.x.step(ti);
      gwz.noalias() += xt.transpose() * dz;
      guz.noalias() += hprev.transpose() * dz;
      gbz.row(0) += dz.colwise().sum();
      gwr.noalias() += xt.transpose() * dr;
      gur.noalias() += hprev.transpose() * dr;
      gbr.row(0) += dr.colwise().sum();
      gwh.noalias() += xt.transpose() * dc;
      guh.noalias() += (r.cwiseProduct(hprev)).transpose() * dc;
      gbh.row(0) += dc.colwise().sum();
      dx.step(ti).noalias() =
          dz * wz.transpose() + dr * wr.transpose() + dc * wh.transpose();
      dh = dh.cwiseProduct(z) + dq.cwiseProduct(r) + dz * uz.transpose() +
           dr * ur.transpose();
    }
    return dx;
  }

  std::vector<Cell> cells_;
};

// ---------------------------------------------------------------------------
// Masked temporal mean pooling.

struct PoolCache {
  std::vector<std::size_t> lengths;
  std::size_t frames = 0;
  std::size_t width = 0;
};

inline Tensor mean_pool_time(const Tensor& x,
                             const std::vector<std::size_t>& lengths,
                             PoolCache& cache) {
  check_input(x.rank() == 3, "mean pool expects [batch, frames, width]");
  const std::size_t b = x.dim(0), f = x.dim(1), h = x.dim(2);
  check_input(lengths.size() == b, "one valid length per sequence");
  Tensor y({b, h});
  for (std::size_t i = 0; i < b; ++i) {
    check_input(lengths[i] >= 1, "valid length must be at least 1");
    check_input(lengths[i] <= f, "valid length exceeds frame count");
    for (std::size_t t = 0; t < lengths[i]; ++t)
      for (std::size_t j = 0; j < h; ++j) y.at(i, j) += x.at(i, t, j);
    const double inv = 1.0 / static_cast<double>(lengths[i]);
    for (std::size_t j = 0; j < h; ++j) y.at(i, j) *= inv;
  }
  cache.lengths = lengths;
  cache.frames = f;
  cache.width = h;
  return y;
}

inline Tensor mean_pool_time_backward(const Tensor& dy, const PoolCache& cache) {
  const std::size_t b = dy.dim(0), h = cache.width;
  check_input(dy.rank() == 2 && dy.dim(1) == h, "pool backward shape mismatch");
  Tensor dx({b, cache.frames, h});
  for (std::size_t i = 0; i < b; ++i) {
    const double inv = 1.0 / static_cast<double>(cache.lengths[i]);
    for (std::size_t t = 0; t < cache.lengths[i]; ++t)
      for (std::size_t j = 0; j < h; ++j) dx.at(i, t, j) = dy.at(i, j) * inv;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Differentiable CCC loss over a [batch, 3] prediction block.  The metric's
// denominator guard becomes an additive epsilon here so the loss stays
// differentiable for constant predictions.

struct CccLossResult {
  double loss = 0.0;
  Tensor grad;         // [batch, 3], d loss / d pred
  double per_dim[3] = {0.0, 0.0, 0.0};  // CCC per dimension (act, val, dom)
};

inline CccLossResult ccc_loss_grad(const Tensor& pred, const Tensor& target,
                                   const LossWeights& w = {}) {
  validate(w);
  check_input(pred.rank() == 2 && pred.dim(1) == kNumDims,
              "ccc_loss_grad expects [batch, 3] predictions");
  check_input(target.same_shape(pred), "prediction/target shape mismatch");
  const std::size_t n = pred.dim(0);
  check_input(n >= 2, "CCC is undefined on batches smaller than 2");
  const double weights[3] = {w.beta, w.alpha, 1.0 - w.alpha - w.beta};

  CccLossResult out;
  out.grad = Tensor({n, kNumDims});
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < kNumDims; ++k) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += pred.at(i, k);
      my += target.at(i, k);
    }
    mx /= dn;
    my /= dn;
    double vx = 0, vy = 0, cov = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dxv = pred.at(i, k) - mx;
      const double dyv = target.at(i, k) - my;
      vx += dxv * dxv;
      vy += dyv * dyv;
      cov += dxv * dyv;
    }
    vx /= dn;
    vy /= dn;
    cov /= dn;
    const double gap = mx - my;
    const double den = vx + vy + gap * gap + kCccDenEps;
    const double ccc_k = 2.0 * cov / den;
    out.per_dim[k] = ccc_k;
    out.loss -= weights[k] * ccc_k;
    const double scale = -weights[k] * 2.0 / (dn * den);
    for (std::size_t i = 0; i < n; ++i) {
      const double dxv = pred.at(i, k) - mx;
      const double dyv = target.at(i, k) - my;
      out.grad.at(i, k) = scale * (dyv - ccc_k * (dxv + gap));
    }
  }
  return out;
}

}  // namespace affectkit

#endif  // AFFECTKIT_LAYERS_HPP
