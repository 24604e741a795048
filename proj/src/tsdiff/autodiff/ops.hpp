#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "tsdiff/autodiff/graph.hpp"
#include "tsdiff/common/rng.hpp"

// Differentiable matrix ops. Convention: rows are positions (timesteps,
// patches, batch entries), columns are channels. "Grouped" ops treat
// consecutive row blocks of equal size as independent sequences, which is
// how batches are stacked into a single graph.

namespace tsdiff {

namespace detail {
inline void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}
}  // namespace detail

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  Graph<S>& g = *a.g;
  Mat<S> y = a.value() + b.value();
  int ai = a.id, bi = b.id;
  return g.make(std::move(y), [ai, bi](Graph<S>& gr, int self) {
    gr.acc_grad(ai, gr.grad(self));
    gr.acc_grad(bi, gr.grad(self));
  });
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  Graph<S>& g = *a.g;
  Mat<S> y = a.value() - b.value();
  int ai = a.id, bi = b.id;
  return g.make(std::move(y), [ai, bi](Graph<S>& gr, int self) {
    gr.acc_grad(ai, gr.grad(self));
    gr.acc_grad(bi, -gr.grad(self));
  });
}

// Elementwise product.
template <typename S>
Var<S> cmul(Var<S> a, Var<S> b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "cmul: shape mismatch");
  Graph<S>& g = *a.g;
  Mat<S> y = a.value().cwiseProduct(b.value());
  int ai = a.id, bi = b.id;
  return g.make(std::move(y), [ai, bi](Graph<S>& gr, int self) {
    gr.acc_grad(ai, gr.grad(self).cwiseProduct(gr.value(bi)));
    gr.acc_grad(bi, gr.grad(self).cwiseProduct(gr.value(ai)));
  });
}

template <typename S>
Var<S> scale(Var<S> a, S factor) {
  Graph<S>& g = *a.g;
  Mat<S> y = a.value() * factor;
  int ai = a.id;
  return g.make(std::move(y), [ai, factor](Graph<S>& gr, int self) {
    gr.acc_grad(ai, gr.grad(self) * factor);
  });
}

// y = a * s(0,0) with a learnable 1x1 scalar.
template <typename S>
Var<S> scale_by(Var<S> a, Var<S> s) {
  detail::require(s.rows() == 1 && s.cols() == 1, "scale_by: scalar must be 1x1");
  Graph<S>& g = *a.g;
  Mat<S> y = a.value() * s.value()(0, 0);
  int ai = a.id, si = s.id;
  return g.make(std::move(y), [ai, si](Graph<S>& gr, int self) {
    S sv = gr.value(si)(0, 0);
    gr.acc_grad(ai, gr.grad(self) * sv);
    Mat<S> ds(1, 1);
    ds(0, 0) = gr.grad(self).cwiseProduct(gr.value(ai)).sum();
    gr.acc_grad(si, ds);
  });
}

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  detail::require(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  Graph<S>& g = *a.g;
  Mat<S> y = a.value() * b.value();
  int ai = a.id, bi = b.id;
  return g.make(std::move(y), [ai, bi](Graph<S>& gr, int self) {
    gr.acc_grad(ai, gr.grad(self) * gr.value(bi).transpose());
    gr.acc_grad(bi, gr.value(ai).transpose() * gr.grad(self));
  });
}

template <typename S>
Var<S> transpose(Var<S> a) {
  Graph<S>& g = *a.g;
  Mat<S> y = a.value().transpose();
  int ai = a.id;
  return g.make(std::move(y), [ai](Graph<S>& gr, int self) {
    gr.acc_grad(ai, gr.grad(self).transpose());
  });
}

// y = a * b^T.
template <typename S>
Var<S> matmul_nt(Var<S> a, Var<S> b) {
  detail::require(a.cols() == b.cols(), "matmul_nt: column mismatch");
  Graph<S>& g = *a.g;
  Mat<S> y = a.value() * b.value().transpose();
  int ai = a.id, bi = b.id;
  return g.make(std::move(y), [ai, bi](Graph<S>& gr, int self) {
    gr.acc_grad(ai, gr.grad(self) * gr.value(bi));
    gr.acc_grad(bi, gr.grad(self).transpose() * gr.value(ai));
  });
}

// Broadcasts a 1xD row (bias) over all rows of a.
template <typename S>
Var<S> add_rowvec(Var<S> a, Var<S> r) {
  detail::require(r.rows() == 1 && r.cols() == a.cols(), "add_rowvec: bad row vector");
  Graph<S>& g = *a.g;
  Mat<S> y = a.value().rowwise() + r.value().row(0);
  int ai = a.id, ri = r.id;
  return g.make(std::move(y), [ai, ri](Graph<S>& gr, int self) {
    gr.acc_grad(ai, gr.grad(self));
    gr.acc_grad(ri, gr.grad(self).colwise().sum());
  });
}

// Vertically repeats a `times` times.
template <typename S>
Var<S> tile_rows(Var<S> a, Eigen::Index times) {
  detail::require(times >= 1, "tile_rows: times must be >= 1");
  Graph<S>& g = *a.g;
  const Eigen::Index n = a.rows(), d = a.cols();
  Mat<S> y(n * times, d);
  for (Eigen::Index i = 0; i < times; ++i) y.middleRows(i * n, n) = a.value();
  int ai = a.id;
  return g.make(std::move(y), [ai, n, times](Graph<S>& gr, int self) {
    const auto& gy = gr.grad(self);
    Mat<S> acc = gy.middleRows(0, n);
    for (Eigen::Index i = 1; i < times; ++i) acc += gy.middleRows(i * n, n);
    gr.acc_grad(ai, acc);
  });
}

template <typename S>
Var<S> slice_rows(Var<S> a, Eigen::Index start, Eigen::Index count) {
  detail::require(start >= 0 && count >= 0 && start + count <= a.rows(),
                  "slice_rows: out of range");
  Graph<S>& g = *a.g;
  Mat<S> y = a.value().middleRows(start, count);
  int ai = a.id;
  Eigen::Index rows = a.rows(), cols = a.cols();
  return g.make(std::move(y), [ai, start, count, rows, cols](Graph<S>& gr, int self) {
    Mat<S> da = Mat<S>::Zero(rows, cols);
    da.middleRows(start, count) = gr.grad(self);
    gr.acc_grad(ai, da);
  });
}

template <typename S>
Var<S> slice_cols(Var<S> a, Eigen::Index start, Eigen::Index count) {
  detail::require(start >= 0 && count >= 0 && start + count <= a.cols(),
                  "slice_cols: out of range");
  Graph<S>& g = *a.g;
  Mat<S> y = a.value().middleCols(start, count);
  int ai = a.id;
  Eigen::Index rows = a.rows(), cols = a.cols();
  return g.make(std::move(y), [ai, start, count, rows, cols](Graph<S>& gr, int self) {
    Mat<S> da = Mat<S>::Zero(rows, cols);
    da.middleCols(start, count) = gr.grad(self);
    gr.acc_grad(ai, da);
  });
}

template <typename S>
Var<S> concat_cols(Var<S> a, Var<S> b) {
  detail::require(a.rows() == b.rows(), "concat_cols: row mismatch");
  Graph<S>& g = *a.g;
  Mat<S> y(a.rows(), a.cols() + b.cols());
  y.leftCols(a.cols()) = a.value();
  y.rightCols(b.cols()) = b.value();
  int ai = a.id, bi = b.id;
  Eigen::Index ac = a.cols(), bc = b.cols();
  return g.make(std::move(y), [ai, bi, ac, bc](Graph<S>& gr, int self) {
    gr.acc_grad(ai, gr.grad(self).leftCols(ac));
    gr.acc_grad(bi, gr.grad(self).rightCols(bc));
  });
}

// out.row(i) = a.row(idx[i]). Indices may repeat; backward scatter-adds.
template <typename S>
Var<S> gather_rows(Var<S> a, std::vector<Eigen::Index> idx) {
  Graph<S>& g = *a.g;
  Mat<S> y(static_cast<Eigen::Index>(idx.size()), a.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    detail::require(idx[i] >= 0 && idx[i] < a.rows(), "gather_rows: index out of range");
    y.row(static_cast<Eigen::Index>(i)) = a.value().row(idx[i]);
  }
  int ai = a.id;
  Eigen::Index rows = a.rows(), cols = a.cols();
  return g.make(std::move(y), [ai, rows, cols, idx = std::move(idx)](Graph<S>& gr, int self) {
    Mat<S> da = Mat<S>::Zero(rows, cols);
    const auto& gy = gr.grad(self);
    for (std::size_t i = 0; i < idx.size(); ++i)
      da.row(idx[i]) += gy.row(static_cast<Eigen::Index>(i));
    gr.acc_grad(ai, da);
  });
}

template <typename S>
Var<S> relu(Var<S> a) {
  Graph<S>& g = *a.g;
  Mat<S> y = a.value().cwiseMax(S(0));
  int ai = a.id;
  return g.make(std::move(y), [ai](Graph<S>& gr, int self) {
    gr.acc_grad(ai, gr.grad(self).cwiseProduct(
                        (gr.value(ai).array() > S(0)).template cast<S>().matrix()));
  });
}

// Exact GELU: x * Phi(x) with Phi the standard normal CDF.
template <typename S>
Var<S> gelu(Var<S> a) {
  Graph<S>& g = *a.g;
  const S inv_sqrt2 = S(1) / std::sqrt(S(2));
  Mat<S> y = a.value().unaryExpr([inv_sqrt2](S x) {
    return S(0.5) * x * (S(1) + std::erf(x * inv_sqrt2));
  });
  int ai = a.id;
  return g.make(std::move(y), [ai, inv_sqrt2](Graph<S>& gr, int self) {
    const S inv_sqrt_2pi = S(1) / std::sqrt(S(2) * S(std::numbers::pi));
    Mat<S> d = gr.value(ai).unaryExpr([inv_sqrt2, inv_sqrt_2pi](S x) {
      S cdf = S(0.5) * (S(1) + std::erf(x * inv_sqrt2));
      S pdf = inv_sqrt_2pi * std::exp(S(-0.5) * x * x);
      return cdf + x * pdf;
    });
    gr.acc_grad(ai, gr.grad(self).cwiseProduct(d));
  });
}

template <typename S>
Var<S> tanh_op(Var<S> a) {
  Graph<S>& g = *a.g;
  Mat<S> y = a.value().array().tanh().matrix();
  int ai = a.id;
  return g.make(std::move(y), [ai](Graph<S>& gr, int self) {
    const auto& y = gr.value(self);
    gr.acc_grad(ai, gr.grad(self).cwiseProduct(
                        (Mat<S>::Ones(y.rows(), y.cols()) - y.cwiseProduct(y))));
  });
}

template <typename S>
Var<S> sigmoid(Var<S> a) {
  Graph<S>& g = *a.g;
  Mat<S> y = a.value().unaryExpr([](S x) {
    return x >= S(0) ? S(1) / (S(1) + std::exp(-x))
                     : std::exp(x) / (S(1) + std::exp(x));
  });
  int ai = a.id;
  return g.make(std::move(y), [ai](Graph<S>& gr, int self) {
    const auto& y = gr.value(self);
    gr.acc_grad(ai, gr.grad(self).cwiseProduct(
                        y.cwiseProduct(Mat<S>::Ones(y.rows(), y.cols()) - y)));
  });
}

template <typename S>
Var<S> exp_op(Var<S> a) {
  Graph<S>& g = *a.g;
  Mat<S> y = a.value().array().exp().matrix();
  int ai = a.id;
  return g.make(std::move(y), [ai](Graph<S>& gr, int self) {
    gr.acc_grad(ai, gr.grad(self).cwiseProduct(gr.value(self)));
  });
}

// Row-wise layer normalization with learnable 1xD gain/bias.
template <typename S>
Var<S> layernorm(Var<S> a, Var<S> gamma, Var<S> beta, S eps = S(1e-5)) {
  detail::require(gamma.rows() == 1 && gamma.cols() == a.cols(), "layernorm: bad gamma");
  detail::require(beta.rows() == 1 && beta.cols() == a.cols(), "layernorm: bad beta");
  Graph<S>& g = *a.g;
  const Eigen::Index n = a.rows(), d = a.cols();
  Mat<S> xhat(n, d);
  Mat<S> inv_sd(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    S mu = a.value().row(i).mean();
    S var = (a.value().row(i).array() - mu).square().mean();
    S is = S(1) / std::sqrt(var + eps);
    inv_sd(i, 0) = is;
    xhat.row(i) = (a.value().row(i).array() - mu).matrix() * is;
  }
  Mat<S> y = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
  y.rowwise() += beta.value().row(0);
  int ai = a.id, gi = gamma.id, bi = beta.id;
  return g.make(std::move(y), [ai, gi, bi, xhat = std::move(xhat),
                               inv_sd = std::move(inv_sd)](Graph<S>& gr, int self) {
    const auto& gy = gr.grad(self);
    gr.acc_grad(gi, gy.cwiseProduct(xhat).colwise().sum());
    gr.acc_grad(bi, gy.colwise().sum());
    Mat<S> dxhat = gy.array().rowwise() * gr.value(gi).row(0).array();
    const Eigen::Index d = dxhat.cols();
    Mat<S> da(dxhat.rows(), d);
    for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
      S m1 = dxhat.row(i).mean();
      S m2 = dxhat.row(i).cwiseProduct(xhat.row(i)).mean();
      da.row(i) = inv_sd(i, 0) *
                  (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2).matrix();
    }
    gr.acc_grad(ai, da);
  });
}

// Rows scaled to unit Euclidean norm (smooth near zero).
template <typename S>
Var<S> l2_normalize_rows(Var<S> a) {
  Graph<S>& g = *a.g;
  const Eigen::Index n = a.rows();
  Mat<S> norms(n, 1);
  Mat<S> y(n, a.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    S nv = std::sqrt(a.value().row(i).squaredNorm() + S(1e-24));
    norms(i, 0) = nv;
    y.row(i) = a.value().row(i) / nv;
  }
  int ai = a.id;
  return g.make(std::move(y), [ai, norms = std::move(norms)](Graph<S>& gr, int self) {
    const auto& gy = gr.grad(self);
    const auto& y = gr.value(self);
    Mat<S> da(gy.rows(), gy.cols());
    for (Eigen::Index i = 0; i < gy.rows(); ++i) {
      S dot = gy.row(i).dot(y.row(i));
      da.row(i) = (gy.row(i) - dot * y.row(i)) / norms(i, 0);
    }
    gr.acc_grad(ai, da);
  });
}

template <typename S>
Var<S> sum_all(Var<S> a) {
  Graph<S>& g = *a.g;
  Mat<S> y(1, 1);
  y(0, 0) = a.value().sum();
  int ai = a.id;
  Eigen::Index rows = a.rows(), cols = a.cols();
  return g.make(std::move(y), [ai, rows, cols](Graph<S>& gr, int self) {
    gr.acc_grad(ai, Mat<S>::Constant(rows, cols, gr.grad(self)(0, 0)));
  });
}

template <typename S>
Var<S> mean_all(Var<S> a) {
  Graph<S>& g = *a.g;
  Mat<S> y(1, 1);
  y(0, 0) = a.value().mean();
  int ai = a.id;
  Eigen::Index rows = a.rows(), cols = a.cols();
  return g.make(std::move(y), [ai, rows, cols](Graph<S>& gr, int self) {
    S w = gr.grad(self)(0, 0) / S(rows * cols);
    gr.acc_grad(ai, Mat<S>::Constant(rows, cols, w));
  });
}

// Mean cross-entropy between row logits and integer labels.
template <typename S>
Var<S> softmax_xent_rows(Var<S> logits, std::vector<int> labels) {
  const Eigen::Index n = logits.rows(), c = logits.cols();
  detail::require(static_cast<Eigen::Index>(labels.size()) == n,
                  "softmax_xent_rows: label count mismatch");
  Graph<S>& g = *logits.g;
  Mat<S> probs(n, c);
  S total = S(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    detail::require(labels[static_cast<std::size_t>(i)] >= 0 &&
                        labels[static_cast<std::size_t>(i)] < c,
                    "softmax_xent_rows: label out of range");
    S m = logits.value().row(i).maxCoeff();
    Mat<S> e = (logits.value().row(i).array() - m).exp().matrix();
    S z = e.sum();
    probs.row(i) = e / z;
    total += std::log(z) + m - logits.value()(i, labels[static_cast<std::size_t>(i)]);
  }
  Mat<S> y(1, 1);
  y(0, 0) = total / S(n);
  int li = logits.id;
  return g.make(std::move(y), [li, n, probs = std::move(probs),
                               labels = std::move(labels)](Graph<S>& gr, int self) {
    S w = gr.grad(self)(0, 0) / S(n);
    Mat<S> d = probs * w;
    for (Eigen::Index i = 0; i < n; ++i)
      d(i, labels[static_cast<std::size_t>(i)]) -= w;
    gr.acc_grad(li, d);
  });
}

// Mean binary cross-entropy with logits against a {0,1} target matrix.
template <typename S>
Var<S> bce_logits(Var<S> logits, Mat<S> targets) {
  detail::require(logits.rows() == targets.rows() && logits.cols() == targets.cols(),
                  "bce_logits: shape mismatch");
  Graph<S>& g = *logits.g;
  const auto& x = logits.value();
  S total = S(0);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      S xv = x(i, j);
      total += std::max(xv, S(0)) - xv * targets(i, j) + std::log1p(std::exp(-std::abs(xv)));
    }
  Mat<S> y(1, 1);
  const S n_elem = S(x.rows() * x.cols());
  y(0, 0) = total / n_elem;
  int li = logits.id;
  return g.make(std::move(y), [li, n_elem, targets = std::move(targets)](Graph<S>& gr, int self) {
    S w = gr.grad(self)(0, 0) / n_elem;
    Mat<S> sig = gr.value(li).unaryExpr([](S v) {
      return v >= S(0) ? S(1) / (S(1) + std::exp(-v)) : std::exp(v) / (S(1) + std::exp(v));
    });
    gr.acc_grad(li, (sig - targets) * w);
  });
}

// Scaled dot-product attention over independent row groups with h heads.
// q, k, v: (n_groups * group_size) x d with d % heads == 0. Softmax runs
// within each (group, head) block.
template <typename S>
Var<S> attention_grouped(Var<S> q, Var<S> k, Var<S> v, Eigen::Index group_size,
                         int heads) {
  const Eigen::Index n = q.rows(), d = q.cols();
  detail::require(k.rows() == n && v.rows() == n && k.cols() == d && v.cols() == d,
                  "attention_grouped: shape mismatch");
  detail::require(group_size >= 1 && n % group_size == 0,
                  "attention_grouped: rows not divisible by group size");
  detail::require(heads >= 1 && d % heads == 0,
                  "attention_grouped: cols not divisible by heads");
  Graph<S>& g = *q.g;
  const Eigen::Index n_groups = n / group_size;
  const Eigen::Index dh = d / heads;
  const S scale = S(1) / std::sqrt(S(dh));

  Mat<S> y(n, d);
  std::vector<Mat<S>> probs;
  if (g.recording()) probs.reserve(static_cast<std::size_t>(n_groups * heads));
  for (Eigen::Index gi = 0; gi < n_groups; ++gi) {
    const Eigen::Index r0 = gi * group_size;
    for (int h = 0; h < heads; ++h) {
      const Eigen::Index c0 = h * dh;
      Mat<S> s = q.value().block(r0, c0, group_size, dh) *
                 k.value().block(r0, c0, group_size, dh).transpose() * scale;
      for (Eigen::Index i = 0; i < group_size; ++i) {
        S m = s.row(i).maxCoeff();
        Mat<S> e = (s.row(i).array() - m).exp().matrix();
        s.row(i) = e / e.sum();
      }
      y.block(r0, c0, group_size, dh) = s * v.value().block(r0, c0, group_size, dh);
      if (g.recording()) probs.push_back(std::move(s));
    }
  }
  int qi = q.id, ki = k.id, vi = v.id;
  return g.make(std::move(y), [qi, ki, vi, group_size, heads, n_groups, dh, scale,
                               probs = std::move(probs)](Graph<S>& gr, int self) {
    const auto& gy = gr.grad(self);
    const Eigen::Index n = gy.rows();
    const Eigen::Index d = gy.cols();
    Mat<S> dq = Mat<S>::Zero(n, d), dk = Mat<S>::Zero(n, d), dv = Mat<S>::Zero(n, d);
    for (Eigen::Index gi = 0; gi < n_groups; ++gi) {
      const Eigen::Index r0 = gi * group_size;
      for (int h = 0; h < heads; ++h) {
        const Eigen::Index c0 = h * dh;
        const Mat<S>& p = probs[static_cast<std::size_t>(gi * heads + h)];
        auto dyb = gy.block(r0, c0, group_size, dh);
        dv.block(r0, c0, group_size, dh) = p.transpose() * dyb;
        Mat<S> dp = dyb * gr.value(vi).block(r0, c0, group_size, dh).transpose();
        // softmax backward per row: ds = p .* (dp - rowsum(dp .* p))
        Mat<S> ds(group_size, group_size);
        for (Eigen::Index i = 0; i < group_size; ++i) {
          S dot = dp.row(i).dot(p.row(i));
          ds.row(i) = p.row(i).cwiseProduct((dp.row(i).array() - dot).matrix());
        }
        dq.block(r0, c0, group_size, dh) =
            ds * gr.value(ki).block(r0, c0, group_size, dh) * scale;
        dk.block(r0, c0, group_size, dh) =
            ds.transpose() * gr.value(qi).block(r0, c0, group_size, dh) * scale;
      }
    }
    gr.acc_grad(qi, dq);
    gr.acc_grad(ki, dk);
    gr.acc_grad(vi, dv);
  });
}

namespace detail {
// Zero-padded im2col over one group: rows L_out, cols kernel*Cin.
template <typename S>
Mat<S> im2col(const Eigen::Ref<const Mat<S>>& x, Eigen::Index kernel,
              Eigen::Index stride, Eigen::Index pad, Eigen::Index l_out) {
  const Eigen::Index cin = x.cols();
  Mat<S> cols = Mat<S>::Zero(l_out, kernel * cin);
  for (Eigen::Index r = 0; r < l_out; ++r)
    for (Eigen::Index kk = 0; kk < kernel; ++kk) {
      Eigen::Index src = r * stride + kk - pad;
      if (src >= 0 && src < x.rows()) cols.block(r, kk * cin, 1, cin) = x.row(src);
    }
  return cols;
}
}  // namespace detail

// 1-D convolution along rows within each group. Odd kernel, zero padding
// of (kernel-1)/2, so stride 1 preserves length and stride 2 halves it
// (ceil). w: (kernel*Cin) x Cout laid out kernel-major; b: 1 x Cout.
template <typename S>
Var<S> conv1d_grouped(Var<S> x, Var<S> w, Var<S> b, Eigen::Index kernel,
                      Eigen::Index stride, Eigen::Index group_size) {
  const Eigen::Index n = x.rows(), cin = x.cols();
  detail::require(kernel >= 1 && kernel % 2 == 1, "conv1d: kernel must be odd");
  detail::require(stride >= 1, "conv1d: bad stride");
  detail::require(group_size >= 1 && n % group_size == 0, "conv1d: bad group size");
  detail::require(w.rows() == kernel * cin, "conv1d: weight rows != kernel*Cin");
  detail::require(b.rows() == 1 && b.cols() == w.cols(), "conv1d: bad bias");
  Graph<S>& g = *x.g;
  const Eigen::Index pad = (kernel - 1) / 2;
  const Eigen::Index n_groups = n / group_size;
  const Eigen::Index l_out = (group_size + 2 * pad - kernel) / stride + 1;
  const Eigen::Index cout = w.cols();

  Mat<S> y(n_groups * l_out, cout);
  for (Eigen::Index gi = 0; gi < n_groups; ++gi) {
    Mat<S> cols = detail::im2col<S>(x.value().middleRows(gi * group_size, group_size),
                                    kernel, stride, pad, l_out);
    y.middleRows(gi * l_out, l_out) = cols * w.value();
    y.middleRows(gi * l_out, l_out).rowwise() += b.value().row(0);
  }
  int xi = x.id, wi = w.id, bi = b.id;
  return g.make(std::move(y), [xi, wi, bi, kernel, stride, pad, group_size, n_groups,
                               l_out, cin](Graph<S>& gr, int self) {
    const auto& gy = gr.grad(self);
    const Eigen::Index cout = gy.cols();
    Mat<S> dx = Mat<S>::Zero(n_groups * group_size, cin);
    Mat<S> dw = Mat<S>::Zero(kernel * cin, cout);
    Mat<S> db = gy.colwise().sum();
    const auto& wv = gr.value(wi);
    for (Eigen::Index gi = 0; gi < n_groups; ++gi) {
      auto dyg = gy.middleRows(gi * l_out, l_out);
      Mat<S> cols = detail::im2col<S>(
          gr.value(xi).middleRows(gi * group_size, group_size), kernel, stride, pad, l_out);
      dw += cols.transpose() * dyg;
      Mat<S> dcols = dyg * wv.transpose();  // l_out x kernel*cin
      for (Eigen::Index r = 0; r < l_out; ++r)
        for (Eigen::Index kk = 0; kk < kernel; ++kk) {
          Eigen::Index src = r * stride + kk - pad;
          if (src >= 0 && src < group_size)
            dx.row(gi * group_size + src) += dcols.block(r, kk * cin, 1, cin);
        }
    }
    gr.acc_grad(xi, dx);
    gr.acc_grad(wi, dw);
    gr.acc_grad(bi, db);
  });
}

// Inverted dropout; identity when p == 0. Training-time only.
template <typename S>
Var<S> dropout(Var<S> a, double p, Rng& rng) {
  if (p <= 0.0) return a;
  detail::require(p < 1.0, "dropout: p must be < 1");
  Graph<S>& g = *a.g;
  const S keep_inv = S(1.0 / (1.0 - p));
  Mat<S> mask(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < mask.cols(); ++j)
    for (Eigen::Index i = 0; i < mask.rows(); ++i)
      mask(i, j) = rng.uniform() < p ? S(0) : keep_inv;
  Mat<S> y = a.value().cwiseProduct(mask);
  int ai = a.id;
  return g.make(std::move(y), [ai, mask = std::move(mask)](Graph<S>& gr, int self) {
    gr.acc_grad(ai, gr.grad(self).cwiseProduct(mask));
  });
}

// (n_groups * L) x D -> n_groups x (L * D); each group's rows are
// flattened row-major into one output row.
template <typename S>
Var<S> flatten_grouped(Var<S> a, Eigen::Index group_size) {
  const Eigen::Index n = a.rows(), d = a.cols();
  detail::require(group_size >= 1 && n % group_size == 0, "flatten_grouped: bad group");
  Graph<S>& g = *a.g;
  const Eigen::Index n_groups = n / group_size;
  Mat<S> y(n_groups, group_size * d);
  for (Eigen::Index gi = 0; gi < n_groups; ++gi)
    for (Eigen::Index l = 0; l < group_size; ++l)
      y.block(gi, l * d, 1, d) = a.value().row(gi * group_size + l);
  int ai = a.id;
  return g.make(std::move(y), [ai, group_size, d, n_groups](Graph<S>& gr, int self) {
    const auto& gy = gr.grad(self);
    Mat<S> da(n_groups * group_size, d);
    for (Eigen::Index gi = 0; gi < n_groups; ++gi)
      for (Eigen::Index l = 0; l < group_size; ++l)
        da.row(gi * group_size + l) = gy.block(gi, l * d, 1, d);
    gr.acc_grad(ai, da);
  });
}

// (n_groups * L) x D -> n_groups x D, column means per group.
template <typename S>
Var<S> mean_rows_grouped(Var<S> a, Eigen::Index group_size) {
  const Eigen::Index n = a.rows(), d = a.cols();
  detail::require(group_size >= 1 && n % group_size == 0, "mean_rows_grouped: bad group");
  Graph<S>& g = *a.g;
  const Eigen::Index n_groups = n / group_size;
  Mat<S> y(n_groups, d);
  for (Eigen::Index gi = 0; gi < n_groups; ++gi)
    y.row(gi) = a.value().middleRows(gi * group_size, group_size).colwise().mean();
  int ai = a.id;
  return g.make(std::move(y), [ai, group_size, n_groups, d](Graph<S>& gr, int self) {
    const auto& gy = gr.grad(self);
    Mat<S> da(n_groups * group_size, d);
    const S w = S(1) / S(group_size);
    for (Eigen::Index gi = 0; gi < n_groups; ++gi)
      for (Eigen::Index l = 0; l < group_size; ++l)
        da.row(gi * group_size + l) = gy.row(gi) * w;
    gr.acc_grad(ai, da);
  });
}

}  // namespace tsdiff
