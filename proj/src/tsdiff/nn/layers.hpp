#pragma once

#include <cmath>
#include <string>

#include "tsdiff/autodiff/ops.hpp"

namespace tsdiff {

// Glorot-uniform fill; biases stay zero.
template <typename S>
void glorot_init(Param<S>& p, Rng& rng) {
  double fan_in = static_cast<double>(p.value.rows());
  double fan_out = static_cast<double>(p.value.cols());
  double s = std::sqrt(6.0 / (fan_in + fan_out));
  for (Eigen::Index j = 0; j < p.value.cols(); ++j)
    for (Eigen::Index i = 0; i < p.value.rows(); ++i)
      p.value(i, j) = static_cast<S>(rng.uniform(-s, s));
}

template <typename S>
struct Linear {
  Param<S>* w = nullptr;
  Param<S>* b = nullptr;

  static Linear create(ParamStore<S>& ps, const std::string& name, Eigen::Index in,
                       Eigen::Index out, Rng& rng) {
    Linear l;
    l.w = &ps.add(name + "/w", in, out);
    l.b = &ps.add(name + "/b", 1, out);
    glorot_init(*l.w, rng);
    return l;
  }

  Var<S> operator()(Var<S> x) const {
    Graph<S>& g = *x.g;
    return add_rowvec(matmul(x, g.param(*w)), g.param(*b));
  }
};

template <typename S>
struct Conv1d {
  Param<S>* w = nullptr;  // (kernel*Cin) x Cout, kernel-major
  Param<S>* b = nullptr;
  Eigen::Index kernel = 3;
  Eigen::Index stride = 1;

  static Conv1d create(ParamStore<S>& ps, const std::string& name, Eigen::Index cin,
                       Eigen::Index cout, Eigen::Index kernel, Eigen::Index stride,
                       Rng& rng) {
    Conv1d c;
    c.kernel = kernel;
    c.stride = stride;
    c.w = &ps.add(name + "/w", kernel * cin, cout);
    c.b = &ps.add(name + "/b", 1, cout);
    glorot_init(*c.w, rng);
    return c;
  }

  Var<S> operator()(Var<S> x, Eigen::Index group_size) const {
    Graph<S>& g = *x.g;
    return conv1d_grouped(x, g.param(*w), g.param(*b), kernel, stride, group_size);
  }
};

template <typename S>
struct LayerNormParams {
  Param<S>* gamma = nullptr;
  Param<S>* beta = nullptr;

  static LayerNormParams create(ParamStore<S>& ps, const std::string& name,
                                Eigen::Index d) {
    LayerNormParams ln;
    ln.gamma = &ps.add(name + "/gamma", 1, d);
    ln.beta = &ps.add(name + "/beta", 1, d);
    ln.gamma->value.setOnes();
    return ln;
  }

  Var<S> operator()(Var<S> x) const {
    Graph<S>& g = *x.g;
    return layernorm(x, g.param(*gamma), g.param(*beta));
  }
};

// Pre-norm transformer encoder layer: multi-head self-attention and a GELU
// feed-forward block, each behind a residual connection. Sequences are the
// row groups of size group_size.
template <typename S>
struct TransformerLayer {
  LayerNormParams<S> ln1, ln2;
  Linear<S> wq, wk, wv, wo, ff1, ff2;
  int heads = 1;
  double dropout_p = 0.0;

  static TransformerLayer create(ParamStore<S>& ps, const std::string& name,
                                 Eigen::Index d, Eigen::Index d_ff, int heads,
                                 double dropout_p, Rng& rng) {
    TransformerLayer t;
    t.heads = heads;
    t.dropout_p = dropout_p;
    t.ln1 = LayerNormParams<S>::create(ps, name + "/ln1", d);
    t.ln2 = LayerNormParams<S>::create(ps, name + "/ln2", d);
    t.wq = Linear<S>::create(ps, name + "/wq", d, d, rng);
    t.wk = Linear<S>::create(ps, name + "/wk", d, d, rng);
    t.wv = Linear<S>::create(ps, name + "/wv", d, d, rng);
    t.wo = Linear<S>::create(ps, name + "/wo", d, d, rng);
    t.ff1 = Linear<S>::create(ps, name + "/ff1", d, d_ff, rng);
    t.ff2 = Linear<S>::create(ps, name + "/ff2", d_ff, d, rng);
    return t;
  }

  // drop_rng == nullptr disables dropout (inference / gradient checks).
  Var<S> forward(Var<S> x, Eigen::Index group_size, Rng* drop_rng) const {
    Var<S> n1 = ln1(x);
    Var<S> att = attention_grouped(wq(n1), wk(n1), wv(n1), group_size, heads);
    Var<S> att_o = wo(att);
    if (drop_rng && dropout_p > 0.0) att_o = dropout(att_o, dropout_p, *drop_rng);
    Var<S> h = add(x, att_o);
    Var<S> n2 = ln2(h);
    Var<S> ff = ff2(gelu(ff1(n2)));
    if (drop_rng && dropout_p > 0.0) ff = dropout(ff, dropout_p, *drop_rng);
    return add(h, ff);
  }
};

inline Eigen::Index linear_param_count(Eigen::Index in, Eigen::Index out) {
  return in * out + out;
}

inline Eigen::Index transformer_param_count(Eigen::Index d, Eigen::Index d_ff) {
  return 2 * (2 * d) + 4 * linear_param_count(d, d) + linear_param_count(d, d_ff) +
         linear_param_count(d_ff, d);
}

// Transformer positional encoding: pe(pos, 2j) = sin(pos * w_j),
// pe(pos, 2j+1) = cos(pos * w_j), w_j = 10000^(-2j/d).
template <typename S>
Mat<S> sinusoidal_position_encoding(Eigen::Index length, Eigen::Index d) {
  Mat<S> pe(length, d);
  for (Eigen::Index pos = 0; pos < length; ++pos)
    for (Eigen::Index j = 0; j < d; j += 2) {
      double w = std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(d));
      pe(pos, j) = static_cast<S>(std::sin(pos * w));
      if (j + 1 < d) pe(pos, j + 1) = static_cast<S>(std::cos(pos * w));
    }
  return pe;
}

// Diffusion-step features: 64 geometric frequencies from 1 down to 1e-4,
// emb[2j] = sin(t * w_j), emb[2j+1] = cos(t * w_j), w_j = 10000^(-j/63).
template <typename S>
Mat<S> step_sinusoid_features(int t) {
  constexpr Eigen::Index kFreqs = 64;
  Mat<S> e(1, 2 * kFreqs);
  for (Eigen::Index j = 0; j < kFreqs; ++j) {
    double w = std::pow(10000.0, -static_cast<double>(j) / 63.0);
    e(0, 2 * j) = static_cast<S>(std::sin(t * w));
    e(0, 2 * j + 1) = static_cast<S>(std::cos(t * w));
  }
  return e;
}

// Adam with bias correction; consumes and clears parameter gradients.
template <typename S>
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore<S>& ps) {
    if (m_.empty()) {
      m_.resize(ps.size());
      v_.resize(ps.size());
      for (std::size_t i = 0; i < ps.size(); ++i) {
        m_[i].setZero(ps[i].value.rows(), ps[i].value.cols());
        v_[i].setZero(ps[i].value.rows(), ps[i].value.cols());
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      auto& p = ps[i];
      m_[i] = S(beta1_) * m_[i] + S(1.0 - beta1_) * p.grad;
      v_[i] = S(beta2_) * v_[i] + S(1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
      Mat<S> mhat = m_[i] / S(bc1);
      Mat<S> vhat = v_[i] / S(bc2);
      p.value -= S(lr_) * mhat.cwiseQuotient(
                              (vhat.cwiseSqrt().array() + S(eps_)).matrix());
      p.grad.setZero();
    }
  }

  double lr() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<Mat<S>> m_, v_;
};

}  // namespace tsdiff
