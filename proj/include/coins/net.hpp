#pragma once
// Small fully connected networks with hand-written backprop and Adam.
//
// Templated on the scalar so the training path runs in float while gradient
// verification instantiates double (central finite differences are not
// meaningful at float precision). Batches are column-major: one sample per
// column. Hidden activations are tanh; the output layer is linear.

#include "coins/common.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace coins {

template <typename S>
struct MLP {
  using V = Eigen::Vector<S, Eigen::Dynamic>;
  using M = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

  std::vector<int> dims;  // {in, hidden..., out}
  std::vector<M> W;
  std::vector<V> b;

  // Adam state
  std::vector<M> mW, vW;
  std::vector<V> mb, vb;
  long adam_t = 0;

  struct Grads {
    std::vector<M> dW;
    std::vector<V> db;
  };

  int in_dim() const { return dims.front(); }
  int out_dim() const { return dims.back(); }
  std::size_t num_layers() const { return W.size(); }

  // Xavier-uniform hidden layers; optionally zero-filled final layer.
  void init(const std::vector<int>& layer_dims, Rng& rng,
            bool zero_final = false) {
    if (layer_dims.size() < 2) throw CoinsError("MLP needs >= 2 layer dims");
    dims = layer_dims;
    const std::size_t L = dims.size() - 1;
    W.resize(L);
    b.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
      const int fi = dims[l], fo = dims[l + 1];
      W[l].resize(fo, fi);
      b[l] = V::Zero(fo);
      if (zero_final && l == L - 1) {
        W[l].setZero();
      } else {
        const double a = std::sqrt(6.0 / (fi + fo));
        for (int r = 0; r < fo; ++r)
          for (int c = 0; c < fi; ++c)
            W[l](r, c) = static_cast<S>(rng.uniform(-a, a));
      }
    }
    reset_adam();
  }

  void reset_adam() {
    const std::size_t L = W.size();
    mW.resize(L);
    vW.resize(L);
    mb.resize(L);
    vb.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
      mW[l] = M::Zero(W[l].rows(), W[l].cols());
      vW[l] = M::Zero(W[l].rows(), W[l].cols());
      mb[l] = V::Zero(b[l].size());
      vb[l] = V::Zero(b[l].size());
    }
    adam_t = 0;
  }

  // Forward pass; if `hidden` is given it receives the post-tanh activation
  // of every hidden layer (needed for backward()).
  M forward(const M& X, std::vector<M>* hidden = nullptr) const {
    if (hidden) hidden->clear();
    M h = X;
    for (std::size_t l = 0; l + 1 < W.size(); ++l) {
      h = ((W[l] * h).colwise() + b[l]).array().tanh().matrix();
      if (hidden) hidden->push_back(h);
    }
    return (W.back() * h).colwise() + b.back();
  }

  V forward1(const V& x) const {
    V h = x;
    for (std::size_t l = 0; l + 1 < W.size(); ++l)
      h = ((W[l] * h) + b[l]).array().tanh().matrix();
    return W.back() * h + b.back();
  }

  // Backward pass given dL/dY; X and `hidden` must come from forward().
  Grads backward(const M& X, const std::vector<M>& hidden, const M& dY) const {
    Grads g;
    const std::size_t L = W.size();
    g.dW.resize(L);
    g.db.resize(L);
    M delta = dY;
    for (std::size_t l = L; l-- > 0;) {
      const M& input = (l == 0) ? X : hidden[l - 1];
      g.dW[l] = delta * input.transpose();
      g.db[l] = delta.rowwise().sum();
      if (l > 0) {
        M back = W[l].transpose() * delta;
        delta = back.cwiseProduct(
            (M::Ones(hidden[l - 1].rows(), hidden[l - 1].cols()) -
             hidden[l - 1].cwiseProduct(hidden[l - 1])));
      }
    }
    return g;
  }

  void adam_step(const Grads& g, S lr, S beta1 = S(0.9), S beta2 = S(0.999),
                 S eps = S(1e-8)) {
    ++adam_t;
    const S bc1 = S(1) - std::pow(beta1, S(adam_t));
    const S bc2 = S(1) - std::pow(beta2, S(adam_t));
    for (std::size_t l = 0; l < W.size(); ++l) {
      mW[l] = beta1 * mW[l] + (S(1) - beta1) * g.dW[l];
      vW[l] = beta2 * vW[l] + (S(1) - beta2) * g.dW[l].cwiseProduct(g.dW[l]);
      W[l] -= lr * (mW[l] / bc1)
                  .cwiseQuotient(((vW[l] / bc2).cwiseSqrt().array() + eps)
                                     .matrix());
      mb[l] = beta1 * mb[l] + (S(1) - beta1) * g.db[l];
      vb[l] = beta2 * vb[l] + (S(1) - beta2) * g.db[l].cwiseProduct(g.db[l]);
      b[l] -= lr * (mb[l] / bc1)
                  .cwiseQuotient(((vb[l] / bc2).cwiseSqrt().array() + eps)
                                     .matrix());
    }
  }

  // Flat parameter access (serialization, snapshots, finite differences).
  std::size_t num_params() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < W.size(); ++l)
      n += static_cast<std::size_t>(W[l].size() + b[l].size());
    return n;
  }

  S get_param(std::size_t i) const {
    for (std::size_t l = 0; l < W.size(); ++l) {
      if (i < static_cast<std::size_t>(W[l].size())) return W[l].data()[i];
      i -= W[l].size();
      if (i < static_cast<std::size_t>(b[l].size())) return b[l].data()[i];
      i -= b[l].size();
    }
    throw CoinsError("param index out of range");
  }

  void set_param(std::size_t i, S v) {
    for (std::size_t l = 0; l < W.size(); ++l) {
      if (i < static_cast<std::size_t>(W[l].size())) {
        W[l].data()[i] = v;
        return;
      }
      i -= W[l].size();
      if (i < static_cast<std::size_t>(b[l].size())) {
        b[l].data()[i] = v;
        return;
      }
      i -= b[l].size();
    }
    throw CoinsError("param index out of range");
  }

  std::vector<S> params_flat() const {
    std::vector<S> out;
    out.reserve(num_params());
    for (std::size_t l = 0; l < W.size(); ++l) {
      out.insert(out.end(), W[l].data(), W[l].data() + W[l].size());
      out.insert(out.end(), b[l].data(), b[l].data() + b[l].size());
    }
    return out;
  }

  void set_params_flat(const std::vector<S>& p) {
    if (p.size() != num_params())
      throw CoinsError("parameter vector size mismatch");
    std::size_t i = 0;
    for (std::size_t l = 0; l < W.size(); ++l) {
      std::copy(p.begin() + i, p.begin() + i + W[l].size(), W[l].data());
      i += W[l].size();
      std::copy(p.begin() + i, p.begin() + i + b[l].size(), b[l].data());
      i += b[l].size();
    }
  }

  S grad_param(const Grads& g, std::size_t i) const {
    for (std::size_t l = 0; l < g.dW.size(); ++l) {
      if (i < static_cast<std::size_t>(g.dW[l].size()))
        return g.dW[l].data()[i];
      i -= g.dW[l].size();
      if (i < static_cast<std::size_t>(g.db[l].size()))
        return g.db[l].data()[i];
      i -= g.db[l].size();
    }
    throw CoinsError("grad index out of range");
  }
};

// Central-difference gradient verification. `loss` must be a pure function
// of the network parameters. Returns the worst relative error
// |analytic - numeric| / max(|analytic|, |numeric|, floor).
template <typename S, typename LossFn>
double gradcheck_max_rel_error(MLP<S>& net, LossFn&& loss,
                               const typename MLP<S>::Grads& analytic,
                               double h = 1e-5, double floor_abs = 1e-6) {
  double worst = 0.0;
  const std::size_t n = net.num_params();
  for (std::size_t i = 0; i < n; ++i) {
    const S orig = net.get_param(i);
    net.set_param(i, orig + static_cast<S>(h));
    const double lp = static_cast<double>(loss());
    net.set_param(i, orig - static_cast<S>(h));
    const double lm = static_cast<double>(loss());
    net.set_param(i, orig);
    const double numeric = (lp - lm) / (2.0 * h);
    const double a = static_cast<double>(net.grad_param(analytic, i));
    const double denom = std::max({std::abs(a), std::abs(numeric), floor_abs});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace coins
