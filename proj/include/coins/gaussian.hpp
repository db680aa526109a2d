#pragma once
// Conditional diagonal Gaussian dynamics models.
//
// A model maps a normalized input (target factor state, optionally preceded
// by the source factor state and relative-position features) to a Gaussian
// over the target factor's next-step change s_b' - s_b in raw grid units:
//   mu = head_1(x),  var = var_min + softplus(head_2(x))  (featurewise).
// Predicting the delta keeps head magnitudes small (fast Adam convergence)
// and is an exact reparameterization: log-likelihoods of s_b' equal those of
// the delta, and absolute means are recovered as s_b + mu.
//
// The variance floor var_min = 0.01 is structural (softplus is positive), so
// log-likelihoods are bounded above by d * -0.5*ln(2*pi*0.01) ~ d * 1.3836.

#include "coins/common.hpp"
#include "coins/log.hpp"
#include "coins/net.hpp"
#include "coins/schema.hpp"

#include <optional>

namespace coins {

template <typename S>
struct GaussianCore {
  using V = typename MLP<S>::V;
  using M = typename MLP<S>::M;

  MLP<S> net;
  int d = 0;  // target feature count
  S var_min = S(0.01);

  void init(int in_dim, int out_dim, Rng& rng) {
    d = out_dim;
    net.init({in_dim, 64, 64, 2 * out_dim}, rng, /*zero_final=*/true);
  }

  static S softplus(S z) {
    return z > S(20) ? z : std::log1p(std::exp(z));
  }
  static S sigmoid(S z) {
    if (z >= S(0)) return S(1) / (S(1) + std::exp(-z));
    const S e = std::exp(z);
    return e / (S(1) + e);
  }

  // Weighted mean NLL over a batch (columns = samples); fills grads of the
  // same objective when `g` is non-null. T holds raw-unit delta targets.
  S nll_batch(const M& X, const M& T, const V& w,
              typename MLP<S>::Grads* g) const {
    std::vector<M> hidden;
    const M Y = net.forward(X, g ? &hidden : nullptr);
    const auto B = X.cols();
    S wsum = S(0);
    for (Eigen::Index j = 0; j < B; ++j) wsum += w[j];
    if (wsum <= S(0)) throw NumericalError("nll_batch: zero weight sum");

    M dY;
    if (g) dY = M::Zero(2 * d, B);
    S loss = S(0);
    constexpr double k2pi = 6.283185307179586476925286766559;
    for (Eigen::Index j = 0; j < B; ++j) {
      const S wj = w[j] / wsum;
      for (int k = 0; k < d; ++k) {
        const S mu = Y(k, j);
        const S z = Y(d + k, j);
        const S v = var_min + softplus(z);
        const S r = mu - T(k, j);
        loss += wj * (S(0.5) * std::log(S(k2pi) * v) + r * r / (S(2) * v));
        if (g) {
          dY(k, j) = wj * r / v;
          dY(d + k, j) =
              wj * (S(0.5) / v - r * r / (S(2) * v * v)) * sigmoid(z);
        }
      }
    }
    if (!std::isfinite(static_cast<double>(loss)))
      throw NumericalError("non-finite NLL in model fit");
    if (g) *g = net.backward(X, hidden, dY);
    return loss;
  }

  // Per-sample log-likelihoods (sum over features), batched.
  void loglik_batch(const M& X, const M& T, V& out) const {
    const M Y = net.forward(X);
    out.resize(X.cols());
    constexpr double k2pi = 6.283185307179586476925286766559;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      S ll = S(0);
      for (int k = 0; k < d; ++k) {
        const S v = var_min + softplus(Y(d + k, j));
        const S r = Y(k, j) - T(k, j);
        ll -= S(0.5) * std::log(S(k2pi) * v) + r * r / (S(2) * v);
      }
      out[j] = ll;
    }
  }

  // Featurewise delta means and variances, batched.
  void mu_var_batch(const M& X, M& mu, M& var) const {
    const M Y = net.forward(X);
    mu.resize(d, X.cols());
    var.resize(d, X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      for (int k = 0; k < d; ++k) {
        mu(k, j) = Y(k, j);
        var(k, j) = var_min + softplus(Y(d + k, j));
      }
  }

  S loglik1(const V& x, const V& t) const {
    const V y = net.forward1(x);
    constexpr double k2pi = 6.283185307179586476925286766559;
    S ll = S(0);
    for (int k = 0; k < d; ++k) {
      const S v = var_min + softplus(y[d + k]);
      const S r = y[k] - t[k];
      ll -= S(0.5) * std::log(S(k2pi) * v) + r * r / (S(2) * v);
    }
    return ll;
  }

  void mu_var1(const V& x, V& mu, V& var) const {
    const V y = net.forward1(x);
    mu.resize(d);
    var.resize(d);
    for (int k = 0; k < d; ++k) {
      mu[k] = y[k];
      var[k] = var_min + softplus(y[d + k]);
    }
  }
};

// ---------------------------------------------------------------------------

// Normalized model inputs. Active inputs are [source features, target
// features, relative position] where the source is one-hot for the action
// pseudo-factor and relative position (pos_a - pos_b)/42 is appended when
// both factors carry grid positions.
Vec build_passive_input(const Schema& sch, FactorId target, const Vec& s_b);
Vec build_active_input(const Schema& sch, FactorId source, FactorId target,
                       const Vec& s_a, const Vec& s_b);
int passive_input_dim(const Schema& sch, FactorId target);
int active_input_dim(const Schema& sch, FactorId source, FactorId target);

struct GaussianModel {
  GaussianCore<float> core;
  FactorId source = kActionFactor;  // meaningful only when active
  FactorId target = kBallFactor;
  bool active = false;

  static GaussianModel make_passive(const Schema& sch, FactorId target,
                                    Rng& rng);
  static GaussianModel make_active(const Schema& sch, FactorId source,
                                   FactorId target, Rng& rng);

  Vec input_for(const Schema& sch, const Vec& s_a, const Vec& s_b) const {
    return active ? build_active_input(sch, source, target, s_a, s_b)
                  : build_passive_input(sch, target, s_b);
  }

  // Log-likelihood of the observed transition under the model.
  float loglik(const Schema& sch, const Vec& s_a, const Vec& s_b,
               const Vec& s_b_post) const {
    return core.loglik1(input_for(sch, s_a, s_b).cast<float>(),
                        (s_b_post - s_b).cast<float>());
  }

  // Absolute next-state mean and per-feature variance.
  void predict(const Schema& sch, const Vec& s_a, const Vec& s_b, Vec& mu,
               Vec& var) const {
    Vec mu_d;
    core.mu_var1(input_for(sch, s_a, s_b), mu_d, var);
    mu = s_b + mu_d;
  }
};

struct FitConfig {
  int max_steps = 3000;
  int min_steps = 600;
  int batch = 192;
  float lr = 3e-3f;
  int monitor_every = 100;
  int monitor_size = 2048;
  int plateau_patience = 5;
  float plateau_tol = 1e-3f;
  // Fraction of each batch drawn proportionally to the record's loss under
  // the model at fit start (importance-corrected, so the objective is
  // unchanged); the rest is uniform. Rare hard records — collision cells,
  // interaction transitions — converge orders of magnitude faster than under
  // uniform sampling. 0 disables.
  float focus_frac = 0.5f;
  std::uint64_t seed = 0;
};

struct FitReport {
  int steps = 0;
  float initial_nll = 0.f;
  float final_nll = 0.f;
  bool plateaued = false;
};

// Weighted SGD (Adam) on the NLL with a fixed-subsample monitor; keeps the
// best-scoring parameters seen, so the result is never worse than the
// initialization on the monitor. `weights` may be empty (all ones).
FitReport fit_gaussian(GaussianModel& model, const Schema& sch,
                       const PairView& view, const FitConfig& cfg,
                       const Vec& weights = Vec());

// Data balancing: upweight records whose passive log-likelihood is negative
// and whose source sits within `prox_eps` of the target on shared position
// features (distance 0 when either factor lacks positions). The weight is
// 1 + lambda * min(-loglik, surprise_cap), so mass concentrates on records
// in proportion to how badly the passive model fails on them.
Vec balance_weights(const Schema& sch, const PairView& view,
                    const GaussianModel& passive, float lambda,
                    float prox_eps, float surprise_cap = 40.f);

// Per-record multiplier (1 - mix) + mix * flag; mix = 0 disables.
Vec interaction_mix_weights(const std::vector<std::uint8_t>& flags, float mix);

// Batched per-record log-likelihoods over selected view indices.
void loglik_records(const GaussianModel& model, const Schema& sch,
                    const PairView& view,
                    const std::vector<std::size_t>& idx, Vec& out);

// Assemble normalized inputs X and raw delta targets T for record indices.
void fill_pair_batch(const GaussianModel& model, const Schema& sch,
                     const PairView& view,
                     const std::vector<std::size_t>& idx, Mat& X, Mat& T);

}  // namespace coins
