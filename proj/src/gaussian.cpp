#include "coins/gaussian.hpp"

#include <algorithm>

namespace coins {

namespace {
constexpr float kPosScale = 42.f;  // half the board size

void append_normalized(const Schema& sch, FactorId f, const Vec& raw, Vec& out,
                       int& at) {
  for (int k = 0; k < raw.size(); ++k) out[at++] = sch.normalize(f, k, raw[k]);
}

bool use_relative(FactorId source, FactorId target) {
  return Schema::has_position(source) && Schema::has_position(target);
}
}  // namespace

int passive_input_dim(const Schema& sch, FactorId target) {
  return sch.dim(target);
}

int active_input_dim(const Schema& sch, FactorId source, FactorId target) {
  return sch.dim(source) + sch.dim(target) +
         (use_relative(source, target) ? 2 : 0);
}

Vec build_passive_input(const Schema& sch, FactorId target, const Vec& s_b) {
  Vec out(sch.dim(target));
  int at = 0;
  append_normalized(sch, target, s_b, out, at);
  return out;
}

Vec build_active_input(const Schema& sch, FactorId source, FactorId target,
                       const Vec& s_a, const Vec& s_b) {
  Vec out(active_input_dim(sch, source, target));
  int at = 0;
  append_normalized(sch, source, s_a, out, at);
  append_normalized(sch, target, s_b, out, at);
  if (use_relative(source, target)) {
    out[at++] = (s_a[0] - s_b[0]) / kPosScale;
    out[at++] = (s_a[1] - s_b[1]) / kPosScale;
  }
  return out;
}

GaussianModel GaussianModel::make_passive(const Schema& sch, FactorId target,
                                          Rng& rng) {
  GaussianModel m;
  m.target = target;
  m.active = false;
  m.core.init(passive_input_dim(sch, target), sch.dim(target), rng);
  return m;
}

GaussianModel GaussianModel::make_active(const Schema& sch, FactorId source,
                                         FactorId target, Rng& rng) {
  GaussianModel m;
  m.source = source;
  m.target = target;
  m.active = true;
  m.core.init(active_input_dim(sch, source, target), sch.dim(target), rng);
  return m;
}

// Assemble input/target matrices for the given record indices.
void fill_pair_batch(const GaussianModel& model, const Schema& sch,
                     const PairView& view,
                     const std::vector<std::size_t>& idx, Mat& X, Mat& T) {
  const int in = model.active
                     ? active_input_dim(sch, model.source, model.target)
                     : passive_input_dim(sch, model.target);
  X.resize(in, static_cast<Eigen::Index>(idx.size()));
  T.resize(model.core.d, static_cast<Eigen::Index>(idx.size()));
  Vec s_a, s_b, s_p;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    view.get(idx[j], s_a, s_b, s_p);
    X.col(static_cast<Eigen::Index>(j)) = model.input_for(sch, s_a, s_b);
    T.col(static_cast<Eigen::Index>(j)) = s_p - s_b;
  }
}

namespace {

Vec gather(const Vec& w, const std::vector<std::size_t>& idx) {
  if (w.size() == 0) return Vec::Ones(static_cast<Eigen::Index>(idx.size()));
  Vec out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j)
    out[static_cast<Eigen::Index>(j)] = w[static_cast<Eigen::Index>(idx[j])];
  return out;
}

}  // namespace

FitReport fit_gaussian(GaussianModel& model, const Schema& sch,
                       const PairView& view, const FitConfig& cfg,
                       const Vec& weights) {
  const std::size_t n = view.size();
  if (n == 0) throw CoinsError("fit_gaussian: empty dataset");
  if (weights.size() != 0 && static_cast<std::size_t>(weights.size()) != n)
    throw CoinsError("fit_gaussian: weight vector size mismatch");
  Rng rng(cfg.seed);

  // Loss profile under the incoming model, for focused batch sampling and
  // for surfacing the worst records to the monitor. Hard records are
  // typically a small fraction of the data; uniform batches visit them too
  // rarely to carve them into the net within any reasonable budget.
  const float ff = std::clamp(cfg.focus_frac, 0.f, 1.f);
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  Vec ll0;
  loglik_records(model, sch, view, all, ll0);
  std::vector<double> cum(n);
  double total_loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double li =
        std::min(std::max(-static_cast<double>(ll0[static_cast<Eigen::Index>(
                              i)]),
                          0.0),
                 1e6);
    total_loss += li;
    cum[i] = total_loss;
  }
  const bool focused = ff > 0.f && total_loss > 0.0;

  // Monitor: a strided cross-section plus the records the incoming model
  // scores worst, so plateau detection and best-parameter snapshots see the
  // hard tail instead of only bulk behaviour.
  auto mon_idx = strided_subsample(
      n, static_cast<std::size_t>(std::max(1, cfg.monitor_size)));
  {
    const std::size_t k =
        std::min<std::size_t>(n, std::max(1, cfg.monitor_size / 4));
    std::vector<std::size_t> worst(n);
    for (std::size_t i = 0; i < n; ++i) worst[i] = i;
    std::partial_sort(worst.begin(), worst.begin() + k, worst.end(),
                      [&](std::size_t a, std::size_t b) {
                        return ll0[static_cast<Eigen::Index>(a)] <
                               ll0[static_cast<Eigen::Index>(b)];
                      });
    worst.resize(k);
    mon_idx.insert(mon_idx.end(), worst.begin(), worst.end());
    std::sort(mon_idx.begin(), mon_idx.end());
    mon_idx.erase(std::unique(mon_idx.begin(), mon_idx.end()), mon_idx.end());
  }
  Mat Xm, Tm;
  fill_pair_batch(model, sch, view, mon_idx, Xm, Tm);
  const Vec wm = gather(weights, mon_idx);

  FitReport rep;
  float best = model.core.nll_batch(Xm, Tm, wm, nullptr);
  rep.initial_nll = best;
  std::vector<float> best_params = model.core.net.params_flat();

  int stale = 0;
  std::vector<std::size_t> bidx(static_cast<std::size_t>(cfg.batch));
  Vec wb(static_cast<Eigen::Index>(cfg.batch));
  Mat X, T;
  for (int step = 1; step <= cfg.max_steps; ++step) {
    for (std::size_t j = 0; j < bidx.size(); ++j) {
      std::size_t i;
      if (focused && rng.uniform(0.0, 1.0) < ff) {
        const double u = rng.uniform(0.0, 1.0) * total_loss;
        i = static_cast<std::size_t>(
            std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        if (i >= n) i = n - 1;
      } else {
        i = rng.uniform_int(static_cast<std::uint64_t>(n));
      }
      bidx[j] = i;
      // Likelihood-ratio correction keeps the weighted objective unbiased
      // under the mixed sampling distribution.
      float m = 1.f;
      if (focused) {
        const double li = cum[i] - (i ? cum[i - 1] : 0.0);
        const double qi = ff * li / total_loss + (1.0 - ff) / double(n);
        m = static_cast<float>(1.0 / (double(n) * qi));
      }
      wb[static_cast<Eigen::Index>(j)] =
          m * (weights.size() ? weights[static_cast<Eigen::Index>(i)] : 1.f);
    }
    fill_pair_batch(model, sch, view, bidx, X, T);
    MLP<float>::Grads g;
    model.core.nll_batch(X, T, wb, &g);
    model.core.net.adam_step(g, cfg.lr);
    rep.steps = step;

    if (step % cfg.monitor_every == 0 || step == cfg.max_steps) {
      const float cur = model.core.nll_batch(Xm, Tm, wm, nullptr);
      if (cur < best - cfg.plateau_tol) {
        best = cur;
        best_params = model.core.net.params_flat();
        stale = 0;
      } else {
        ++stale;
      }
      if (stale >= cfg.plateau_patience && step >= cfg.min_steps) {
        rep.plateaued = true;
        break;
      }
    }
  }
  model.core.net.set_params_flat(best_params);
  model.core.net.reset_adam();
  rep.final_nll = best;
  return rep;
}

Vec balance_weights(const Schema& sch, const PairView& view,
                    const GaussianModel& passive, float lambda,
                    float prox_eps, float surprise_cap) {
  const std::size_t n = view.size();
  Vec w = Vec::Ones(static_cast<Eigen::Index>(n));
  const bool positioned = Schema::has_position(view.source()) &&
                          Schema::has_position(view.target());
  constexpr std::size_t kChunk = 8192;
  Vec s_a, s_b, s_p, ll;
  Mat X, T;
  std::vector<std::size_t> idx;
  for (std::size_t base = 0; base < n; base += kChunk) {
    const std::size_t m = std::min(kChunk, n - base);
    idx.resize(m);
    for (std::size_t j = 0; j < m; ++j) idx[j] = base + j;
    fill_pair_batch(passive, sch, view, idx, X, T);
    passive.core.loglik_batch(X, T, ll);
    for (std::size_t j = 0; j < m; ++j) {
      const float l = ll[static_cast<Eigen::Index>(j)];
      if (l >= 0.f) continue;
      bool close = true;
      if (positioned) {
        view.get(base + j, s_a, s_b, s_p);
        const float dy = s_a[0] - s_b[0];
        const float dx = s_a[1] - s_b[1];
        close = std::sqrt(dy * dy + dx * dx) < prox_eps;
      }
      // Weight grows with the passive model's surprise, so the rare records
      // it cannot explain at all (true interactions) dominate the boost and
      // records it merely hedges on stay lightly weighted. The cap keeps a
      // few extreme records from owning the objective.
      if (close)
        w[static_cast<Eigen::Index>(base + j)] =
            1.f + lambda * std::min(-l, surprise_cap);
    }
  }
  return w;
}

Vec interaction_mix_weights(const std::vector<std::uint8_t>& flags,
                            float mix) {
  Vec w(static_cast<Eigen::Index>(flags.size()));
  for (std::size_t i = 0; i < flags.size(); ++i)
    w[static_cast<Eigen::Index>(i)] = (1.f - mix) + mix * (flags[i] ? 1.f : 0.f);
  return w;
}

void loglik_records(const GaussianModel& model, const Schema& sch,
                    const PairView& view,
                    const std::vector<std::size_t>& idx, Vec& out) {
  out.resize(static_cast<Eigen::Index>(idx.size()));
  constexpr std::size_t kChunk = 8192;
  Mat X, T;
  Vec ll;
  std::vector<std::size_t> chunk;
  for (std::size_t base = 0; base < idx.size(); base += kChunk) {
    const std::size_t m = std::min(kChunk, idx.size() - base);
    chunk.assign(idx.begin() + base, idx.begin() + base + m);
    fill_pair_batch(model, sch, view, chunk, X, T);
    model.core.loglik_batch(X, T, ll);
    for (std::size_t j = 0; j < m; ++j)
      out[static_cast<Eigen::Index>(base + j)] = ll[static_cast<Eigen::Index>(j)];
  }
}

}  // namespace coins
