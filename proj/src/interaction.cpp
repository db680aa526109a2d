#include "coins/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace coins {

bool detect(const Schema& sch, const PairModels& models,
            const DetectorThresholds& thr, const Vec& s_a, const Vec& s_b,
            const Vec& s_b_post) {
  const bool action_source = models.active.source == kActionFactor;
  const float la = models.active.loglik(sch, s_a, s_b, s_b_post);
  if (action_source) return la > thr.eps_act;
  if (la <= thr.eps_act) return false;
  const float lp = models.passive.loglik(sch, s_a, s_b, s_b_post);
  return lp < thr.eps_pas;
}

float mg_score(const Vec& ll_act, const Vec& ll_pas) {
  if (ll_act.size() == 0 || ll_act.size() != ll_pas.size())
    throw CoinsError("mg_score: bad log-likelihood arrays");
  return ll_act.mean() - ll_pas.mean();
}

float interaction_score(const Vec& ll_act, const Vec& ll_pas,
                        const DetectorThresholds& thr, bool action_source,
                        int* n_int_out) {
  if (ll_act.size() != ll_pas.size())
    throw CoinsError("interaction_score: bad log-likelihood arrays");
  double acc = 0.0;
  int n_int = 0;
  for (Eigen::Index i = 0; i < ll_act.size(); ++i) {
    if (detect(ll_act[i], ll_pas[i], thr, action_source)) {
      acc += static_cast<double>(ll_act[i]) - static_cast<double>(ll_pas[i]);
      ++n_int;
    }
  }
  if (n_int_out) *n_int_out = n_int;
  return n_int == 0 ? 0.f : static_cast<float>(acc / n_int);
}

PairScore score_pair(const Schema& sch, const PairModels& models,
                     const DetectorThresholds& thr, const PairView& view,
                     const std::vector<std::size_t>& idx) {
  PairScore s;
  s.source = view.source();
  s.target = view.target();
  s.n = static_cast<int>(idx.size());
  if (idx.empty()) return s;
  Vec la, lp;
  loglik_records(models.active, sch, view, idx, la);
  loglik_records(models.passive, sch, view, idx, lp);
  s.mg = mg_score(la, lp);
  s.sc = interaction_score(la, lp, thr, view.source() == kActionFactor,
                           &s.n_int);
  s.rate = static_cast<float>(s.n_int) / static_cast<float>(s.n);
  return s;
}

std::optional<FactorId> select_target(const ScoreTable& scores,
                                      float eps_si) {
  std::optional<FactorId> best;
  float best_sc = eps_si;
  for (const PairScore& s : scores) {
    if (s.sc > best_sc || (best && s.sc == best_sc && s.target < *best)) {
      best = s.target;
      best_sc = s.sc;
    }
  }
  return best;
}

ControlMask control_mask(const Schema& sch, const PairModels& models,
                         const DetectorThresholds& thr, const PairView& view,
                         float eta_eps, int n_disc, float support_frac) {
  const int d = sch.dim(view.target());
  const bool action_source = view.source() == kActionFactor;
  ControlMask cm;
  cm.mask.assign(d, 0);
  cm.mean_dev = Vec::Zero(d);

  const std::size_t n = view.size();
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;

  // Detected records and their deviation from the passive mean.
  VecD dev_acc = VecD::Zero(d);
  std::vector<std::size_t> detected;
  constexpr std::size_t kChunk = 8192;
  Mat Xa, Ta, Xp, Tp, Mu, Var;
  Vec la, lp_col;
  std::vector<std::size_t> chunk;
  for (std::size_t base = 0; base < n; base += kChunk) {
    const std::size_t m = std::min(kChunk, n - base);
    chunk.assign(all.begin() + base, all.begin() + base + m);
    fill_pair_batch(models.active, sch, view, chunk, Xa, Ta);
    models.active.core.loglik_batch(Xa, Ta, la);
    fill_pair_batch(models.passive, sch, view, chunk, Xp, Tp);
    models.passive.core.loglik_batch(Xp, Tp, lp_col);
    models.passive.core.mu_var_batch(Xp, Mu, Var);
    for (std::size_t j = 0; j < m; ++j) {
      const Eigen::Index jj = static_cast<Eigen::Index>(j);
      if (!detect(la[jj], lp_col[jj], thr, action_source)) continue;
      detected.push_back(base + j);
      for (int k = 0; k < d; ++k) {
        const float raw_dev = std::abs(Tp(k, jj) - Mu(k, jj));
        dev_acc[k] += raw_dev * sch.norm_scale(view.target(), k);
      }
    }
  }
  cm.n_detected = static_cast<int>(detected.size());
  if (detected.empty()) return cm;

  for (int k = 0; k < d; ++k) {
    cm.mean_dev[k] = static_cast<float>(dev_acc[k] / detected.size());
    if (cm.mean_dev[k] > eta_eps) {
      cm.mask[k] = 1;
      cm.midx.push_back(k);
    }
  }
  if (cm.midx.empty()) return cm;

  // Goal space over masked post-values of detected records.
  const int md = cm.dim();
  std::map<std::vector<long long>, int> support;
  Vec s_a, s_b, s_p;
  Vec flo = Vec::Constant(md, std::numeric_limits<float>::max());
  Vec fhi = Vec::Constant(md, std::numeric_limits<float>::lowest());
  for (std::size_t i : detected) {
    view.get(i, s_a, s_b, s_p);
    std::vector<long long> key(md);
    for (int k = 0; k < md; ++k) {
      const float v = s_p[cm.midx[k]];
      key[k] = static_cast<long long>(std::llround(v * 1e4));
      flo[k] = std::min(flo[k], v);
      fhi[k] = std::max(fhi[k], v);
    }
    ++support[key];
  }
  const int min_support = std::max(
      2, static_cast<int>(std::ceil(support_frac * detected.size())));
  std::vector<Vec> goals;
  for (const auto& [key, cnt] : support) {
    if (cnt < min_support) continue;
    Vec g(md);
    for (int k = 0; k < md; ++k) g[k] = static_cast<float>(key[k]) * 1e-4f;
    goals.push_back(g);
  }
  cm.lo = flo;
  cm.hi = fhi;
  if (!goals.empty() && static_cast<int>(goals.size()) < n_disc) {
    cm.discrete = true;
    cm.goals = std::move(goals);  // map iteration is already sorted
  }
  return cm;
}

}  // namespace coins
