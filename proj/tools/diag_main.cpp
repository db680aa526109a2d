// Developer diagnostic: detector quality on stage-1 style data.
//
// Trains the stage-0 paddle skill, collects ball data by driving that skill
// to random goals, then tracks how interaction detection on the paddle->ball
// pair evolves as the active model trains. Prints per-chunk detection stats
// against the ground-truth bounce oracle and the resulting control mask.

#include "coins/chain.hpp"
#include "coins/env.hpp"
#include "coins/gaussian.hpp"
#include "coins/interaction.hpp"
#include "coins/log.hpp"
#include "coins/skill.hpp"

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

using namespace coins;

namespace {

struct Stats {
  float mean = 0.f, q10 = 0.f, q50 = 0.f, q90 = 0.f;
};

Stats stats_of(std::vector<float> v) {
  Stats s;
  if (v.empty()) return s;
  double acc = 0;
  for (float x : v) acc += x;
  s.mean = static_cast<float>(acc / v.size());
  std::sort(v.begin(), v.end());
  auto q = [&](double p) {
    return v[static_cast<std::size_t>(p * (v.size() - 1))];
  };
  s.q10 = q(0.1);
  s.q50 = q(0.5);
  s.q90 = q(0.9);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  long collect_steps = argc > 1 ? std::stol(argv[1]) : 12000;
  int chunks = argc > 2 ? std::stoi(argv[2]) : 12;
  int chunk_steps = argc > 3 ? std::stoi(argv[3]) : 1000;

  BuildConfig cfg;
  cfg.seed = 1;
  cfg.stop_after_stage = 0;
  cfg.verbose = true;
  std::printf("-- building stage-0 chain (paddle skill)\n");
  BuildResult r0 = build_chain(cfg, "");
  if (r0.chain.empty()) {
    std::printf("stage-0 build produced no skill; aborting\n");
    return 1;
  }

  BreakoutEnv env(cfg.variant);
  const Schema& sch = env.schema();
  TransitionLog log;
  Rng rng = Rng::stream(cfg.seed, "diag/collect");
  long counter = 0;
  ExecCallbacks cb;
  cb.log = &log;
  cb.step_counter = &counter;
  while (counter < collect_steps) {
    if (env.done() || !log.episode_open()) {
      const std::uint64_t s = rng.next_u64();
      env.reset(s);
      log.start_episode(env, s);
    }
    const Vec goal = sample_goal(r0.chain.top().mask, rng);
    execute_skill(env, r0.chain, r0.chain.size() - 1, goal, cfg.collect_eps,
                  rng, cb);
  }
  std::printf("-- collected %ld steps in %zu episodes\n", counter,
              log.num_episodes());

  PairView view(log, kPaddleFactor, kBallFactor);
  const std::size_t n = view.size();
  std::vector<std::size_t> all(n);
  std::vector<std::size_t> bounce, other;
  for (std::size_t i = 0; i < n; ++i) {
    all[i] = i;
    (view.oracle_flag(i) ? bounce : other).push_back(i);
  }
  std::printf("-- oracle: %zu paddle bounces / %zu records (rate %.4f)\n",
              bounce.size(), n, double(bounce.size()) / double(n));

  Rng init_rng = Rng::stream(cfg.seed, "diag/init");
  GaussianModel pas = GaussianModel::make_passive(sch, kBallFactor, init_rng);
  FitConfig pf = cfg.fit;
  pf.seed = 7;
  if (argc > 4) {
    pf.max_steps = std::stoi(argv[4]);
    pf.min_steps = pf.max_steps;
    pf.plateau_patience = 1 << 30;
  }
  if (argc > 6) pf.lr = std::stof(argv[6]);
  FitReport prep = fit_gaussian(pas, sch, view, pf);
  std::printf("-- passive fit: steps=%d nll %.3f -> %.3f\n", prep.steps,
              prep.initial_nll, prep.final_nll);

  Vec lp;
  loglik_records(pas, sch, view, all, lp);
  std::vector<float> lp_b, lp_o, lp_nm;
  for (std::size_t i : bounce) lp_b.push_back(lp[i]);
  for (std::size_t i : other) {
    lp_o.push_back(lp[i]);
    Vec s_a, s_b, s_p;
    view.get(i, s_a, s_b, s_p);
    if (s_b[0] >= 78.f && s_b[2] > 0.f) lp_nm.push_back(lp[i]);
  }
  Stats sb = stats_of(lp_b), so = stats_of(lp_o), snm = stats_of(lp_nm);
  int neg_b = 0, neg_nm = 0;
  for (float x : lp_b)
    if (x < 0.f) ++neg_b;
  for (float x : lp_nm)
    if (x < 0.f) ++neg_nm;
  std::printf(
      "-- l_pas bounce: mean=%.2f q10=%.2f q50=%.2f q90=%.2f  (<0: %d/%zu)\n",
      sb.mean, sb.q10, sb.q50, sb.q90, neg_b, lp_b.size());
  std::printf("-- l_pas other:  mean=%.2f q10=%.2f q50=%.2f q90=%.2f\n",
              so.mean, so.q10, so.q50, so.q90);
  std::printf(
      "-- l_pas nearmiss(y>=78,vy>0): mean=%.2f q10=%.2f q50=%.2f q90=%.2f  "
      "(<0: %d/%zu)\n",
      snm.mean, snm.q10, snm.q50, snm.q90, neg_nm, lp_nm.size());

  GaussianModel act =
      GaussianModel::make_active(sch, kPaddleFactor, kBallFactor, init_rng);
  const Vec w = balance_weights(sch, view, pas, cfg.balance_lambda,
                                cfg.balance_prox);
  double wmass_b = 0, wmass_all = 0;
  for (std::size_t i : bounce) wmass_b += w[static_cast<Eigen::Index>(i)];
  for (std::size_t i = 0; i < n; ++i) wmass_all += w[i];
  std::printf("-- balance: bounce weight mass %.0f / total %.0f (%.3f)\n",
              wmass_b, wmass_all, wmass_b / wmass_all);

  DetectorThresholds thr = cfg.thr;
  FitConfig af = cfg.fit;
  af.seed = 11;
  af.max_steps = chunk_steps;
  af.min_steps = chunk_steps;   // no plateau stop inside a chunk
  af.plateau_patience = 1 << 30;
  if (argc > 5) af.lr = std::stof(argv[5]);
  std::printf("-- active fit: lr=%g chunks=%d x %d\n", af.lr, chunks,
              chunk_steps);
  for (int c = 1; c <= chunks; ++c) {
    FitReport arep = fit_gaussian(act, sch, view, af, w);
    af.seed += 1;
    Vec la;
    loglik_records(act, sch, view, all, la);
    std::vector<float> la_b;
    int det_b = 0, det_o = 0, act_hi_b = 0;
    for (std::size_t i : bounce) {
      la_b.push_back(la[i]);
      if (la[i] > thr.eps_act) ++act_hi_b;
      if (detect(la[i], lp[i], thr, false)) ++det_b;
    }
    for (std::size_t i : other)
      if (detect(la[i], lp[i], thr, false)) ++det_o;
    Stats sa = stats_of(la_b);
    std::printf(
        "[%5d steps] nll=%.3f  l_act(bounce): mean=%.2f q10=%.2f q50=%.2f "
        "q90=%.2f  >2: %d/%zu  detected: tp=%d fp=%d\n",
        c * chunk_steps, arep.final_nll, sa.mean, sa.q10, sa.q50, sa.q90,
        act_hi_b, la_b.size(), det_b, det_o);
  }

  // Per-dim breakdown on bounce records: target delta vs model mu/var.
  {
    Mat X, T, Mu, Var;
    fill_pair_batch(act, sch, view, bounce, X, T);
    act.core.mu_var_batch(X, Mu, Var);
    std::printf("-- bounce records (per-dim: delta | mu | var):\n");
    for (std::size_t j = 0; j < bounce.size() && j < 8; ++j) {
      Vec s_a, s_b, s_p;
      view.get(bounce[j], s_a, s_b, s_p);
      std::printf("   pre ball=(%.0f,%.0f,v %.0f,%.0f) paddle_x=%.0f:",
                  s_b[0], s_b[1], s_b[2], s_b[3], s_a[1]);
      for (int k = 0; k < 4; ++k)
        std::printf("  [%.1f|%+.2f|%.3f]", T(k, j), Mu(k, j), Var(k, j));
      std::printf("\n");
    }
  }
  // What else carries boosted weight? Dump the non-bounce flagged records.
  {
    std::vector<std::size_t> flagged;
    for (std::size_t i : other)
      if (w[static_cast<Eigen::Index>(i)] > 1.f) flagged.push_back(i);
    std::printf("-- non-bounce boosted records: %zu (weight %.0f each)\n",
                flagged.size(), flagged.empty() ? 0.f : w[flagged[0]]);
    Vec la2;
    loglik_records(act, sch, view, all, la2);
    for (std::size_t j = 0; j < flagged.size() && j < 10; ++j) {
      Vec s_a, s_b, s_p;
      view.get(flagged[j], s_a, s_b, s_p);
      std::printf(
          "   ball (%.0f,%.0f,v %.0f,%.0f) -> (%.0f,%.0f,v %.0f,%.0f) "
          "paddle_x=%.0f  l_pas=%.1f l_act=%.1f\n",
          s_b[0], s_b[1], s_b[2], s_b[3], s_p[0], s_p[1], s_p[2], s_p[3],
          s_a[1], lp[flagged[j]], la2[flagged[j]]);
    }
  }

  PairModels pm{pas, act};
  PairScore sc = score_pair(sch, pm, thr, view, all);
  std::printf("-- score: mg=%.3f sc=%.3f n_int=%d rate=%.4f\n", sc.mg, sc.sc,
              sc.n_int, sc.rate);
  ControlMask cm = control_mask(sch, pm, thr, view, cfg.eta_eps, cfg.n_disc);
  std::printf("-- mask: n_detected=%d dim=%d [", cm.n_detected, cm.dim());
  for (std::size_t k = 0; k < cm.mask.size(); ++k)
    std::printf("%s%d", k ? "," : "", int(cm.mask[k]));
  std::printf("] mean_dev=[");
  for (Eigen::Index k = 0; k < cm.mean_dev.size(); ++k)
    std::printf("%s%.3f", k ? "," : "", cm.mean_dev[k]);
  std::printf("] %s goals=%zu\n", cm.discrete ? "discrete" : "continuous",
              cm.goals.size());
  for (const Vec& g : cm.goals) {
    std::printf("   goal: [");
    for (Eigen::Index k = 0; k < g.size(); ++k)
      std::printf("%s%.1f", k ? "," : "", g[k]);
    std::printf("]\n");
  }
  return 0;
}
