#include "coins/skill.hpp"

#include <algorithm>
#include <cmath>

namespace coins {

std::vector<FactorId> SkillChain::controlled() const {
  std::vector<FactorId> out = {kActionFactor};
  for (const Skill& s : skills) out.push_back(s.target);
  return out;
}

int actions_for_parent(const ControlMask& m) {
  if (m.discrete) return static_cast<int>(m.goals.size());
  int n = 1;
  for (int k = 0; k < m.dim(); ++k) n *= 5;
  if (n > 32)
    throw CoinsError("relative-offset grid too large for parent goal space");
  return n;
}

Vec relative_grid_point(int action, int md) {
  Vec out(md);
  for (int k = 0; k < md; ++k) {
    out[k] = static_cast<float>(action % 5) * 0.5f - 1.f;
    action /= 5;
  }
  return out;
}

Vec remap_relative_action(const Schema& sch, FactorId parent_target,
                          const ControlMask& parent_mask, const Vec& out,
                          float d, const Vec& s_parent_target) {
  const int md = parent_mask.dim();
  if (out.size() != md)
    throw CoinsError("remap_relative_action: offset dim mismatch");
  Vec goal(md);
  for (int k = 0; k < md; ++k) {
    const int f = parent_mask.midx[k];
    const FeatureRange& r = sch.factor(parent_target).features.at(f);
    const float g = s_parent_target[f] + out[k] * d * (r.hi - r.lo);
    goal[k] = clamp(g, parent_mask.lo[k], parent_mask.hi[k]);
  }
  return goal;
}

int skill_policy_input_dim(const Schema& sch, const Skill& sk) {
  const int md = sk.mask.dim();
  int n = sch.dim(sk.target) + 2 * md;
  if (sk.source != kActionFactor) {
    n += sch.dim(sk.source);
    if (Schema::has_position(sk.source) && Schema::has_position(sk.target))
      n += 2;
  }
  return n;
}

Vec skill_policy_input(const Schema& sch, const Skill& sk, const Vec& s_a,
                       const Vec& s_b, const Vec& goal) {
  const int md = sk.mask.dim();
  if (goal.size() != md) throw CoinsError("goal dim mismatch");
  Vec out(skill_policy_input_dim(sch, sk));
  int at = 0;
  if (sk.source != kActionFactor) {
    for (int k = 0; k < s_a.size(); ++k)
      out[at++] = sch.normalize(sk.source, k, s_a[k]);
  }
  for (int k = 0; k < s_b.size(); ++k)
    out[at++] = sch.normalize(sk.target, k, s_b[k]);
  if (sk.source != kActionFactor && Schema::has_position(sk.source) &&
      Schema::has_position(sk.target)) {
    out[at++] = (s_a[0] - s_b[0]) / 42.f;
    out[at++] = (s_a[1] - s_b[1]) / 42.f;
  }
  for (int k = 0; k < md; ++k)
    out[at++] = sch.normalize(sk.target, sk.mask.midx[k], goal[k]);
  for (int k = 0; k < md; ++k) {
    const float sb = sch.normalize(sk.target, sk.mask.midx[k],
                                   s_b[sk.mask.midx[k]]);
    const float gn = sch.normalize(sk.target, sk.mask.midx[k], goal[k]);
    out[at++] = sb - gn;
  }
  return out;
}

namespace {
float masked_l1(const ControlMask& mask, const Vec& masked_post,
                const Vec& goal) {
  float l1 = 0.f;
  for (int k = 0; k < mask.dim(); ++k)
    l1 += std::abs(masked_post[k] - goal[k]);
  return l1;
}
}  // namespace

bool skill_terminates(const Schema& sch, const Skill& sk, const Vec& s_a,
                      const Vec& s_b, const Vec& s_b_post, const Vec& goal) {
  if (!detect(sch, *sk.models, sk.thr, s_a, s_b, s_b_post)) return false;
  return masked_l1(sk.mask, sk.mask.masked(s_b_post), goal) < sk.eps_c;
}

float segment_reward(int tau, bool terminated, float gamma, float eps_rew) {
  const int costly = terminated ? tau - 1 : tau;
  double s = 0.0;
  if (std::abs(gamma - 1.f) < 1e-9f) {
    s = costly;
  } else {
    s = (1.0 - std::pow(gamma, costly)) / (1.0 - gamma);
  }
  return static_cast<float>(-eps_rew * s);
}

const Vec& StepObs::pre_state(FactorId f) const {
  for (const auto& [id, v] : pre)
    if (id == f) return v;
  throw CoinsError("StepObs: factor not captured");
}

const Vec& StepObs::post_state(FactorId f) const {
  for (const auto& [id, v] : post)
    if (id == f) return v;
  throw CoinsError("StepObs: factor not captured");
}

namespace {

std::vector<FactorId> chain_obs_factors(const SkillChain& chain) {
  std::vector<FactorId> facs;
  auto add = [&facs](FactorId f) {
    if (f == kActionFactor) return;
    if (std::find(facs.begin(), facs.end(), f) == facs.end())
      facs.push_back(f);
  };
  for (const Skill& s : chain.skills) {
    add(s.source);
    add(s.target);
  }
  return facs;
}

StepObs do_primitive_step(BreakoutEnv& env, const std::vector<FactorId>& facs,
                          int action, const ExecCallbacks& cb) {
  StepObs obs;
  obs.action = action;
  for (FactorId f : facs) obs.pre.emplace_back(f, env.factor_state(f));
  Snap pre;
  if (cb.log) pre = make_snap(env);
  const StepResult res = env.step(action);
  for (FactorId f : facs) obs.post.emplace_back(f, env.factor_state(f));
  obs.env_reward = res.reward;
  obs.env_done = res.done;
  obs.env_terminal = res.terminal;
  if (cb.log) {
    cb.log->add_step(pre, action, res);
    cb.log->note_final(env);
  }
  if (cb.step_counter) ++*cb.step_counter;
  return obs;
}

}  // namespace

EpisodeRec execute_skill(BreakoutEnv& env, const SkillChain& chain, int level,
                         const Vec& goal, float eps_explore, Rng& rng,
                         const ExecCallbacks& cb) {
  if (level < 0 || level >= chain.size())
    throw CoinsError("execute_skill: bad level");
  const Skill& sk = chain.skills[level];
  if (env.done()) throw CoinsError("execute_skill: environment is done");
  const Schema& sch = chain.schema;
  const std::vector<FactorId> facs = chain_obs_factors(chain);

  EpisodeRec ep;
  ep.goal = goal;
  bool ancestor_abort = false;

  while (true) {
    const Vec s_a0 = sk.source == kActionFactor ? Vec()
                                                : env.factor_state(sk.source);
    const Vec s_b0 = env.factor_state(sk.target);
    SegmentRec seg;
    seg.s = skill_policy_input(sch, sk, s_a0, s_b0, goal);
    seg.a = select_action(sk.policy, seg.s, eps_explore, rng);

    bool term = false;
    std::optional<Vec> achieved;
    int tau = 0;

    if (level == 0) {
      const StepObs obs = do_primitive_step(env, facs, seg.a, cb);
      tau = 1;
      ep.env_return += obs.env_reward;
      ep.env_done = obs.env_done;
      ep.env_terminal = obs.env_terminal;
      const Vec pa = Schema::encode_action(obs.action);
      const Vec& pb = obs.pre_state(sk.target);
      const Vec& pb2 = obs.post_state(sk.target);
      if (detect(sch, *sk.models, sk.thr, pa, pb, pb2)) {
        achieved = sk.mask.masked(pb2);
        term = masked_l1(sk.mask, *achieved, goal) < sk.eps_c;
      }
      if (!term && cb.should_abort && cb.should_abort(obs))
        ancestor_abort = true;
    } else {
      const Skill& parent = chain.skills[level - 1];
      Vec pgoal;
      if (parent.mask.discrete) {
        pgoal = parent.mask.goals.at(static_cast<std::size_t>(seg.a));
      } else {
        pgoal = remap_relative_action(
            sch, parent.target, parent.mask,
            relative_grid_point(seg.a, parent.mask.dim()), sk.rel_d,
            env.factor_state(parent.target));
      }
      ExecCallbacks sub_cb;
      sub_cb.log = cb.log;
      sub_cb.step_counter = cb.step_counter;
      sub_cb.gamma = cb.gamma;
      sub_cb.should_abort = [&](const StepObs& obs) {
        const Vec& pa = obs.pre_state(sk.source);
        const Vec& pb = obs.pre_state(sk.target);
        const Vec& pb2 = obs.post_state(sk.target);
        if (detect(sch, *sk.models, sk.thr, pa, pb, pb2)) {
          achieved = sk.mask.masked(pb2);
          if (masked_l1(sk.mask, *achieved, goal) < sk.eps_c) {
            term = true;
            return true;
          }
        }
        if (cb.should_abort && cb.should_abort(obs)) {
          ancestor_abort = true;
          return true;
        }
        return false;
      };
      const EpisodeRec sub =
          execute_skill(env, chain, level - 1, pgoal, 0.f, rng, sub_cb);
      tau = std::max(1, sub.steps);
      ep.env_return += sub.env_return;
      ep.env_done = sub.env_done;
      ep.env_terminal = sub.env_terminal;
    }

    ep.steps += tau;
    seg.tau = tau;
    seg.achieved = achieved;
    seg.done = term ? 1.f : 0.f;
    seg.r = segment_reward(tau, term, cb.gamma, sk.eps_rew);
    const Vec s_a1 = sk.source == kActionFactor ? Vec()
                                                : env.factor_state(sk.source);
    const Vec s_b1 = env.factor_state(sk.target);
    seg.s2 = skill_policy_input(sch, sk, s_a1, s_b1, goal);
    ep.segments.push_back(std::move(seg));

    if (term) {
      ep.success = true;
      break;
    }
    if (ep.env_done || ancestor_abort || ep.steps >= sk.timeout) break;
  }
  return ep;
}

std::optional<Vec> hindsight_goal(const EpisodeRec& ep) {
  std::optional<Vec> g;
  for (const SegmentRec& seg : ep.segments)
    if (seg.achieved) g = seg.achieved;
  return g;
}

std::vector<SegmentRec> relabel_hindsight(const Schema& sch, const Skill& sk,
                                          const EpisodeRec& ep,
                                          const Vec& new_goal, float gamma) {
  const int md = sk.mask.dim();
  const int in_dim = skill_policy_input_dim(sch, sk);
  const int goal_off = in_dim - 2 * md;
  const int diff_off = in_dim - md;
  Vec gn_old(md), gn_new(md);
  for (int k = 0; k < md; ++k) {
    gn_old[k] = sch.normalize(sk.target, sk.mask.midx[k], ep.goal[k]);
    gn_new[k] = sch.normalize(sk.target, sk.mask.midx[k], new_goal[k]);
  }
  auto patch = [&](Vec& input) {
    for (int k = 0; k < md; ++k) {
      input[goal_off + k] = gn_new[k];
      input[diff_off + k] += gn_old[k] - gn_new[k];
    }
  };
  std::vector<SegmentRec> out;
  for (const SegmentRec& seg : ep.segments) {
    SegmentRec r = seg;
    patch(r.s);
    patch(r.s2);
    const bool term =
        r.achieved && masked_l1(sk.mask, *r.achieved, new_goal) < sk.eps_c;
    r.done = term ? 1.f : 0.f;
    r.r = segment_reward(r.tau, term, gamma, sk.eps_rew);
    out.push_back(std::move(r));
    if (term) break;
  }
  return out;
}

Vec sample_goal(const ControlMask& mask, Rng& rng) {
  if (mask.discrete) {
    if (mask.goals.empty()) throw CoinsError("sample_goal: empty goal set");
    return mask.goals[rng.uniform_int(
        static_cast<std::uint64_t>(mask.goals.size()))];
  }
  const int md = mask.dim();
  if (md == 0) throw CoinsError("sample_goal: empty mask");
  Vec g(md);
  for (int k = 0; k < md; ++k)
    g[k] = static_cast<float>(rng.uniform(mask.lo[k], mask.hi[k]));
  return g;
}

TrainSkillResult train_skill(BreakoutEnv& env, SkillChain& chain, int level,
                             long budget, const LearnerConfig& cfg, Rng& rng,
                             TransitionLog* log, long snapshot_at) {
  Skill& sk = chain.skills.at(static_cast<std::size_t>(level));
  ReplayBuffer buf(static_cast<std::size_t>(cfg.replay_capacity));
  QNet target = sk.policy;
  long updates = 0;
  double deficit = 0.0;
  long steps = 0;

  ExecCallbacks cb;
  cb.log = log;
  cb.step_counter = &steps;
  cb.gamma = cfg.gamma;

  std::vector<std::uint8_t> window;
  std::size_t wpos = 0;
  TrainSkillResult res;

  while (steps < budget) {
    if (env.done() || (log && !log->episode_open())) {
      const std::uint64_t s = rng.next_u64();
      env.reset(s);
      if (log) log->start_episode(env, s);
    }
    const Vec goal = sample_goal(sk.mask, rng);
    const float eps = epsilon_at(cfg, steps, budget);
    EpisodeRec ep = execute_skill(env, chain, level, goal, eps, rng, cb);
    ++res.attempts;

    for (const SegmentRec& seg : ep.segments)
      buf.push({seg.s, seg.a, seg.r, seg.s2, seg.done, seg.tau});
    if (rng.uniform() < cfg.her_rate) {
      const auto g = hindsight_goal(ep);
      if (g) {
        for (const SegmentRec& seg :
             relabel_hindsight(chain.schema, sk, ep, *g, cfg.gamma))
          buf.push({seg.s, seg.a, seg.r, seg.s2, seg.done, seg.tau});
      }
    }

    deficit += static_cast<double>(ep.steps) * cfg.updates_per_collect;
    while (deficit >= 1.0 &&
           buf.size() >= static_cast<std::size_t>(cfg.warmup)) {
      update_q(sk.policy, target, buf, cfg, rng);
      deficit -= 1.0;
      if (++updates % cfg.target_sync == 0) target.net = sk.policy.net;
    }

    if (window.size() < static_cast<std::size_t>(cfg.success_window)) {
      window.push_back(ep.success ? 1 : 0);
    } else {
      window[wpos] = ep.success ? 1 : 0;
      wpos = (wpos + 1) % window.size();
    }
    float rate = 0.f;
    for (auto v : window) rate += v;
    rate /= static_cast<float>(window.size());
    res.curve.emplace_back(steps, rate);

    if (snapshot_at > 0 && res.snapshot_taken_at == 0 &&
        steps >= snapshot_at) {
      res.snapshot_params = sk.policy.net.params_flat();
      res.snapshot_taken_at = steps;
    }

    if (eps <= cfg.eps_final + 1e-6f && rate >= cfg.success_floor &&
        steps >= 2 * static_cast<long>(cfg.n_complete)) {
      const long cutoff = steps - cfg.n_complete;
      float then = -1.f;
      for (auto it = res.curve.rbegin(); it != res.curve.rend(); ++it) {
        if (it->first <= cutoff) {
          then = it->second;
          break;
        }
      }
      if (then >= 0.f && std::abs(rate - then) < cfg.success_tol) {
        res.converged = true;
        break;
      }
    }
  }
  res.steps_used = steps;
  res.final_success = res.curve.empty() ? 0.f : res.curve.back().second;
  return res;
}

float evaluate_skill(BreakoutEnv& env, const SkillChain& chain, int level,
                     int attempts, Rng& rng) {
  int succ = 0;
  for (int i = 0; i < attempts; ++i) {
    // Fresh episode per attempt: success then measures goal-reaching from a
    // serve, not luck about where the previous attempt left the env.
    env.reset(rng.next_u64());
    const Vec goal = sample_goal(chain.skills[level].mask, rng);
    const EpisodeRec ep =
        execute_skill(env, chain, level, goal, 0.f, rng, {});
    if (ep.success) ++succ;
  }
  return static_cast<float>(succ) / static_cast<float>(attempts);
}

}  // namespace coins
