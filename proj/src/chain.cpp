#include "coins/chain.hpp"

#include "coins/checkpoint.hpp"
#include "coins/csvplot.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <utility>

namespace fs = std::filesystem;
using nlohmann::json;

namespace coins {
namespace {

Rng stage_stream(std::uint64_t seed, int stage, const std::string& what) {
  return Rng::stream(seed, "s" + std::to_string(stage) + "/" + what);
}

std::uint64_t stage_seed(std::uint64_t seed, int stage,
                         const std::string& what) {
  return stage_stream(seed, stage, what).next_u64();
}

bool is_controlled(const std::vector<FactorId>& controlled, FactorId f) {
  return std::find(controlled.begin(), controlled.end(), f) !=
         controlled.end();
}

// Candidate targets for scoring: every uncontrolled mover plus a fixed
// prefix of the (statistically exchangeable) block factors.
std::vector<FactorId> candidate_targets(const std::vector<FactorId>& ctrl,
                                        int block_candidates) {
  std::vector<FactorId> out;
  for (FactorId f : {kPaddleFactor, kBallFactor})
    if (!is_controlled(ctrl, f)) out.push_back(f);
  for (int i = 0; i < std::min(block_candidates, kNumBlocks); ++i)
    out.push_back(block_factor(i));
  return out;
}

// Fit with a single retry at halved learning rate on numerical failure.
FitReport fit_checked(GaussianModel& m, const Schema& sch, const PairView& v,
                      FitConfig fc, const Vec& w, Rng& reinit_rng) {
  try {
    return fit_gaussian(m, sch, v, fc, w);
  } catch (const NumericalError&) {
    m = m.active ? GaussianModel::make_active(sch, m.source, m.target,
                                              reinit_rng)
                 : GaussianModel::make_passive(sch, m.target, reinit_rng);
    fc.lr *= 0.5f;
    std::uint64_t s = fc.seed ^ 0x9e3779b97f4a7c15ull;
    fc.seed = splitmix64(s);
    return fit_gaussian(m, sch, v, fc, w);
  }
}

long collect_with_skill(BreakoutEnv& env, const SkillChain& chain, float eps,
                        long steps, TransitionLog& log, Rng& rng) {
  long counter = 0;
  ExecCallbacks cb;
  cb.log = &log;
  cb.step_counter = &counter;
  while (counter < steps) {
    if (env.done() || !log.episode_open()) {
      const std::uint64_t s = rng.next_u64();
      env.reset(s);
      log.start_episode(env, s);
    }
    const Vec goal = sample_goal(chain.top().mask, rng);
    execute_skill(env, chain, chain.size() - 1, goal, eps, rng, cb);
  }
  return counter;
}

// Best-scoring row for the target chosen by select_target, considering only
// rows whose detection count clears the support floor.
const PairScore* best_row(const ScoreTable& table, float eps_si,
                          int min_count, float min_frac) {
  ScoreTable eligible;
  for (const PairScore& row : table) {
    const int floor = std::max(
        min_count, static_cast<int>(std::ceil(min_frac * float(row.n))));
    if (row.n_int >= floor) eligible.push_back(row);
  }
  const auto tgt = select_target(eligible, eps_si);
  if (!tgt) return nullptr;
  const PairScore* best = nullptr;
  for (const PairScore& row : table) {
    const int floor = std::max(
        min_count, static_cast<int>(std::ceil(min_frac * float(row.n))));
    if (row.n_int < floor) continue;
    if (row.target == *tgt && (!best || row.sc > best->sc)) best = &row;
  }
  return best;
}

// Audit artifact: every record the polished detector flags for the selected
// pair, with both log-likelihoods, the simulator's ground-truth label, and
// the raw source/target features around the transition.
void dump_detected_csv(const std::string& path, const Schema& sch,
                       const PairModels& pm, const DetectorThresholds& thr,
                       const PairView& view) {
  std::ofstream out(path);
  out << "idx,oracle,ll_pas,ll_act";
  const int da = view.source() == kActionFactor ? kNumActions
                                                : sch.dim(view.source());
  const int d = sch.dim(view.target());
  for (int k = 0; k < da; ++k) out << ",a" << k;
  for (int k = 0; k < d; ++k) out << ",pre" << k;
  for (int k = 0; k < d; ++k) out << ",post" << k;
  out << "\n";
  const bool action_source = view.source() == kActionFactor;
  const std::size_t n = view.size();
  constexpr std::size_t kChunk = 8192;
  Mat Xa, Ta, Xp, Tp;
  Vec la, lp;
  std::vector<std::size_t> chunk;
  Vec s_a, s_b, s_p;
  for (std::size_t base = 0; base < n; base += kChunk) {
    const std::size_t m = std::min(kChunk, n - base);
    chunk.resize(m);
    for (std::size_t j = 0; j < m; ++j) chunk[j] = base + j;
    fill_pair_batch(pm.active, sch, view, chunk, Xa, Ta);
    pm.active.core.loglik_batch(Xa, Ta, la);
    fill_pair_batch(pm.passive, sch, view, chunk, Xp, Tp);
    pm.passive.core.loglik_batch(Xp, Tp, lp);
    for (std::size_t j = 0; j < m; ++j) {
      const Eigen::Index jj = static_cast<Eigen::Index>(j);
      if (!detect(la[jj], lp[jj], thr, action_source)) continue;
      view.get(base + j, s_a, s_b, s_p);
      out << (base + j) << ',' << (view.oracle_flag(base + j) ? 1 : 0) << ','
          << lp[jj] << ',' << la[jj];
      for (int k = 0; k < s_a.size(); ++k) out << ',' << s_a[k];
      for (int k = 0; k < d; ++k) out << ',' << s_b[k];
      for (int k = 0; k < d; ++k) out << ',' << s_p[k];
      out << "\n";
    }
  }
}

void write_manifest(const std::string& out_dir, const BuildConfig& cfg,
                    const Schema& sch, const std::vector<StageReport>& stages,
                    bool terminated, int first_stage) {
  if (out_dir.empty()) return;
  const std::string path = out_dir + "/manifest.json";
  json doc;
  doc["seed"] = cfg.seed;
  doc["variant"] = to_string(cfg.variant);
  doc["terminated"] = terminated;
  json arr = json::array();
  if (first_stage > 0 && fs::exists(path)) {
    std::ifstream in(path);
    json old = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (old.is_object() && old.contains("stages"))
      for (const auto& st : old["stages"])
        if (st.value("stage", -1) < first_stage) arr.push_back(st);
  }
  for (const StageReport& rep : stages) {
    json st;
    st["stage"] = rep.stage;
    st["increments"] = rep.increments;
    st["collected"] = rep.collected;
    st["selected"] = rep.selected;
    if (rep.selected) {
      st["source"] = sch.name(rep.source);
      st["target"] = sch.name(rep.target);
      st["mask"] = json::array();
      for (auto b : rep.mask.mask) st["mask"].push_back(int(b));
      st["discrete"] = rep.mask.discrete;
      st["n_goals"] = rep.mask.goals.size();
      st["train_steps"] = rep.train.steps_used;
      st["train_converged"] = rep.train.converged;
      st["train_success"] = rep.train.final_success;
      st["eval_success"] = rep.eval_success;
    }
    arr.push_back(st);
  }
  doc["stages"] = std::move(arr);
  std::ofstream out(path);
  out << doc.dump(2) << "\n";
}

}  // namespace

BuildResult build_chain(const BuildConfig& cfg, const std::string& out_dir,
                        bool resume) {
  BuildResult result;
  BreakoutEnv env(cfg.variant);
  const Schema& sch = env.schema();
  result.chain.schema = sch;

  int first_stage = 0;
  if (resume) {
    if (out_dir.empty())
      throw CoinsError("build_chain: resume requires an output directory");
    BuildState st = load_build_state(out_dir + "/build_state.ckpt");
    if (st.seed != cfg.seed || st.variant != cfg.variant)
      throw CheckpointError(
          "build_chain: checkpoint seed/variant do not match the config");
    result.chain = std::move(st.chain);
    result.total_env_steps = st.total_env_steps;
    first_stage = st.stages_done;
    if (st.terminated) {
      result.terminated = true;
      return result;
    }
  }
  if (!out_dir.empty()) fs::create_directories(out_dir);

  for (int stage = first_stage; stage < cfg.max_stages; ++stage) {
    if (cfg.stop_after_stage >= 0 && stage > cfg.stop_after_stage) break;
    StageReport rep;
    rep.stage = stage;

    const std::vector<FactorId> ctrl = result.chain.controlled();
    const std::vector<FactorId> targets =
        candidate_targets(ctrl, cfg.block_candidates);
    if (targets.empty()) {
      result.terminated = true;
      break;
    }
    const std::string stage_dir =
        out_dir.empty() ? "" : out_dir + "/stage" + std::to_string(stage);
    if (!stage_dir.empty()) fs::create_directories(stage_dir);

    TransitionLog log;
    Rng collect_rng = stage_stream(cfg.seed, stage, "collect");
    Rng init_rng = stage_stream(cfg.seed, stage, "init");
    Rng retry_rng = stage_stream(cfg.seed, stage, "retry");

    std::map<FactorId, GaussianModel> passive;
    std::map<std::pair<FactorId, FactorId>, GaussianModel> active;

    const PairScore* chosen = nullptr;
    PairModels selected_models;
    ScoreTable table;
    for (int inc = 0; inc < cfg.max_increments; ++inc) {
      if (result.chain.empty()) {
        collect_primitive(
            env,
            [&collect_rng](const BreakoutEnv&) {
              return static_cast<int>(collect_rng.uniform_int(
                  static_cast<std::uint64_t>(kNumActions)));
            },
            cfg.collect_increment, log, collect_rng);
        result.total_env_steps += cfg.collect_increment;
      } else {
        result.total_env_steps += collect_with_skill(
            env, result.chain, cfg.collect_eps, cfg.collect_increment, log,
            collect_rng);
      }
      rep.increments = inc + 1;
      rep.collected = static_cast<long>(log.total_steps());

      const auto score_idx = strided_subsample(
          log.usable_steps(), static_cast<std::size_t>(cfg.score_subsample));
      const std::string itag = "i" + std::to_string(inc) + "/";

      table.clear();
      for (FactorId t : targets) {
        PairView pview(log, kActionFactor, t);
        auto pit = passive.find(t);
        if (pit == passive.end())
          pit = passive
                    .emplace(t, GaussianModel::make_passive(sch, t, init_rng))
                    .first;
        FitConfig fc = cfg.fit;
        fc.seed = stage_seed(cfg.seed, stage,
                             itag + "fit/p" + std::to_string(t));
        fit_checked(pit->second, sch, pview, fc, Vec(), retry_rng);
      }
      for (FactorId s : ctrl) {
        for (FactorId t : targets) {
          PairView view(log, s, t);
          const Vec w =
              balance_weights(sch, view, passive.at(t), cfg.balance_lambda,
                              cfg.balance_prox, cfg.balance_cap);
          auto key = std::make_pair(s, t);
          auto ait = active.find(key);
          if (ait == active.end())
            ait = active
                      .emplace(key,
                               GaussianModel::make_active(sch, s, t, init_rng))
                      .first;
          FitConfig fc = cfg.fit;
          fc.seed = stage_seed(cfg.seed, stage,
                               itag + "fit/a" + std::to_string(s) + "_" +
                                   std::to_string(t));
          fit_checked(ait->second, sch, view, fc, w, retry_rng);
          PairModels pm{passive.at(t), ait->second};
          table.push_back(score_pair(sch, pm, cfg.thr, view, score_idx));
        }
      }
      if (!stage_dir.empty())
        write_score_csv(
            stage_dir + "/scores_inc" + std::to_string(inc) + ".csv", sch,
            table);
      chosen = best_row(table, cfg.eps_si, cfg.min_int_count,
                        cfg.min_int_frac);
      if (cfg.verbose) {
        const PairScore* top = nullptr;
        for (const PairScore& r : table)
          if (!top || r.sc > top->sc) top = &r;
        std::printf("[stage %d] inc %d: n=%ld best %s->%s sc=%.3f%s\n", stage,
                    inc + 1, rep.collected,
                    top ? sch.name(top->source).c_str() : "-",
                    top ? sch.name(top->target).c_str() : "-",
                    top ? top->sc : 0.f, chosen ? " (selected)" : "");
        for (const PairScore& r : table)
          if (r.n_int > 0 && r.source != kActionFactor)
            std::printf("          %s->%s sc=%.3f n_int=%d rate=%.5f\n",
                        sch.name(r.source).c_str(), sch.name(r.target).c_str(),
                        r.sc, r.n_int, r.rate);
        std::fflush(stdout);
      }
      if (!chosen) continue;

      // Polish the candidate pair on the full stage data, then extract the
      // control mask from the polished detector. An empty mask means the
      // detections carry no controllable signal yet (detector artifacts,
      // typically underfit models on rare events), so the selection is
      // vetoed and collection continues with the polished models warm.
      PairView view(log, chosen->source, chosen->target);
      FitConfig ff = cfg.fit;
      ff.max_steps = cfg.final_fit_steps;
      // The polish run must spend its full budget: early plateau checks fire
      // on bulk convergence long before the rare interaction cells are
      // carved out, and the mask quality rides entirely on those cells.
      ff.min_steps = cfg.final_fit_steps;
      ff.seed = stage_seed(cfg.seed, stage, itag + "final/p");
      GaussianModel& pas = passive.at(chosen->target);
      rep.passive_fit = fit_checked(pas, sch, view, ff, Vec(), retry_rng);
      const Vec fw = balance_weights(sch, view, pas, cfg.balance_lambda,
                                     cfg.balance_prox, cfg.balance_cap);
      GaussianModel& act = active.at({chosen->source, chosen->target});
      ff.seed = stage_seed(cfg.seed, stage, itag + "final/a");
      rep.active_fit = fit_checked(act, sch, view, ff, fw, retry_rng);

      selected_models = PairModels{pas, act};
      if (!stage_dir.empty())
        dump_detected_csv(stage_dir + "/detected.csv", sch, selected_models,
                          cfg.thr, view);
      rep.mask = control_mask(sch, selected_models, cfg.thr, view,
                              cfg.eta_eps, cfg.n_disc);
      if (rep.mask.dim() == 0) {
        if (cfg.verbose) {
          std::printf(
              "[stage %d] inc %d: %s->%s has no controllable features yet; "
              "continuing\n",
              stage, inc + 1, sch.name(chosen->source).c_str(),
              sch.name(chosen->target).c_str());
          std::fflush(stdout);
        }
        chosen = nullptr;
        continue;
      }
      break;
    }
    rep.scores = table;

    if (!chosen) {
      result.stages.push_back(std::move(rep));
      result.terminated = true;
      if (!out_dir.empty()) {
        BuildState st;
        st.seed = cfg.seed;
        st.variant = cfg.variant;
        st.stages_done = stage + 1;
        st.terminated = true;
        st.total_env_steps = result.total_env_steps;
        st.chain = result.chain;
        save_build_state(out_dir + "/build_state.ckpt", st);
        write_manifest(out_dir, cfg, sch, result.stages, true, first_stage);
      }
      break;
    }

    rep.selected = true;
    rep.source = chosen->source;
    rep.target = chosen->target;
    if (cfg.verbose) {
      std::printf("[stage %d] selected %s->%s sc=%.3f mask_dim=%d %s(%zu)\n",
                  stage, sch.name(rep.source).c_str(),
                  sch.name(rep.target).c_str(), chosen->sc, rep.mask.dim(),
                  rep.mask.discrete ? "discrete" : "continuous",
                  rep.mask.goals.size());
      std::fflush(stdout);
    }

    Skill sk;
    sk.level = stage;
    sk.source = rep.source;
    sk.target = rep.target;
    sk.mask = rep.mask;
    sk.thr = cfg.thr;
    sk.models = std::make_shared<PairModels>(std::move(selected_models));
    sk.eps_c = rep.mask.discrete ? 0.5f : 4.0f;
    sk.eps_rew = cfg.eps_rew;
    sk.rel_d = cfg.rel_d;
    const std::size_t bi = std::min<std::size_t>(
        stage, cfg.skill_timeouts.empty() ? 0 : cfg.skill_timeouts.size() - 1);
    sk.timeout = cfg.skill_timeouts.empty() ? 100 : cfg.skill_timeouts[bi];
    sk.n_actions = result.chain.empty()
                       ? kNumActions
                       : actions_for_parent(result.chain.top().mask);
    Rng pol_rng = stage_stream(cfg.seed, stage, "policy_init");
    sk.policy.init(skill_policy_input_dim(sch, sk), sk.n_actions, pol_rng);
    result.chain.skills.push_back(std::move(sk));

    const std::size_t bj = std::min<std::size_t>(
        stage, cfg.skill_budgets.empty() ? 0 : cfg.skill_budgets.size() - 1);
    const long budget = cfg.skill_budgets.empty() ? 50000
                                                  : cfg.skill_budgets[bj];
    const long snap = static_cast<std::size_t>(stage) <
                              cfg.skill_snapshots.size()
                          ? cfg.skill_snapshots[stage]
                          : 0;
    Rng train_rng = stage_stream(cfg.seed, stage, "train");
    rep.train = train_skill(env, result.chain, stage, budget, cfg.learner,
                            train_rng, nullptr, snap);
    result.total_env_steps += rep.train.steps_used;

    Rng eval_rng = stage_stream(cfg.seed, stage, "eval");
    BreakoutEnv eval_env(cfg.variant);
    rep.eval_success = evaluate_skill(eval_env, result.chain, stage,
                                      cfg.eval_attempts, eval_rng);
    if (cfg.verbose) {
      std::printf(
          "[stage %d] skill trained: steps=%ld attempts=%d success=%.3f "
          "eval=%.3f%s\n",
          stage, rep.train.steps_used, rep.train.attempts,
          rep.train.final_success, rep.eval_success,
          rep.train.converged ? " (converged)" : "");
      std::fflush(stdout);
    }
    if (!stage_dir.empty())
      write_curve_csv(stage_dir + "/train_curve.csv", "env_steps",
                      "rolling_success", rep.train.curve);

    result.stages.push_back(std::move(rep));
    if (!out_dir.empty()) {
      BuildState st;
      st.seed = cfg.seed;
      st.variant = cfg.variant;
      st.stages_done = stage + 1;
      st.terminated = false;
      st.total_env_steps = result.total_env_steps;
      st.chain = result.chain;
      save_build_state(out_dir + "/build_state.ckpt", st);
      write_manifest(out_dir, cfg, sch, result.stages, false, first_stage);
    }
    if (cfg.stop_after_stage >= 0 && stage >= cfg.stop_after_stage) break;
  }
  return result;
}

// --- downstream task ---------------------------------------------------------

int task_input_dim(const Schema& sch) {
  return sch.dim(kPaddleFactor) + sch.dim(kBallFactor) + 2 +
         2 * sch.dim(block_factor(0));
}

Vec task_input(const Schema& sch, const BreakoutEnv& env) {
  const Vec paddle = env.factor_state(kPaddleFactor);
  const Vec ball = env.factor_state(kBallFactor);
  Vec out(task_input_dim(sch));
  int at = 0;
  for (int k = 0; k < paddle.size(); ++k)
    out[at++] = sch.normalize(kPaddleFactor, k, paddle[k]);
  for (int k = 0; k < ball.size(); ++k)
    out[at++] = sch.normalize(kBallFactor, k, ball[k]);
  out[at++] = (paddle[0] - ball[0]) / 42.f;
  out[at++] = (paddle[1] - ball[1]) / 42.f;
  const int bd = sch.dim(block_factor(0));
  Vec mean = Vec::Zero(bd), mx = Vec::Constant(bd, -1.f);
  for (int i = 0; i < kNumBlocks; ++i) {
    const Vec b = env.factor_state(block_factor(i));
    for (int k = 0; k < bd; ++k) {
      const float v = sch.normalize(block_factor(i), k, b[k]);
      mean[k] += v;
      mx[k] = std::max(mx[k], v);
    }
  }
  for (int k = 0; k < bd; ++k) out[at++] = mean[k] / kNumBlocks;
  for (int k = 0; k < bd; ++k) out[at++] = mx[k];
  return out;
}

namespace {

Vec goal_for_task_action(const Schema& sch, const Skill& sk, int action,
                         const BreakoutEnv& env) {
  if (sk.mask.discrete)
    return sk.mask.goals.at(static_cast<std::size_t>(action));
  return remap_relative_action(sch, sk.target, sk.mask,
                               relative_grid_point(action, sk.mask.dim()),
                               sk.rel_d, env.factor_state(sk.target));
}

}  // namespace

float evaluate_task(const SkillChain& chain, const QNet& policy, Variant v,
                    int episodes, Rng& rng) {
  if (chain.empty()) throw CoinsError("evaluate_task: empty chain");
  const Schema& sch = chain.schema;
  const int top = chain.size() - 1;
  const Skill& sk = chain.skills[top];
  BreakoutEnv env(v);
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    env.reset(rng.next_u64());
    double ret = 0.0;
    while (!env.done()) {
      const Vec s = task_input(sch, env);
      const int a = select_action(policy, s, 0.f, rng);
      const EpisodeRec ep = execute_skill(
          env, chain, top, goal_for_task_action(sch, sk, a, env), 0.f, rng,
          {});
      ret += ep.env_return;
    }
    total += ret;
  }
  return static_cast<float>(total / episodes);
}

TaskResult train_task_policy(const SkillChain& chain, const TaskConfig& cfg) {
  if (chain.empty()) throw CoinsError("train_task_policy: empty chain");
  const Schema& sch = chain.schema;
  const int top = chain.size() - 1;
  const Skill& sk = chain.skills[top];
  const int n_actions = actions_for_parent(sk.mask);

  TaskResult res;
  Rng init_rng = Rng::stream(cfg.seed, "task/init");
  res.policy.init(task_input_dim(sch), n_actions, init_rng);
  QNet target = res.policy;

  BreakoutEnv env(cfg.variant);
  Rng rng = Rng::stream(cfg.seed, "task/train");
  ReplayBuffer buf(static_cast<std::size_t>(cfg.learner.replay_capacity));
  long steps = 0, updates = 0;
  double deficit = 0.0;
  long next_eval = cfg.eval_every;
  int eval_id = 0;
  ExecCallbacks cb;
  cb.step_counter = &steps;
  cb.gamma = cfg.learner.gamma;

  res.best_eval = -std::numeric_limits<float>::infinity();
  while (steps < cfg.budget) {
    if (env.done()) env.reset(rng.next_u64());
    const Vec s = task_input(sch, env);
    const float eps = epsilon_at(cfg.learner, steps, cfg.budget);
    const int a = select_action(res.policy, s, eps, rng);
    const EpisodeRec ep = execute_skill(
        env, chain, top, goal_for_task_action(sch, sk, a, env), 0.f, rng, cb);
    const Vec s2 = task_input(sch, env);
    buf.push({s, a, ep.env_return, s2, ep.env_terminal ? 1.f : 0.f,
              std::max(1, ep.steps)});

    deficit += static_cast<double>(ep.steps) * cfg.learner.updates_per_collect;
    while (deficit >= 1.0 &&
           buf.size() >= static_cast<std::size_t>(cfg.learner.warmup)) {
      update_q(res.policy, target, buf, cfg.learner, rng);
      deficit -= 1.0;
      if (++updates % cfg.learner.target_sync == 0)
        target.net = res.policy.net;
    }

    if (steps >= next_eval || steps >= cfg.budget) {
      Rng eval_rng =
          Rng::stream(cfg.seed, "task/eval" + std::to_string(eval_id++));
      const float ret = evaluate_task(chain, res.policy, cfg.variant,
                                      cfg.eval_episodes, eval_rng);
      res.curve.emplace_back(std::min(steps, cfg.budget), ret);
      res.best_eval = std::max(res.best_eval, ret);
      if (cfg.verbose) {
        std::printf("[task] steps=%ld eps=%.3f eval_return=%.2f\n", steps,
                    eps, ret);
        std::fflush(stdout);
      }
      while (next_eval <= steps) next_eval += cfg.eval_every;
    }
  }
  if (res.curve.empty() || res.curve.back().first < cfg.budget) {
    Rng eval_rng =
        Rng::stream(cfg.seed, "task/eval" + std::to_string(eval_id++));
    const float ret = evaluate_task(chain, res.policy, cfg.variant,
                                    cfg.eval_episodes, eval_rng);
    res.curve.emplace_back(cfg.budget, ret);
    res.best_eval = std::max(res.best_eval, ret);
  }
  res.steps_used = steps;
  res.final_eval = res.curve.back().second;
  return res;
}

float scripted_return(Variant v, bool avoid, int episodes, Rng& rng) {
  BreakoutEnv env(v);
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    env.reset(rng.next_u64());
    double ret = 0.0;
    while (!env.done())
      ret += env.step(avoid ? env.avoid_action() : env.track_action()).reward;
    total += ret;
  }
  return static_cast<float>(total / episodes);
}

}  // namespace coins
