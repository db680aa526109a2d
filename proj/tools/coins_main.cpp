// Command-line front end: experience collection, model fitting, pair
// scoring, chain building, task training, evaluation, and SVG plotting.
//
// Exit codes: 0 success, 2 bad flags/config, 3 missing or corrupt
// checkpoint, 1 anything else.

#include "coins/chain.hpp"
#include "coins/checkpoint.hpp"
#include "coins/config.hpp"
#include "coins/csvplot.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace coins;

namespace {

std::string out_root() {
  if (const char* env = std::getenv("COINS_OUT_ROOT")) return env;
  return "out";
}

std::string default_dir(const std::string& kind, const std::string& variant,
                        std::uint64_t seed) {
  return out_root() + "/" + kind + "_" + variant + "_" + std::to_string(seed);
}

RunConfig load_run_config(const std::string& config_path,
                          const std::string& variant_flag,
                          std::int64_t seed_flag) {
  RunConfig rc;
  if (!config_path.empty()) apply_config_file(rc, config_path);
  if (!variant_flag.empty()) {
    rc.build.variant = variant_from_string(variant_flag);
    rc.task.variant = rc.build.variant;
  }
  if (seed_flag >= 0) {
    rc.build.seed = static_cast<std::uint64_t>(seed_flag);
    rc.task.seed = rc.build.seed;
  }
  return rc;
}

int run_collect(const std::string& variant, std::uint64_t seed, long steps,
                const std::string& policy, const std::string& out) {
  BreakoutEnv env(variant_from_string(variant));
  TransitionLog log;
  Rng rng = Rng::stream(seed, "collect/" + policy);
  auto pick = [&](const BreakoutEnv& e) -> int {
    if (policy == "random")
      return static_cast<int>(rng.uniform_int(std::uint64_t(kNumActions)));
    if (policy == "track") return e.track_action();
    if (policy == "avoid") return e.avoid_action();
    // mixed: alternate random / track episodes
    if (log.num_episodes() % 2 == 1)
      return static_cast<int>(rng.uniform_int(std::uint64_t(kNumActions)));
    return e.track_action();
  };
  collect_primitive(env, pick, static_cast<int>(steps), log, rng);
  fs::create_directories(fs::path(out).parent_path().empty()
                             ? "."
                             : fs::path(out).parent_path().string());
  save_log(out, log);
  std::printf("collected %zu steps over %zu episodes -> %s\n",
              log.total_steps(), log.num_episodes(), out.c_str());
  return 0;
}

int run_fit_models(const std::string& log_path, const std::string& source,
                   const std::string& target, const RunConfig& rc,
                   const std::string& out) {
  const TransitionLog log = load_log(log_path);
  Schema sch;
  const FactorId src = source == "action" ? kActionFactor : sch.id(source);
  const FactorId tgt = sch.id(target);
  PairView view(log, src, tgt);
  Rng init = Rng::stream(rc.build.seed, "fit/init");
  GaussianModel passive = GaussianModel::make_passive(sch, tgt, init);
  GaussianModel active = GaussianModel::make_active(sch, src, tgt, init);
  FitConfig fc = rc.build.fit;
  fc.seed = Rng::stream(rc.build.seed, "fit/p").next_u64();
  const FitReport pr = fit_gaussian(passive, sch, view, fc);
  const Vec w = balance_weights(sch, view, passive, rc.build.balance_lambda,
                                rc.build.balance_prox);
  fc.seed = Rng::stream(rc.build.seed, "fit/a").next_u64();
  const FitReport ar = fit_gaussian(active, sch, view, fc, w);
  save_models(out, passive, active);
  std::printf(
      "fit %s->%s on %zu records: passive nll %.4f -> %.4f (%d steps), "
      "active nll %.4f -> %.4f (%d steps) -> %s\n",
      source.c_str(), target.c_str(), view.size(), pr.initial_nll,
      pr.final_nll, pr.steps, ar.initial_nll, ar.final_nll, ar.steps,
      out.c_str());
  return 0;
}

int run_score(const std::string& log_path,
              const std::vector<std::string>& model_paths,
              const RunConfig& rc, const std::string& out) {
  const TransitionLog log = load_log(log_path);
  Schema sch;
  ScoreTable table;
  for (const std::string& mp : model_paths) {
    GaussianModel passive, active;
    load_models(mp, passive, active);
    PairView view(log, active.source, active.target);
    const auto idx = strided_subsample(
        view.size(), static_cast<std::size_t>(rc.build.score_subsample));
    table.push_back(score_pair(sch, PairModels{passive, active},
                               rc.build.thr, view, idx));
  }
  write_score_csv(out, sch, table);
  for (const PairScore& r : table)
    std::printf("%s -> %s: mg=%.4f sc=%.4f n_int=%d rate=%.4f\n",
                sch.name(r.source).c_str(), sch.name(r.target).c_str(), r.mg,
                r.sc, r.n_int, r.rate);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int run_build_chain(RunConfig rc, std::string out_dir, bool resume) {
  if (out_dir.empty())
    out_dir = default_dir("chain", to_string(rc.build.variant), rc.build.seed);
  fs::create_directories(out_dir);
  {
    std::ofstream cfg(out_dir + "/config.ini");
    cfg << serialize_config(rc);
  }
  const BuildResult res = build_chain(rc.build, out_dir, resume);
  std::printf("chain:");
  std::printf(" action");
  for (const Skill& sk : res.chain.skills)
    std::printf(" -> %s", res.chain.schema.name(sk.target).c_str());
  std::printf(" (%s after %ld env steps)\n",
              res.terminated ? "terminated" : "stopped",
              res.total_env_steps);
  return 0;
}

int run_train_task(RunConfig rc, const std::string& build_dir,
                   std::string out_dir) {
  const BuildState st = load_build_state(build_dir + "/build_state.ckpt");
  if (st.chain.empty())
    throw CoinsError("build state has no skills; cannot train a task policy");
  if (out_dir.empty()) out_dir = build_dir;
  fs::create_directories(out_dir);
  {
    std::ofstream cfg(out_dir + "/task_config.ini");
    cfg << serialize_config(rc);
  }
  const TaskResult res = train_task_policy(st.chain, rc.task);
  save_policy(out_dir + "/task_policy.ckpt", res.policy);
  write_curve_csv(out_dir + "/task_curve.csv", "env_steps", "eval_return",
                  res.curve);
  std::printf("task training done: final eval %.2f, best eval %.2f -> %s\n",
              res.final_eval, res.best_eval, out_dir.c_str());
  return 0;
}

int run_eval(const RunConfig& rc, const std::string& build_dir,
             const std::string& task_policy, int attempts, int episodes) {
  const BuildState st = load_build_state(build_dir + "/build_state.ckpt");
  Rng rng = Rng::stream(rc.build.seed, "eval/cli");
  for (int level = 0; level < st.chain.size(); ++level) {
    BreakoutEnv env(rc.build.variant);
    const float rate =
        evaluate_skill(env, st.chain, level, attempts, rng);
    std::printf("skill %d (%s -> %s): success %.3f over %d attempts\n", level,
                st.chain.schema.name(st.chain.skills[level].source).c_str(),
                st.chain.schema.name(st.chain.skills[level].target).c_str(),
                rate, attempts);
  }
  if (!task_policy.empty()) {
    const QNet policy = load_policy(task_policy);
    const float ret = evaluate_task(st.chain, policy, rc.task.variant,
                                    episodes, rng);
    std::printf("task return: %.2f over %d episodes\n", ret, episodes);
  }
  return 0;
}

int run_plot(const std::vector<std::string>& csvs, const std::string& out,
             const std::string& title, const std::string& xlabel,
             const std::string& ylabel) {
  std::vector<SvgSeries> series;
  for (const std::string& path : csvs)
    series.push_back({fs::path(path).stem().string(), read_curve_csv(path)});
  write_svg_chart(out, title, xlabel, ylabel, series);
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skill-chain laboratory for factored Breakout"};
  app.require_subcommand(1);

  std::string variant;  // empty = keep config/default
  std::int64_t seed = -1;
  std::string config_path;

  // collect
  auto* collect = app.add_subcommand("collect", "roll a primitive policy");
  std::string c_policy = "random", c_out;
  long c_steps = 10000;
  std::uint64_t c_seed = 0;
  collect->add_option("--variant", variant, "environment variant");
  collect->add_option("--seed", c_seed, "master seed");
  collect->add_option("--steps", c_steps, "env steps to collect");
  collect->add_option("--policy", c_policy, "random|track|avoid|mixed")
      ->check(CLI::IsMember({"random", "track", "avoid", "mixed"}));
  collect->add_option("--out", c_out, "output log checkpoint")->required();

  // fit-models
  auto* fitm = app.add_subcommand("fit-models",
                                  "fit passive/active models for one pair");
  std::string f_log, f_source = "action", f_target = "paddle", f_out;
  fitm->add_option("--log", f_log, "log checkpoint")->required();
  fitm->add_option("--source", f_source, "source factor name or 'action'");
  fitm->add_option("--target", f_target, "target factor name");
  fitm->add_option("--config", config_path, "run config (ini)");
  fitm->add_option("--seed", seed, "master seed override");
  fitm->add_option("--out", f_out, "output models checkpoint")->required();

  // score
  auto* score = app.add_subcommand("score", "score fitted pairs on a log");
  std::string s_log, s_out = "scores.csv";
  std::vector<std::string> s_models;
  score->add_option("--log", s_log, "log checkpoint")->required();
  score->add_option("--models", s_models, "models checkpoint (repeatable)")
      ->required();
  score->add_option("--config", config_path, "run config (ini)");
  score->add_option("--out", s_out, "output CSV");

  // build-chain
  auto* build = app.add_subcommand("build-chain", "discover and train the "
                                                  "skill chain");
  std::string b_out;
  bool b_resume = false;
  build->add_option("--config", config_path, "run config (ini)");
  build->add_option("--variant", variant, "environment variant");
  build->add_option("--seed", seed, "master seed override");
  build->add_option("--out", b_out, "output directory");
  build->add_flag("--resume", b_resume, "resume from the build checkpoint");

  // train-task
  auto* task = app.add_subcommand("train-task",
                                  "train a task policy over the chain");
  std::string t_build, t_out;
  task->add_option("--build-dir", t_build, "chain build directory")
      ->required();
  task->add_option("--config", config_path, "run config (ini)");
  task->add_option("--variant", variant, "environment variant");
  task->add_option("--seed", seed, "master seed override");
  task->add_option("--out", t_out, "output directory (default: build dir)");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate skills and task policy");
  std::string e_build, e_policy;
  int e_attempts = 100, e_episodes = 20;
  eval->add_option("--build-dir", e_build, "chain build directory")
      ->required();
  eval->add_option("--task-policy", e_policy, "task policy checkpoint");
  eval->add_option("--attempts", e_attempts, "skill attempts");
  eval->add_option("--episodes", e_episodes, "task episodes");
  eval->add_option("--config", config_path, "run config (ini)");
  eval->add_option("--variant", variant, "environment variant");
  eval->add_option("--seed", seed, "master seed override");

  // plot
  auto* plot = app.add_subcommand("plot", "render curve CSVs as an SVG");
  std::vector<std::string> p_csvs;
  std::string p_out = "plot.svg", p_title = "training curve";
  std::string p_xlabel = "env steps", p_ylabel = "value";
  plot->add_option("--csv", p_csvs, "curve CSV (repeatable)")->required();
  plot->add_option("--out", p_out, "output SVG");
  plot->add_option("--title", p_title, "chart title");
  plot->add_option("--xlabel", p_xlabel, "x axis label");
  plot->add_option("--ylabel", p_ylabel, "y axis label");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*collect)
      return run_collect(variant.empty() ? "base" : variant, c_seed, c_steps,
                         c_policy, c_out);
    const RunConfig rc = load_run_config(config_path, variant, seed);
    if (*fitm) return run_fit_models(f_log, f_source, f_target, rc, f_out);
    if (*score) return run_score(s_log, s_models, rc, s_out);
    if (*build) return run_build_chain(rc, b_out, b_resume);
    if (*task) return run_train_task(rc, t_build, t_out);
    if (*eval) return run_eval(rc, e_build, e_policy, e_attempts, e_episodes);
    if (*plot) return run_plot(p_csvs, p_out, p_title, p_xlabel, p_ylabel);
  } catch (const CheckpointError& e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return 3;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
