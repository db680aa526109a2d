#pragma once
// Iterative skill-chain construction and downstream task training.
//
// Each stage collects experience with the current top skill under random
// goals (or a uniform-random primitive policy for the very first stage),
// fits passive/active pair models for every candidate (controlled source,
// uncontrolled target) pair, scores them, and selects the best target whose
// interaction score clears the selection threshold. The selected pair's
// models are refit on the full stage data, its control mask and goal space
// are extracted, and a goal-conditioned skill is trained on top of the
// existing chain. Building stops when a stage exhausts its collection budget
// without any pair clearing the threshold.
//
// Stage boundaries are resumable: after every completed stage the full build
// state is checkpointed, and all randomness is drawn from streams keyed by
// (seed, stage, purpose), so a resumed build replays the identical byte
// stream the uninterrupted build would have seen.

#include "coins/common.hpp"
#include "coins/env.hpp"
#include "coins/gaussian.hpp"
#include "coins/interaction.hpp"
#include "coins/rl.hpp"
#include "coins/skill.hpp"

#include <string>
#include <vector>

namespace coins {

struct BuildConfig {
  Variant variant = Variant::Base;
  std::uint64_t seed = 0;

  int collect_increment = 10000;  // env steps per collection increment
  int max_increments = 15;        // increments per stage before giving up
  int score_subsample = 30000;    // max records scored per pair
  int max_stages = 6;

  float eps_si = 3.f;    // selection threshold on the interaction score
  float eta_eps = 0.1f;  // control-mask deviation threshold
  int n_disc = 10;       // max unique goals for a discrete goal space
  float eps_rew = 0.1f;  // per-step skill cost
  float rel_d = 0.1f;    // relative-offset scale over continuous parents
  DetectorThresholds thr;

  FitConfig fit;              // per-increment (warm) refits
  int final_fit_steps = 20000;  // polish steps for a candidate pair
  float balance_lambda = 5.f; // surprise multiplier for poorly-fit samples
  float balance_prox = 12.f;  // raw-unit proximity gate for the boost
  float balance_cap = 40.f;   // per-record surprise saturation
  int block_candidates = 8;   // block factors admitted as score candidates

  // A pair is selectable only when its score rests on enough detected
  // records; this screens out single-record detector flukes early in
  // training, before the models have seen enough rare interactions. The
  // fraction is calibrated against the rarest real interaction of interest
  // (paddle bounces, ~8.5e-3 per step): selection waits until the detector
  // recalls a decent share of them rather than firing on the first high-gap
  // artifacts.
  int min_int_count = 8;
  float min_int_frac = 2e-3f;  // floor also scales with the records scored

  float collect_eps = 0.1f;         // exploration while collecting
  std::vector<long> skill_budgets = {50000, 500000};
  std::vector<long> skill_snapshots = {0, 0};  // mid-training policy snapshot
  std::vector<int> skill_timeouts = {100, 600};
  int eval_attempts = 100;  // greedy goal-reaching attempts after training
  LearnerConfig learner;

  int stop_after_stage = -1;  // stop once this many stages completed (<0: run)
  bool verbose = true;
};

struct StageReport {
  int stage = 0;
  int increments = 0;
  long collected = 0;
  ScoreTable scores;  // scoring table at the deciding increment
  bool selected = false;
  FactorId source = kActionFactor;
  FactorId target = 0;
  ControlMask mask;
  FitReport passive_fit, active_fit;  // final refits of the selected pair
  TrainSkillResult train;
  float eval_success = 0.f;
};

struct BuildResult {
  SkillChain chain;
  std::vector<StageReport> stages;
  bool terminated = false;  // last stage found no selectable pair
  long total_env_steps = 0;
};

// Build (or resume) a skill chain. `out_dir` receives per-stage score CSVs,
// a manifest, and the resumable build-state checkpoint; pass "" to build
// in memory without artifacts (resume unavailable).
BuildResult build_chain(const BuildConfig& cfg, const std::string& out_dir,
                        bool resume = false);

// --- downstream task ---------------------------------------------------------

struct TaskConfig {
  Variant variant = Variant::Base;
  std::uint64_t seed = 0;
  long budget = 300000;  // env steps
  long eval_every = 20000;
  int eval_episodes = 10;
  LearnerConfig learner;
  bool verbose = true;
};

struct TaskResult {
  QNet policy;
  std::vector<std::pair<long, float>> curve;  // (env steps, mean eval return)
  long steps_used = 0;
  float final_eval = 0.f;
  float best_eval = 0.f;
};

// Observation the task policy sees: normalized paddle and ball factors,
// their relative position, and a mean/max pool over the block factors.
Vec task_input(const Schema& sch, const BreakoutEnv& env);
int task_input_dim(const Schema& sch);

// Train a task policy whose actions command the chain's top skill.
TaskResult train_task_policy(const SkillChain& chain, const TaskConfig& cfg);

// Mean undiscounted episode return of a greedy task policy.
float evaluate_task(const SkillChain& chain, const QNet& policy, Variant v,
                    int episodes, Rng& rng);

// Mean episode return of a scripted primitive policy (ball-avoiding or
// ball-tracking); used as a behavioural floor/ceiling reference.
float scripted_return(Variant v, bool avoid, int episodes, Rng& rng);

}  // namespace coins
