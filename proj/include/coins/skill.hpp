#pragma once
// Goal-conditioned skills and their chained execution.
//
// A skill owns the detector models of its (source, target) pair, the
// discovered control mask and goal space, and a Q-network policy. Skill k's
// actions command skill k-1: discrete parent goal spaces are indexed
// directly; continuous ones are addressed through a 5-point relative offset
// grid per masked dimension, mapped by remap_relative_action. Level 0 issues
// primitive environment actions.
//
// A skill terminates on a primitive transition where its pair detector fires
// and the masked post-state lies within eps_c (L1) of the goal. Execution
// checks this on every primitive step, so a parent sub-goal is cut short the
// moment the child outcome satisfies the commanding skill.

#include "coins/common.hpp"
#include "coins/env.hpp"
#include "coins/interaction.hpp"
#include "coins/log.hpp"
#include "coins/rl.hpp"
#include "coins/schema.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace coins {

struct Skill {
  int level = 0;
  FactorId source = kActionFactor;
  FactorId target = kPaddleFactor;
  ControlMask mask;
  DetectorThresholds thr;
  std::shared_ptr<PairModels> models;
  QNet policy;
  float eps_c = 2.f;
  float eps_rew = 0.1f;
  int timeout = 100;   // primitive steps per attempt
  float rel_d = 0.1f;  // relative-offset scale over continuous parent goals
  int n_actions = kNumActions;
};

struct SkillChain {
  Schema schema;
  std::vector<Skill> skills;

  bool empty() const { return skills.empty(); }
  int size() const { return static_cast<int>(skills.size()); }
  const Skill& top() const { return skills.back(); }
  // Factors already controlled (chain prefix): action source plus every
  // skill target.
  std::vector<FactorId> controlled() const;
};

// Number of policy actions available to a skill commanding `parent_mask`
// (5-point grid per masked dim when continuous, else the goal count).
int actions_for_parent(const ControlMask& parent_mask);

// Map a relative-offset grid action in [-1,1]^md to a parent goal:
// goal_k = clamp(s_parent[midx_k] + out_k * d * feature_range, lo_k, hi_k).
Vec remap_relative_action(const Schema& sch, FactorId parent_target,
                          const ControlMask& parent_mask, const Vec& out,
                          float d, const Vec& s_parent_target);

// Decode policy action index -> offset vector on the 5-point grid.
Vec relative_grid_point(int action, int md);

int skill_policy_input_dim(const Schema& sch, const Skill& sk);
Vec skill_policy_input(const Schema& sch, const Skill& sk, const Vec& s_a,
                       const Vec& s_b, const Vec& goal);

// Termination predicate on one primitive transition of the skill's pair.
bool skill_terminates(const Schema& sch, const Skill& sk, const Vec& s_a,
                      const Vec& s_b, const Vec& s_b_post, const Vec& goal);

inline float skill_reward(bool terminated, float eps_rew) {
  return terminated ? 0.f : -eps_rew;
}

// Discounted in-segment return when every non-terminating primitive step
// costs eps_rew and a terminating final step costs 0.
float segment_reward(int tau, bool terminated, float gamma, float eps_rew);

// --- execution --------------------------------------------------------------

struct StepObs {
  int action = 1;
  std::vector<std::pair<FactorId, Vec>> pre, post;
  float env_reward = 0.f;
  bool env_done = false;
  bool env_terminal = false;
  const Vec& pre_state(FactorId f) const;
  const Vec& post_state(FactorId f) const;
};

struct ExecCallbacks {
  // Ancestor termination probe, evaluated after every primitive step.
  std::function<bool(const StepObs&)> should_abort;
  TransitionLog* log = nullptr;  // optional primitive-step logging
  long* step_counter = nullptr;  // optional global env-step counter
  float gamma = 0.99f;           // discount used for in-segment returns
};

struct SegmentRec {
  Vec s;
  int a = 0;
  float r = 0.f;
  Vec s2;
  float done = 0.f;
  int tau = 1;
  std::optional<Vec> achieved;  // masked post-state of the last detection
};

struct EpisodeRec {
  Vec goal;
  std::vector<SegmentRec> segments;
  bool success = false;
  int steps = 0;
  float env_return = 0.f;
  bool env_done = false;
  bool env_terminal = false;  // done by outcome rather than step cap
};

// Execute one attempt of chain.skills[level] toward `goal`. Sub-skills run
// greedily; exploration applies only at the commanded level.
EpisodeRec execute_skill(BreakoutEnv& env, const SkillChain& chain, int level,
                         const Vec& goal, float eps_explore, Rng& rng,
                         const ExecCallbacks& cb = {});

// --- hindsight relabeling ---------------------------------------------------

// Last achieved masked post-state of the episode, if any.
std::optional<Vec> hindsight_goal(const EpisodeRec& ep);

// Relabeled copy of the episode's segments under `new_goal`: termination and
// rewards recomputed, inputs patched in place, truncated at the first
// achieving segment.
std::vector<SegmentRec> relabel_hindsight(const Schema& sch, const Skill& sk,
                                          const EpisodeRec& ep,
                                          const Vec& new_goal, float gamma);

// --- goal-conditioned training ----------------------------------------------

struct TrainSkillResult {
  std::vector<std::pair<long, float>> curve;  // (env steps, rolling success)
  long steps_used = 0;
  int attempts = 0;
  float final_success = 0.f;
  bool converged = false;
  std::vector<float> snapshot_params;  // policy at `snapshot_at` env steps
  long snapshot_taken_at = 0;
};

Vec sample_goal(const ControlMask& mask, Rng& rng);

TrainSkillResult train_skill(BreakoutEnv& env, SkillChain& chain, int level,
                             long budget, const LearnerConfig& cfg, Rng& rng,
                             TransitionLog* log, long snapshot_at = 0);

// Greedy goal-reaching evaluation over fresh attempts; returns success rate.
float evaluate_skill(BreakoutEnv& env, const SkillChain& chain, int level,
                     int attempts, Rng& rng);

}  // namespace coins
