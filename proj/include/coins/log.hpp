#pragma once
// Compact step storage for collected experience, plus per-pair dataset views.
//
// Each step stores the pre-step snapshot (paddle anchor x, ball state, block
// alive bits), the action, reward and event flags; the post-step state of
// step t is the pre-step snapshot of t+1 (or the episode's final snapshot).
// Factor states are reconstructed on demand from the snapshot plus the
// episode's immutable block layout, so a (source, target) dataset view costs
// no extra memory. All features are stored in raw grid units; normalization
// happens at model input boundaries.

#include "coins/common.hpp"
#include "coins/env.hpp"
#include "coins/schema.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace coins {

struct Snap {
  float paddle_x = 0.f;  // anchor (x0 + 4)
  float ball[4] = {0, 0, 0, 0};
  std::array<std::uint64_t, 2> alive{0, 0};

  bool block_alive(int i) const { return (alive[i / 64] >> (i % 64)) & 1ull; }
};

Snap make_snap(const BreakoutEnv& env);

struct StepRec {
  Snap pre;
  std::uint8_t action = 1;
  float reward = 0.f;
  std::uint8_t flags = 0;  // bit0 bounce, 1 wall, 2 ceiling, 3 drop,
                           // 4 terminal, 5 done
  std::int16_t block_hit = -1;

  bool paddle_bounce() const { return flags & 1; }
  bool drop() const { return flags & 8; }
  bool done() const { return flags & 32; }
};

std::uint8_t pack_flags(const StepResult& res);

struct EpisodeLog {
  std::uint8_t variant = 0;
  std::uint64_t env_seed = 0;
  std::vector<BlockDef> layout;
  std::vector<StepRec> steps;
  Snap final_snap;
};

class TransitionLog {
 public:
  TransitionLog() = default;

  void start_episode(const BreakoutEnv& env, std::uint64_t env_seed);
  bool episode_open() const { return !episodes_.empty(); }
  void add_step(const Snap& pre, int action, const StepResult& res);
  void note_final(const BreakoutEnv& env);  // refresh the final snapshot

  std::size_t num_episodes() const { return episodes_.size(); }
  std::size_t total_steps() const;
  std::size_t usable_steps() const;  // non-terminal transitions (PairView size)
  const std::vector<EpisodeLog>& episodes() const { return episodes_; }
  std::vector<EpisodeLog>& episodes() { return episodes_; }

  // Raw factor state at the pre/post boundary of transition i. Every logged
  // step is a usable transition; the last one closes on the final snapshot.
  Vec factor_pre(std::size_t i, FactorId f) const;
  Vec factor_post(std::size_t i, FactorId f) const;
  const StepRec& step(std::size_t i) const;

  // Ground-truth oracle: did (source, target) interact on transition i?
  bool oracle(std::size_t i, FactorId source, FactorId target) const;

 private:
  struct Ref {
    const EpisodeLog* ep;
    std::size_t t;
  };
  Ref at(std::size_t i) const;
  void reindex() const;
  static Vec snap_factor(const Snap& s, const EpisodeLog& ep, FactorId f);

  std::vector<EpisodeLog> episodes_;
  mutable std::vector<std::size_t> ep_offset_;  // prefix sums, lazily built
  mutable bool index_dirty_ = true;
};

// Dataset view for one (source, target) pair: tuples
// (s_a raw, s_b raw, s_b' raw, oracle flag). For the action pseudo-factor,
// s_a is the one-hot encoding of the executed action. Episode-terminal
// transitions are excluded: their post-state carries end-of-episode
// mechanics (ball loss, board cleared) rather than dynamics, and a model
// fit on them learns reset artifacts instead of motion.
class PairView {
 public:
  PairView(const TransitionLog& log, FactorId source, FactorId target);

  std::size_t size() const { return keep_.size(); }
  FactorId source() const { return source_; }
  FactorId target() const { return target_; }
  const TransitionLog& log() const { return *log_; }

  void get(std::size_t i, Vec& s_a, Vec& s_b, Vec& s_b_post) const;
  bool oracle_flag(std::size_t i) const {
    return log_->oracle(keep_[i], source_, target_);
  }

 private:
  const TransitionLog* log_;
  FactorId source_, target_;
  std::vector<std::size_t> keep_;  // non-terminal transition indices
};

// Deterministic spread subsample: m indices evenly strided over [0, n).
std::vector<std::size_t> strided_subsample(std::size_t n, std::size_t m);

// Roll an environment with a primitive-action policy, appending to the log.
// Episodes are seeded from `rng`; `policy` maps the env to an action.
template <typename PolicyFn>
void collect_primitive(BreakoutEnv& env, PolicyFn&& policy, int steps,
                       TransitionLog& log, Rng& rng) {
  for (int i = 0; i < steps; ++i) {
    if (env.done() || !log.episode_open()) {
      const std::uint64_t seed = rng.next_u64();
      env.reset(seed);
      log.start_episode(env, seed);
    }
    const Snap pre = make_snap(env);
    const int a = policy(env);
    const StepResult res = env.step(a);
    log.add_step(pre, a, res);
    log.note_final(env);
  }
}

}  // namespace coins
