#pragma once
// Deterministic factored Breakout on an 84x84 cell grid, plus task variants
// and a ground-truth interaction oracle for every step.
//
// Geometry: y = 0 is the top row. The paddle occupies row 80 and is 8 cells
// wide (left edge x0 in [0, 76]); its factor features are
// [pos_y, pos_x, vel_y, vel_x] with pos_x = x0 + 4 and velocities identically
// zero (moves are instant displacements of +/-8 cells, clipped at the walls).
// The ball is a single cell with integer velocity (vel_y in {-2,-1,1,2},
// vel_x in {-1,1}) and moves in unit sub-steps, y before x. Wall, ceiling,
// and block collisions resolve the step and end the ball's movement:
//   side wall -> vel_x flips; ceiling -> vel_y flips;
//   block     -> vel_y flips, block's alive bit clears (if breakable).
// Paddle contact (descent into row 80 over the paddle) ends only the
// vertical motion: the ball comes to rest ON row 80, its horizontal carry
// for the step completes, and the outgoing velocity is set at the end of
// the step by the contact quartile q = (ball_x - x0) / 2 in 0..3:
//   q0 -> (-1,-1), q1 -> (-2,-1), q2 -> (-2,+1), q3 -> (-1,+1).
// A near-miss descent therefore lands on row 80 with exactly the same
// position path as a rebound and differs only in velocity; the ball drops
// when it reaches row 81 (below the paddle plane, no save possible).
// Within one env.step the ball moves first (against the current paddle),
// then the paddle applies the action, so the bounce outcome is a
// deterministic function of the pre-step paddle and ball states.
//
// Blocks live on a 10x10 slot grid (8x3 cells each, x0 = 2 + 8*col,
// y0 = 6 + 3*row); block features are [pos_y, pos_x, alive] with the position
// at the block center. The factored state always carries 100 block factors;
// variants with fewer physical blocks leave the rest all-zero.

#include "coins/common.hpp"
#include "coins/schema.hpp"

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace coins {

enum class Variant { Base, Single, Hard, Big, Neg, Center, Prox };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

struct BlockDef {
  int y0 = 0, x0 = 0, w = 8, h = 3;
  float value = 1.f;     // reward on hit (prox overrides per distance)
  bool breakable = true;
};

struct StepFlags {
  bool paddle_bounce = false;
  bool wall = false;
  bool ceiling = false;
  bool drop = false;
  int block_hit = -1;  // layout index of the block hit this step, -1 if none
};

struct StepResult {
  float reward = 0.f;
  bool done = false;      // episode over (terminal or step-cap truncation)
  bool terminal = false;  // true terminal state (not a truncation)
  StepFlags flags;
};

class BreakoutEnv {
 public:
  static constexpr int kBoard = 84;
  static constexpr int kPaddleRow = 80;
  static constexpr int kPaddleW = 8;
  static constexpr int kPaddleMove = 8;
  static constexpr int kPaddleMaxX0 = kBoard - kPaddleW;  // 76

  explicit BreakoutEnv(Variant v = Variant::Base);

  void reset(std::uint64_t seed);
  StepResult step(int action);  // 0 = left, 1 = noop, 2 = right

  const Schema& schema() const { return schema_; }
  Variant variant() const { return variant_; }
  int max_steps() const { return max_steps_; }
  int steps() const { return steps_; }
  bool done() const { return done_; }

  // Raw factor features (see schema): paddle/ball 4-dim, blocks 3-dim.
  Vec factor_state(FactorId f) const;
  int paddle_x0() const { return paddle_x0_; }
  std::pair<int, int> ball_pos() const { return {ball_y_, ball_x_}; }
  std::pair<int, int> ball_vel() const { return {vel_y_, vel_x_}; }

  const std::vector<BlockDef>& layout() const { return layout_; }
  std::array<std::uint64_t, 2> alive_bits() const;
  int blocks_alive() const;

  // Ground truth for the previous step(): ordered (source, target) factor
  // pairs that interacted. (action, paddle) every step; (paddle, ball) on a
  // paddle bounce; (ball, block_i) and (block_i, ball) on a block hit.
  const std::vector<std::pair<FactorId, FactorId>>& oracle_pairs() const {
    return oracle_;
  }
  const StepFlags& last_flags() const { return last_flags_; }

  // Contact quartile -> outgoing (vel_y, vel_x).
  static std::pair<int, int> quartile_velocity(int offset);

  // Scripted reference policies.
  int avoid_action() const;  // move the paddle away from the ball's column
  int track_action() const;  // move the paddle toward the ball's column

  // Test hook: place the ball and paddle exactly (does not touch blocks).
  void debug_place(int ball_y, int ball_x, int vy, int vx, int paddle_x0);

 private:
  void serve();
  void build_layout();
  void rebuild_grid();
  void clear_grid_rect(const BlockDef& b);
  int grid_at(int y, int x) const;
  // One unit sub-move. kStop ends all movement for the step (collision or
  // drop); kRestY ends only vertical motion (paddle contact) so the
  // horizontal carry still completes.
  enum class Sub { kStop, kGo, kRestY };
  Sub submove_y();
  bool submove_x();
  float on_block_hit(int idx);  // applies variant reward rules

  Schema schema_;
  Variant variant_;
  Rng rng_{0};

  int max_steps_ = 20000;
  int steps_ = 0;
  bool done_ = true;

  int paddle_x0_ = 38;
  int ball_y_ = 78, ball_x_ = 42;
  int vel_y_ = -1, vel_x_ = -1;

  std::vector<BlockDef> layout_;
  std::vector<std::uint8_t> alive_;
  std::vector<std::int16_t> grid_;  // kBoard*kBoard cells -> layout idx or -1

  // variant bookkeeping
  int neg_hits_ = 0, neg_drops_ = 0;
  int big_bounces_ = 0;
  int prox_target_ = 0;

  StepFlags last_flags_;
  std::vector<std::pair<FactorId, FactorId>> oracle_;
  float pending_reward_ = 0.f;
  bool pending_terminal_ = false;
  std::pair<int, int> bounce_vel_{0, 0};  // quartile velocity at contact
};

// Two coupled scalar AR(1) series for causality tests:
//   a_{t+1} = 0.7 a_t + noise,  b_{t+1} = 0.9 b_t + coupling * a_t + noise.
std::pair<std::vector<double>, std::vector<double>> synth_var1(
    double coupling, double noise_sd, int n, std::uint64_t seed);

}  // namespace coins
