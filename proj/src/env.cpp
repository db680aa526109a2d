#include "coins/env.hpp"

#include <algorithm>

namespace coins {

Variant variant_from_string(const std::string& s) {
  if (s == "base") return Variant::Base;
  if (s == "single") return Variant::Single;
  if (s == "hard") return Variant::Hard;
  if (s == "big") return Variant::Big;
  if (s == "neg") return Variant::Neg;
  if (s == "center") return Variant::Center;
  if (s == "prox") return Variant::Prox;
  throw ConfigError("unknown variant '" + s + "'");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Base: return "base";
    case Variant::Single: return "single";
    case Variant::Hard: return "hard";
    case Variant::Big: return "big";
    case Variant::Neg: return "neg";
    case Variant::Center: return "center";
    case Variant::Prox: return "prox";
  }
  throw CoinsError("bad variant enum");
}

BreakoutEnv::BreakoutEnv(Variant v) : variant_(v) {
  grid_.assign(kBoard * kBoard, -1);
  switch (variant_) {
    case Variant::Base:
    case Variant::Center:
    case Variant::Prox: max_steps_ = 20000; break;
    default: max_steps_ = 5000; break;
  }
}

std::pair<int, int> BreakoutEnv::quartile_velocity(int offset) {
  switch (clamp(offset, 0, kPaddleW - 1) / 2) {
    case 0: return {-1, -1};
    case 1: return {-2, -1};
    case 2: return {-2, +1};
    default: return {-1, +1};
  }
}

void BreakoutEnv::serve() {
  ball_y_ = 78;
  ball_x_ = static_cast<int>(rng_.uniform_int(2, 81));
  static constexpr std::pair<int, int> kServe[4] = {
      {-1, -1}, {-2, -1}, {-2, +1}, {-1, +1}};
  const auto v = kServe[rng_.uniform_int(4ull)];
  vel_y_ = v.first;
  vel_x_ = v.second;
}

void BreakoutEnv::build_layout() {
  layout_.clear();
  auto slot = [](int idx) {
    BlockDef b;
    b.x0 = 2 + 8 * (idx % 10);
    b.y0 = 6 + 3 * (idx / 10);
    return b;
  };
  switch (variant_) {
    case Variant::Base:
    case Variant::Prox: {
      for (int i = 0; i < 100; ++i) layout_.push_back(slot(i));
      if (variant_ == Variant::Prox) {
        for (auto& b : layout_) b.value = 0.f;  // rewards come from proximity
        prox_target_ = static_cast<int>(rng_.uniform_int(100ull));
      }
      break;
    }
    case Variant::Center: {
      for (int i = 0; i < 100; ++i) {
        BlockDef b = slot(i);
        const int col = i % 10;
        if (col >= 3 && col <= 6) {
          b.breakable = false;
          b.value = 0.f;
        }
        layout_.push_back(b);
      }
      break;
    }
    case Variant::Single: {
      layout_.push_back(slot(static_cast<int>(rng_.uniform_int(100ull))));
      break;
    }
    case Variant::Hard: {
      std::vector<int> ids(100);
      for (int i = 0; i < 100; ++i) ids[i] = i;
      rng_.shuffle(ids);
      layout_.push_back(slot(ids[0]));  // the breakable target
      for (int k = 1; k <= 10; ++k) {
        BlockDef b = slot(ids[k]);
        b.breakable = false;
        b.value = 0.f;
        layout_.push_back(b);
      }
      break;
    }
    case Variant::Big: {
      BlockDef b;
      b.w = 20;
      b.h = 6;
      b.y0 = 6;
      b.x0 = 2 + 20 * static_cast<int>(rng_.uniform_int(4ull));
      layout_.push_back(b);
      break;
    }
    case Variant::Neg: {
      std::vector<int> cols(10);
      for (int i = 0; i < 10; ++i) cols[i] = i;
      rng_.shuffle(cols);
      for (int i = 0; i < 10; ++i) {
        BlockDef b = slot(i);  // row 0, columns 0..9
        b.value = 1.f;
        layout_.push_back(b);
      }
      for (int k = 0; k < 5; ++k) layout_[cols[k]].value = -1.f;
      break;
    }
  }
  alive_.assign(layout_.size(), 1);
}

void BreakoutEnv::rebuild_grid() {
  std::fill(grid_.begin(), grid_.end(), static_cast<std::int16_t>(-1));
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    if (!alive_[i]) continue;
    const BlockDef& b = layout_[i];
    for (int y = b.y0; y < b.y0 + b.h; ++y)
      for (int x = b.x0; x < b.x0 + b.w; ++x)
        grid_[y * kBoard + x] = static_cast<std::int16_t>(i);
  }
}

void BreakoutEnv::clear_grid_rect(const BlockDef& b) {
  for (int y = b.y0; y < b.y0 + b.h; ++y)
    for (int x = b.x0; x < b.x0 + b.w; ++x) grid_[y * kBoard + x] = -1;
}

int BreakoutEnv::grid_at(int y, int x) const {
  if (y < 0 || y >= kBoard || x < 0 || x >= kBoard) return -1;
  return grid_[y * kBoard + x];
}

void BreakoutEnv::reset(std::uint64_t seed) {
  rng_.reseed(seed);
  steps_ = 0;
  done_ = false;
  paddle_x0_ = 38;
  neg_hits_ = neg_drops_ = big_bounces_ = 0;
  build_layout();
  rebuild_grid();
  serve();
  last_flags_ = StepFlags{};
  oracle_.clear();
}

Vec BreakoutEnv::factor_state(FactorId f) const {
  if (f == kPaddleFactor) {
    Vec v(4);
    v << static_cast<float>(kPaddleRow),
        static_cast<float>(paddle_x0_ + kPaddleW / 2), 0.f, 0.f;
    return v;
  }
  if (f == kBallFactor) {
    Vec v(4);
    v << static_cast<float>(ball_y_), static_cast<float>(ball_x_),
        static_cast<float>(vel_y_), static_cast<float>(vel_x_);
    return v;
  }
  const int i = block_index(f);
  if (i < 0 || i >= kNumBlocks) throw CoinsError("bad factor for state");
  Vec v = Vec::Zero(3);
  if (i < static_cast<int>(layout_.size())) {
    const BlockDef& b = layout_[i];
    v << static_cast<float>(b.y0 + b.h / 2),
        static_cast<float>(b.x0 + b.w / 2), alive_[i] ? 1.f : 0.f;
  }
  return v;
}

std::array<std::uint64_t, 2> BreakoutEnv::alive_bits() const {
  std::array<std::uint64_t, 2> bits{0, 0};
  for (std::size_t i = 0; i < alive_.size(); ++i)
    if (alive_[i]) bits[i / 64] |= (1ull << (i % 64));
  return bits;
}

int BreakoutEnv::blocks_alive() const {
  int n = 0;
  for (auto a : alive_) n += a ? 1 : 0;
  return n;
}

float BreakoutEnv::on_block_hit(int idx) {
  const BlockDef& b = layout_[idx];
  float r = 0.f;
  if (b.breakable) {
    alive_[idx] = 0;
    clear_grid_rect(b);
    r = b.value;
    oracle_.emplace_back(kBallFactor, block_factor(idx));
    oracle_.emplace_back(block_factor(idx), kBallFactor);
    last_flags_.block_hit = idx;
    switch (variant_) {
      case Variant::Single:
      case Variant::Hard:
      case Variant::Big:
        r = 1.f;
        pending_terminal_ = true;
        break;
      case Variant::Neg:
        if (++neg_hits_ >= 5) pending_terminal_ = true;
        break;
      case Variant::Prox: {
        const int ci = idx % 10, ri = idx / 10;
        const int ct = prox_target_ % 10, rt = prox_target_ / 10;
        const int d = std::abs(ci - ct) + std::abs(ri - rt);
        r = 1.f - 2.f * static_cast<float>(d) / 18.f;
        break;
      }
      default: break;
    }
  } else {
    // Indestructible obstacle: bounces the ball, no reward, stays alive.
    oracle_.emplace_back(block_factor(idx), kBallFactor);
    last_flags_.block_hit = idx;
  }
  return r;
}

BreakoutEnv::Sub BreakoutEnv::submove_y() {
  const int dy = vel_y_ > 0 ? 1 : -1;
  const int ny = ball_y_ + dy;
  if (dy > 0 && ny == kPaddleRow && ball_x_ >= paddle_x0_ &&
      ball_x_ < paddle_x0_ + kPaddleW) {
    // Rebound: the ball rests on the paddle row and keeps its horizontal
    // carry for the rest of the step; the quartile velocity applies once
    // movement is complete (see step()).
    bounce_vel_ = quartile_velocity(ball_x_ - paddle_x0_);
    ball_y_ = kPaddleRow;
    last_flags_.paddle_bounce = true;
    oracle_.emplace_back(kPaddleFactor, kBallFactor);
    return Sub::kRestY;
  }
  if (ny < 0) {
    vel_y_ = -vel_y_;
    last_flags_.ceiling = true;
    return Sub::kStop;
  }
  if (ny > kPaddleRow) {
    ball_y_ = ny;
    last_flags_.drop = true;
    return Sub::kStop;
  }
  const int hit = grid_at(ny, ball_x_);
  if (hit >= 0) {
    vel_y_ = -vel_y_;
    pending_reward_ += on_block_hit(hit);
    return Sub::kStop;
  }
  ball_y_ = ny;
  return Sub::kGo;
}

bool BreakoutEnv::submove_x() {
  const int dx = vel_x_ > 0 ? 1 : -1;
  const int nx = ball_x_ + dx;
  if (nx < 0 || nx >= kBoard) {
    vel_x_ = -vel_x_;
    last_flags_.wall = true;
    return false;
  }
  const int hit = grid_at(ball_y_, nx);
  if (hit >= 0) {
    vel_y_ = -vel_y_;
    pending_reward_ += on_block_hit(hit);
    return false;
  }
  ball_x_ = nx;
  return true;
}

StepResult BreakoutEnv::step(int action) {
  if (done_) throw CoinsError("step() on a finished episode; call reset()");
  if (action < 0 || action >= kNumActions)
    throw CoinsError("action out of range");

  last_flags_ = StepFlags{};
  oracle_.clear();
  pending_reward_ = 0.f;
  pending_terminal_ = false;

  // Ball moves first, colliding against the current paddle position.
  int ay = std::abs(vel_y_), ax = std::abs(vel_x_);
  bool y_turn = true;
  bool moving = true;
  while (moving && (ay > 0 || ax > 0)) {
    if (y_turn ? ay > 0 : ax == 0) {
      switch (submove_y()) {
        case Sub::kStop: moving = false; break;
        case Sub::kRestY: ay = 0; break;
        case Sub::kGo: --ay; break;
      }
    } else {
      moving = submove_x();
      --ax;
    }
    y_turn = !y_turn;
  }
  if (last_flags_.paddle_bounce) {
    vel_y_ = bounce_vel_.first;
    vel_x_ = bounce_vel_.second;
  }

  StepResult res;
  res.reward = pending_reward_;

  if (last_flags_.paddle_bounce) {
    if (variant_ == Variant::Single || variant_ == Variant::Hard ||
        variant_ == Variant::Center)
      res.reward -= 1.f;
    if (variant_ == Variant::Big && ++big_bounces_ >= 2) {
      res.reward -= 10.f;
      pending_terminal_ = true;
    }
  }

  if (last_flags_.drop) {
    if (variant_ == Variant::Neg) {
      res.reward -= 1.f;
      if (++neg_drops_ >= 5)
        pending_terminal_ = true;
      else
        serve();
    } else {
      res.reward -= 10.f;
      pending_terminal_ = true;
    }
  }

  // Paddle applies the action after the ball has moved.
  const int dx = (action - 1) * kPaddleMove;
  paddle_x0_ = clamp(paddle_x0_ + dx, 0, kPaddleMaxX0);
  oracle_.emplace_back(kActionFactor, kPaddleFactor);

  ++steps_;
  res.terminal = pending_terminal_;
  res.done = pending_terminal_ || steps_ >= max_steps_;
  done_ = res.done;
  res.flags = last_flags_;
  return res;
}

int BreakoutEnv::avoid_action() const {
  const int center = paddle_x0_ + kPaddleW / 2;
  return ball_x_ >= center ? 0 : 2;
}

int BreakoutEnv::track_action() const {
  const int center = paddle_x0_ + kPaddleW / 2;
  if (std::abs(ball_x_ - center) <= 2) return 1;
  return ball_x_ > center ? 2 : 0;
}

void BreakoutEnv::debug_place(int ball_y, int ball_x, int vy, int vx,
                              int paddle_x0) {
  ball_y_ = ball_y;
  ball_x_ = ball_x;
  vel_y_ = vy;
  vel_x_ = vx;
  paddle_x0_ = clamp(paddle_x0, 0, kPaddleMaxX0);
  done_ = false;
}

std::pair<std::vector<double>, std::vector<double>> synth_var1(
    double coupling, double noise_sd, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> a(n), b(n);
  double av = 0.0, bv = 0.0;
  for (int t = 0; t < n; ++t) {
    a[t] = av;
    b[t] = bv;
    const double an = 0.7 * av + rng.gauss(0.0, noise_sd);
    const double bn = 0.9 * bv + coupling * av + rng.gauss(0.0, noise_sd);
    av = an;
    bv = bn;
  }
  return {a, b};
}

}  // namespace coins
