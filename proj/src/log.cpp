#include "coins/log.hpp"

namespace coins {

Snap make_snap(const BreakoutEnv& env) {
  Snap s;
  s.paddle_x = static_cast<float>(env.paddle_x0() + BreakoutEnv::kPaddleW / 2);
  const Vec b = env.factor_state(kBallFactor);
  for (int k = 0; k < 4; ++k) s.ball[k] = b[k];
  s.alive = env.alive_bits();
  return s;
}

std::uint8_t pack_flags(const StepResult& res) {
  std::uint8_t f = 0;
  if (res.flags.paddle_bounce) f |= 1;
  if (res.flags.wall) f |= 2;
  if (res.flags.ceiling) f |= 4;
  if (res.flags.drop) f |= 8;
  if (res.terminal) f |= 16;
  if (res.done) f |= 32;
  return f;
}

void TransitionLog::start_episode(const BreakoutEnv& env,
                                  std::uint64_t env_seed) {
  EpisodeLog ep;
  ep.variant = static_cast<std::uint8_t>(env.variant());
  ep.env_seed = env_seed;
  ep.layout = env.layout();
  ep.final_snap = make_snap(env);
  episodes_.push_back(std::move(ep));
  index_dirty_ = true;
}

void TransitionLog::add_step(const Snap& pre, int action,
                             const StepResult& res) {
  if (episodes_.empty()) throw CoinsError("add_step before start_episode");
  StepRec r;
  r.pre = pre;
  r.action = static_cast<std::uint8_t>(action);
  r.reward = res.reward;
  r.flags = pack_flags(res);
  r.block_hit = static_cast<std::int16_t>(res.flags.block_hit);
  episodes_.back().steps.push_back(r);
  index_dirty_ = true;
}

void TransitionLog::note_final(const BreakoutEnv& env) {
  if (episodes_.empty()) throw CoinsError("note_final before start_episode");
  episodes_.back().final_snap = make_snap(env);
}

std::size_t TransitionLog::total_steps() const {
  reindex();
  return ep_offset_.empty() ? 0 : ep_offset_.back();
}

std::size_t TransitionLog::usable_steps() const {
  std::size_t n = 0;
  for (const EpisodeLog& ep : episodes_)
    for (const StepRec& s : ep.steps)
      if (!s.done()) ++n;
  return n;
}

void TransitionLog::reindex() const {
  if (!index_dirty_) return;
  ep_offset_.resize(episodes_.size());
  std::size_t acc = 0;
  for (std::size_t e = 0; e < episodes_.size(); ++e) {
    acc += episodes_[e].steps.size();
    ep_offset_[e] = acc;
  }
  index_dirty_ = false;
}

TransitionLog::Ref TransitionLog::at(std::size_t i) const {
  reindex();
  // Binary search over episode prefix sums.
  std::size_t lo = 0, hi = ep_offset_.size();
  while (lo + 1 < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (ep_offset_[mid - 1] <= i)
      lo = mid;
    else
      hi = mid;
  }
  if (lo >= episodes_.size() || i >= ep_offset_[lo])
    throw CoinsError("transition index out of range");
  const std::size_t base = lo == 0 ? 0 : ep_offset_[lo - 1];
  return {&episodes_[lo], i - base};
}

Vec TransitionLog::snap_factor(const Snap& s, const EpisodeLog& ep,
                               FactorId f) {
  if (f == kPaddleFactor) {
    Vec v(4);
    v << static_cast<float>(BreakoutEnv::kPaddleRow), s.paddle_x, 0.f, 0.f;
    return v;
  }
  if (f == kBallFactor) {
    Vec v(4);
    v << s.ball[0], s.ball[1], s.ball[2], s.ball[3];
    return v;
  }
  const int i = block_index(f);
  Vec v = Vec::Zero(3);
  if (i >= 0 && i < static_cast<int>(ep.layout.size())) {
    const BlockDef& b = ep.layout[i];
    v << static_cast<float>(b.y0 + b.h / 2), static_cast<float>(b.x0 + b.w / 2),
        s.block_alive(i) ? 1.f : 0.f;
  }
  return v;
}

Vec TransitionLog::factor_pre(std::size_t i, FactorId f) const {
  const Ref r = at(i);
  return snap_factor(r.ep->steps[r.t].pre, *r.ep, f);
}

Vec TransitionLog::factor_post(std::size_t i, FactorId f) const {
  const Ref r = at(i);
  const Snap& post = (r.t + 1 < r.ep->steps.size()) ? r.ep->steps[r.t + 1].pre
                                                    : r.ep->final_snap;
  return snap_factor(post, *r.ep, f);
}

const StepRec& TransitionLog::step(std::size_t i) const {
  const Ref r = at(i);
  return r.ep->steps[r.t];
}

bool TransitionLog::oracle(std::size_t i, FactorId source,
                           FactorId target) const {
  const Ref r = at(i);
  const StepRec& s = r.ep->steps[r.t];
  if (source == kActionFactor && target == kPaddleFactor) return true;
  if (source == kPaddleFactor && target == kBallFactor)
    return s.paddle_bounce();
  if (s.block_hit >= 0) {
    const FactorId bf = block_factor(s.block_hit);
    const bool died =
        s.block_hit < static_cast<int>(r.ep->layout.size()) &&
        r.ep->layout[s.block_hit].breakable;
    if (source == bf && target == kBallFactor) return true;
    if (source == kBallFactor && target == bf) return died;
  }
  return false;
}

PairView::PairView(const TransitionLog& log, FactorId source, FactorId target)
    : log_(&log), source_(source), target_(target) {
  const std::size_t n = log.total_steps();
  keep_.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!log.step(i).done()) keep_.push_back(i);
}

void PairView::get(std::size_t i, Vec& s_a, Vec& s_b, Vec& s_b_post) const {
  const std::size_t r = keep_[i];
  if (source_ == kActionFactor)
    s_a = Schema::encode_action(log_->step(r).action);
  else
    s_a = log_->factor_pre(r, source_);
  s_b = log_->factor_pre(r, target_);
  s_b_post = log_->factor_post(r, target_);
}

std::vector<std::size_t> strided_subsample(std::size_t n, std::size_t m) {
  std::vector<std::size_t> idx;
  if (n == 0) return idx;
  if (m >= n) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  idx.resize(m);
  for (std::size_t i = 0; i < m; ++i) idx[i] = (i * n) / m;
  return idx;
}

}  // namespace coins
