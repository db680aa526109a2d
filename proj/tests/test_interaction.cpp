#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coins/env.hpp"
#include "coins/gaussian.hpp"
#include "coins/interaction.hpp"
#include "coins/log.hpp"

#include <cmath>
#include <vector>

using namespace coins;

namespace {

// A log whose single episode follows a hand-written sequence of ball states
// at a fixed position; record t is the transition snaps[t] -> snaps[t+1].
// Velocity entries are (vy, vx); position stays at (50, 40) so only the
// velocity channels carry deltas.
TransitionLog scripted_ball_log(const std::vector<std::pair<float, float>>& vel) {
  BreakoutEnv env(Variant::Base);
  env.reset(1);
  TransitionLog log;
  log.start_episode(env, 1);
  EpisodeLog& ep = log.episodes().back();
  ep.steps.clear();

  Snap base = make_snap(env);
  base.paddle_x = 40.f;
  base.ball[0] = 50.f;
  base.ball[1] = 40.f;

  auto snap_at = [&](std::size_t t) {
    Snap s = base;
    s.ball[2] = vel[t].first;
    s.ball[3] = vel[t].second;
    return s;
  };
  for (std::size_t t = 0; t + 1 < vel.size(); ++t) {
    StepRec rec;
    rec.pre = snap_at(t);
    rec.action = 1;
    ep.steps.push_back(rec);
  }
  ep.final_snap = snap_at(vel.size() - 1);
  return log;
}

// vy sequence alternating +1 (pre of a flip) and -1 (its post), n_flip times,
// with `n_rare` spliced-in flips that start from vy=+2 and land on vy=0.
std::vector<std::pair<float, float>> flip_sequence(int n_flip, int n_rare) {
  std::vector<std::pair<float, float>> vel;
  vel.emplace_back(1.f, 1.f);
  for (int i = 0; i < n_flip; ++i) {
    vel.emplace_back(-1.f, 1.f);  // flip: delta vy = -2 (detected)
    vel.emplace_back(1.f, 1.f);   // rewind: delta vy = +2 (not detected)
  }
  for (int i = 0; i < n_rare; ++i) {
    vel.emplace_back(2.f, 1.f);   // ramp: delta vy = +1 (not detected)
    vel.emplace_back(0.f, 1.f);   // rare flip: delta vy = -2 (detected)
    vel.emplace_back(1.f, 1.f);   // rewind: delta vy = +1 (not detected)
  }
  return vel;
}

// Pin the (zero-initialized) output layer so the model predicts a constant
// delta `mu` with a constant variance, independent of the input.
void pin_model(GaussianModel& m, const std::vector<float>& mu, float z_var) {
  auto& b = m.core.net.b.back();
  const int d = static_cast<int>(mu.size());
  REQUIRE(b.size() == 2 * d);
  for (int k = 0; k < d; ++k) {
    b[k] = mu[k];
    b[d + k] = z_var;
  }
}

PairModels flip_detector(const Schema& sch) {
  Rng rng(7);
  PairModels pm;
  pm.passive = GaussianModel::make_passive(sch, kBallFactor, rng);
  pm.active =
      GaussianModel::make_active(sch, kPaddleFactor, kBallFactor, rng);
  // Active: certain about the vy -2 flip; passive: fresh (zero delta,
  // base variance), so it is surprised by any velocity change.
  pin_model(pm.active, {0.f, 0.f, -2.f, 0.f}, -30.f);
  return pm;
}

}  // namespace

TEST_CASE("detector quadrants") {
  const DetectorThresholds thr;
  CHECK(detect(3.f, -1.f, thr, false));        // confident + surprised
  CHECK_FALSE(detect(3.f, 0.5f, thr, false));  // passive explains it
  CHECK_FALSE(detect(1.f, -5.f, thr, false));  // active unsure
  CHECK_FALSE(detect(2.f, -5.f, thr, false));  // strict > on eps_act
  CHECK_FALSE(detect(3.f, 0.f, thr, false));   // strict < on eps_pas
  // Action sources drop the passive conjunct.
  CHECK(detect(3.f, 100.f, thr, true));
  CHECK_FALSE(detect(1.9f, -100.f, thr, true));
}

TEST_CASE("modifiability gap and interaction score over hand arrays") {
  Vec la(4), lp(4);
  la << 3.f, 5.f, 1.f, 4.f;
  lp << -1.f, 0.5f, -3.f, -2.f;
  const DetectorThresholds thr;

  CHECK(mg_score(la, lp) ==
        doctest::Approx((3 + 5 + 1 + 4) / 4.f - (-1 + 0.5 - 3 - 2) / 4.f));

  int n_int = -1;
  // Detected: records 0 and 3 -> mean of (3-(-1)) and (4-(-2)).
  CHECK(interaction_score(la, lp, thr, false, &n_int) ==
        doctest::Approx((4.f + 6.f) / 2.f));
  CHECK(n_int == 2);

  // Action source adds record 1 (passive conjunct dropped).
  CHECK(interaction_score(la, lp, thr, true, &n_int) ==
        doctest::Approx((4.f + 4.5f + 6.f) / 3.f));
  CHECK(n_int == 3);

  // Nothing detected -> score 0 by convention.
  Vec low = Vec::Constant(4, -1.f);
  CHECK(interaction_score(low, lp, thr, false, &n_int) == 0.f);
  CHECK(n_int == 0);

  Vec bad(3);
  bad << 1.f, 2.f, 3.f;
  CHECK_THROWS_AS(mg_score(la, bad), CoinsError);
  CHECK_THROWS_AS(interaction_score(la, bad, thr, false), CoinsError);
  CHECK_THROWS_AS(mg_score(Vec(), Vec()), CoinsError);
}

TEST_CASE("target selection: strict threshold, ties to the lowest id") {
  auto entry = [](FactorId target, float sc) {
    PairScore s;
    s.source = kPaddleFactor;
    s.target = target;
    s.sc = sc;
    return s;
  };

  // Nothing strictly above the threshold.
  CHECK_FALSE(select_target({entry(1, 2.9f), entry(2, 3.0f)}, 3.f));

  // Highest score wins regardless of order.
  CHECK(*select_target({entry(4, 3.5f), entry(1, 7.f), entry(2, 5.f)}, 3.f) ==
        1);
  CHECK(*select_target({entry(1, 7.f), entry(4, 3.5f)}, 3.f) == 1);

  // Exact ties resolve to the lowest target id, in either order.
  CHECK(*select_target({entry(5, 6.f), entry(2, 6.f)}, 3.f) == 2);
  CHECK(*select_target({entry(2, 6.f), entry(5, 6.f)}, 3.f) == 2);
}

TEST_CASE("score_pair matches a by-hand recompute on fresh models") {
  BreakoutEnv env(Variant::Base);
  TransitionLog log;
  Rng rng(11), act(12);
  collect_primitive(
      env,
      [&act](const BreakoutEnv&) {
        return static_cast<int>(act.uniform_int(3ull));
      },
      600, log, rng);
  const Schema sch = env.schema();
  PairView view(log, kPaddleFactor, kBallFactor);

  Rng mr(13);
  PairModels pm;
  pm.passive = GaussianModel::make_passive(sch, kBallFactor, mr);
  pm.active = GaussianModel::make_active(sch, kPaddleFactor, kBallFactor, mr);

  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < view.size(); i += 3) idx.push_back(i);
  const DetectorThresholds thr;
  const PairScore s = score_pair(sch, pm, thr, view, idx);
  CHECK(s.source == kPaddleFactor);
  CHECK(s.target == kBallFactor);
  CHECK(s.n == static_cast<int>(idx.size()));

  Vec la, lp;
  loglik_records(pm.active, sch, view, idx, la);
  loglik_records(pm.passive, sch, view, idx, lp);
  CHECK(s.mg == doctest::Approx(mg_score(la, lp)));
  int n_int = -1;
  CHECK(s.sc == doctest::Approx(interaction_score(la, lp, thr, false, &n_int)));
  CHECK(s.n_int == n_int);
  CHECK(s.rate == doctest::Approx(static_cast<float>(n_int) / s.n));

  // A fresh active model is never confident enough to detect anything.
  CHECK(s.n_int == 0);
  CHECK(s.sc == 0.f);

  // Empty index set: a well-formed zero score.
  const PairScore z = score_pair(sch, pm, thr, view, {});
  CHECK(z.n == 0);
  CHECK(z.n_int == 0);
  CHECK(z.sc == 0.f);
}

TEST_CASE("detect (model form) fires exactly on the doctored transition") {
  const Schema sch = BreakoutEnv(Variant::Base).schema();
  const PairModels pm = flip_detector(sch);
  const DetectorThresholds thr;

  Vec s_a(4), s_b(4), s_p(4);
  s_a << 80.f, 40.f, 0.f, 0.f;
  s_b << 50.f, 40.f, 1.f, 1.f;
  s_p << 50.f, 40.f, -1.f, 1.f;  // vy flip: active certain, passive surprised
  CHECK(detect(sch, pm, thr, s_a, s_b, s_p));

  s_p << 50.f, 40.f, 1.f, 1.f;  // no change: passive content, active shocked
  CHECK_FALSE(detect(sch, pm, thr, s_a, s_b, s_p));

  s_p << 51.f, 41.f, 1.f, 1.f;  // plain motion: active shocked
  CHECK_FALSE(detect(sch, pm, thr, s_a, s_b, s_p));
}

TEST_CASE("detect (model form) skips the passive conjunct for actions") {
  const Schema sch = BreakoutEnv(Variant::Base).schema();
  Rng rng(17);
  PairModels pm;
  pm.passive = GaussianModel::make_passive(sch, kPaddleFactor, rng);
  pm.active =
      GaussianModel::make_active(sch, kActionFactor, kPaddleFactor, rng);
  // Both heads certain about a zero delta: the passive model would veto the
  // detection if its conjunct were consulted.
  pin_model(pm.active, {0.f, 0.f, 0.f, 0.f}, -30.f);
  pin_model(pm.passive, {0.f, 0.f, 0.f, 0.f}, -30.f);

  Vec onehot(3), s_b(4);
  onehot << 0.f, 1.f, 0.f;
  s_b << 80.f, 40.f, 0.f, 0.f;
  CHECK(detect(sch, pm, DetectorThresholds{}, onehot, s_b, s_b));
}

TEST_CASE("control mask isolates the doctored velocity channel") {
  const Schema sch = BreakoutEnv(Variant::Base).schema();
  const PairModels pm = flip_detector(sch);

  // 120 detected flips to vy=-1 plus one rare detected flip to vy=0; the
  // rare goal falls below the support floor max(2, ceil(0.02 * 121)) = 3.
  TransitionLog log = scripted_ball_log(flip_sequence(120, 1));
  PairView view(log, kPaddleFactor, kBallFactor);
  const ControlMask cm =
      control_mask(sch, pm, DetectorThresholds{}, view, 0.1f, 10);

  CHECK(cm.n_detected == 121);
  REQUIRE(cm.mask.size() == 4);
  CHECK(cm.mask[0] == 0);
  CHECK(cm.mask[1] == 0);
  CHECK(cm.mask[2] == 1);
  CHECK(cm.mask[3] == 0);
  REQUIRE(cm.dim() == 1);
  CHECK(cm.midx[0] == 2);
  // Every detected record deviates from the passive mean by exactly 2 raw
  // velocity units, i.e. 1.0 normalized.
  CHECK(cm.mean_dev[2] == doctest::Approx(1.f));
  CHECK(cm.mean_dev[0] == doctest::Approx(0.f));

  REQUIRE(cm.discrete);
  REQUIRE(cm.goals.size() == 1);
  CHECK(cm.goals[0][0] == doctest::Approx(-1.f));
  // Bounds still span all detected records, including the filtered goal.
  CHECK(cm.lo[0] == doctest::Approx(-1.f));
  CHECK(cm.hi[0] == doctest::Approx(0.f));

  // Masked projection picks out the vy channel.
  Vec s(4);
  s << 9.f, 8.f, 7.f, 6.f;
  const Vec m = cm.masked(s);
  REQUIRE(m.size() == 1);
  CHECK(m[0] == 7.f);
}

TEST_CASE("goal support filter keeps both goals when the rare one recurs") {
  const Schema sch = BreakoutEnv(Variant::Base).schema();
  const PairModels pm = flip_detector(sch);

  // 60 common flips + 2 rare ones: floor = max(2, ceil(0.02 * 62)) = 2, so
  // both goals survive; goals come out lexicographically sorted.
  TransitionLog log = scripted_ball_log(flip_sequence(60, 2));
  PairView view(log, kPaddleFactor, kBallFactor);
  const ControlMask cm =
      control_mask(sch, pm, DetectorThresholds{}, view, 0.1f, 10);

  CHECK(cm.n_detected == 62);
  REQUIRE(cm.discrete);
  REQUIRE(cm.goals.size() == 2);
  CHECK(cm.goals[0][0] == doctest::Approx(-1.f));
  CHECK(cm.goals[1][0] == doctest::Approx(0.f));
}

TEST_CASE("goal space falls back to a continuous box when too rich") {
  const Schema sch = BreakoutEnv(Variant::Base).schema();
  const PairModels pm = flip_detector(sch);
  TransitionLog log = scripted_ball_log(flip_sequence(60, 2));
  PairView view(log, kPaddleFactor, kBallFactor);

  // n_disc = 1: even a single surviving goal is "too many".
  const ControlMask cm =
      control_mask(sch, pm, DetectorThresholds{}, view, 0.1f, 1);
  CHECK(cm.n_detected == 62);
  CHECK(cm.dim() == 1);
  CHECK_FALSE(cm.discrete);
  CHECK(cm.goals.empty());
  CHECK(cm.lo[0] == doctest::Approx(-1.f));
  CHECK(cm.hi[0] == doctest::Approx(0.f));
}

TEST_CASE("detections without controllable deviation yield an empty mask") {
  const Schema sch = BreakoutEnv(Variant::Base).schema();
  Rng rng(19);
  PairModels pm;
  pm.passive = GaussianModel::make_passive(sch, kBallFactor, rng);
  pm.active =
      GaussianModel::make_active(sch, kPaddleFactor, kBallFactor, rng);
  // Active is certain about a tiny positional drift; the passive mean sits
  // close enough that the normalized deviation stays under eta_eps.
  pin_model(pm.active, {1.f, 1.f, 0.f, 0.f}, -30.f);

  // Straight diagonal motion: every record has delta (1, 1, 0, 0).
  BreakoutEnv env(Variant::Base);
  env.reset(3);
  TransitionLog log;
  log.start_episode(env, 3);
  EpisodeLog& ep = log.episodes().back();
  ep.steps.clear();
  Snap s = make_snap(env);
  s.paddle_x = 40.f;
  s.ball[2] = 1.f;
  s.ball[3] = 1.f;
  float y = 10.f, x = 10.f;
  for (int t = 0; t < 39; ++t) {
    s.ball[0] = y;
    s.ball[1] = x;
    StepRec rec;
    rec.pre = s;
    ep.steps.push_back(rec);
    y += 1.f;
    x += 1.f;
  }
  s.ball[0] = y;
  s.ball[1] = x;
  ep.final_snap = s;

  PairView view(log, kPaddleFactor, kBallFactor);
  const ControlMask cm =
      control_mask(sch, pm, DetectorThresholds{}, view, 0.1f, 10);
  CHECK(cm.n_detected == 39);
  CHECK(cm.dim() == 0);
  // Deviations exist but sit under the controllability threshold.
  CHECK(cm.mean_dev[0] == doctest::Approx(2.f / 84.f));
  CHECK(cm.mean_dev[1] == doctest::Approx(2.f / 84.f));

  // No detections at all: an all-zero mask with zero support.
  PairModels blind;
  Rng rb(23);
  blind.passive = GaussianModel::make_passive(sch, kBallFactor, rb);
  blind.active =
      GaussianModel::make_active(sch, kPaddleFactor, kBallFactor, rb);
  const ControlMask none =
      control_mask(sch, blind, DetectorThresholds{}, view, 0.1f, 10);
  CHECK(none.n_detected == 0);
  CHECK(none.dim() == 0);
}
