#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coins/env.hpp"
#include "coins/gaussian.hpp"
#include "coins/interaction.hpp"
#include "coins/skill.hpp"

#include <cmath>
#include <memory>
#include <vector>

using namespace coins;

namespace {

// Pin the (zero-initialized) output layer so the model predicts a constant
// delta `mu` with a tight variance, independent of the input.
void pin_model(GaussianModel& m, const std::vector<float>& mu, float z_var) {
  auto& b = m.core.net.b.back();
  const int d = static_cast<int>(mu.size());
  REQUIRE(b.size() == 2 * d);
  for (int k = 0; k < d; ++k) {
    b[k] = mu[k];
    b[d + k] = z_var;
  }
}

// Detector confident about the ball's vy -2 flip; the fresh passive model is
// surprised by any velocity change.
std::shared_ptr<PairModels> flip_models(const Schema& sch) {
  Rng rng(7);
  auto pm = std::make_shared<PairModels>();
  pm->passive = GaussianModel::make_passive(sch, kBallFactor, rng);
  pm->active =
      GaussianModel::make_active(sch, kPaddleFactor, kBallFactor, rng);
  pin_model(pm->active, {0.f, 0.f, -2.f, 0.f}, -30.f);
  return pm;
}

// Paddle skill whose detector fires exactly on a zero paddle delta (the
// no-op action, or a move clipped at the wall).
Skill noop_paddle_skill(const Schema& sch, int forced_action) {
  Rng rng(9);
  Skill sk;
  sk.level = 0;
  sk.source = kActionFactor;
  sk.target = kPaddleFactor;
  sk.mask.mask = {0, 1, 0, 0};
  sk.mask.midx = {1};
  sk.mask.discrete = false;
  sk.mask.lo = Vec::Constant(1, 4.f);
  sk.mask.hi = Vec::Constant(1, 80.f);
  sk.models = std::make_shared<PairModels>();
  sk.models->active =
      GaussianModel::make_active(sch, kActionFactor, kPaddleFactor, rng);
  pin_model(sk.models->active, {0.f, 0.f, 0.f, 0.f}, -30.f);
  sk.policy.init(skill_policy_input_dim(sch, sk), kNumActions, rng);
  sk.policy.net.b.back()[forced_action] = 10.f;  // greedy fixed action
  return sk;
}

}  // namespace

TEST_CASE("segment rewards discount per-step costs inside an option") {
  // A terminating final step is free; every other primitive step costs
  // eps_rew, discounted within the segment.
  CHECK(segment_reward(1, true, 0.99f, 0.1f) == doctest::Approx(0.f));
  CHECK(segment_reward(1, false, 0.99f, 0.1f) == doctest::Approx(-0.1f));
  CHECK(segment_reward(3, true, 0.99f, 0.1f) ==
        doctest::Approx(-0.1f * (1.f + 0.99f)));
  CHECK(segment_reward(3, false, 0.99f, 0.1f) ==
        doctest::Approx(-0.1f * (1.f + 0.99f + 0.99f * 0.99f)));
  // gamma = 1 degenerates to a linear step count.
  CHECK(segment_reward(5, false, 1.f, 0.2f) == doctest::Approx(-1.f));
  CHECK(segment_reward(5, true, 1.f, 0.2f) == doctest::Approx(-0.8f));
}

TEST_CASE("relative grid decodes base-5 offsets; action counts match") {
  CHECK(relative_grid_point(0, 1)[0] == doctest::Approx(-1.f));
  CHECK(relative_grid_point(1, 1)[0] == doctest::Approx(-0.5f));
  CHECK(relative_grid_point(2, 1)[0] == doctest::Approx(0.f));
  CHECK(relative_grid_point(4, 1)[0] == doctest::Approx(1.f));
  const Vec p = relative_grid_point(7, 2);  // 7 = 2 + 1*5
  CHECK(p[0] == doctest::Approx(0.f));
  CHECK(p[1] == doctest::Approx(-0.5f));

  ControlMask disc;
  disc.discrete = true;
  disc.midx = {2, 3};
  disc.goals = {Vec::Zero(2), Vec::Ones(2), Vec::Constant(2, 2.f)};
  CHECK(actions_for_parent(disc) == 3);

  ControlMask cont;
  cont.discrete = false;
  cont.midx = {1};
  CHECK(actions_for_parent(cont) == 5);
  cont.midx = {0, 1};
  CHECK(actions_for_parent(cont) == 25);
  cont.midx = {0, 1, 2};  // 125 policy actions is past the grid's limit
  CHECK_THROWS_AS(actions_for_parent(cont), CoinsError);
}

TEST_CASE("relative offsets remap to clamped parent goals") {
  const Schema sch = BreakoutEnv(Variant::Base).schema();
  ControlMask pm;
  pm.discrete = false;
  pm.midx = {1};  // paddle x, feature range [0, 84]
  pm.lo = Vec::Constant(1, 10.f);
  pm.hi = Vec::Constant(1, 70.f);

  Vec s(4);
  s << 80.f, 40.f, 0.f, 0.f;
  Vec out(1);
  out << 1.f;
  CHECK(remap_relative_action(sch, kPaddleFactor, pm, out, 0.1f, s)[0] ==
        doctest::Approx(40.f + 0.1f * 84.f));

  s[1] = 65.f;  // clamps into the observed goal bounds
  CHECK(remap_relative_action(sch, kPaddleFactor, pm, out, 0.1f, s)[0] ==
        doctest::Approx(70.f));
  out << -1.f;
  s[1] = 12.f;
  CHECK(remap_relative_action(sch, kPaddleFactor, pm, out, 0.1f, s)[0] ==
        doctest::Approx(10.f));

  Vec bad(2);
  bad << 0.f, 0.f;
  CHECK_THROWS_AS(remap_relative_action(sch, kPaddleFactor, pm, bad, 0.1f, s),
                  CoinsError);
}

TEST_CASE("policy inputs: layout, normalization, goal difference slots") {
  const Schema sch = BreakoutEnv(Variant::Base).schema();
  Skill sk;
  sk.source = kPaddleFactor;
  sk.target = kBallFactor;
  sk.mask.midx = {2, 3};
  REQUIRE(skill_policy_input_dim(sch, sk) == 4 + 4 + 2 + 2 + 2);

  Vec s_a(4), s_b(4), goal(2);
  s_a << 80.f, 36.f, 0.f, 0.f;
  s_b << 50.f, 30.f, 2.f, -1.f;
  goal << -2.f, 1.f;
  const Vec in = skill_policy_input(sch, sk, s_a, s_b, goal);
  REQUIRE(in.size() == 14);
  for (int k = 0; k < 4; ++k) {
    CHECK(in[k] == doctest::Approx(sch.normalize(kPaddleFactor, k, s_a[k])));
    CHECK(in[4 + k] == doctest::Approx(sch.normalize(kBallFactor, k, s_b[k])));
  }
  CHECK(in[8] == doctest::Approx((80.f - 50.f) / 42.f));
  CHECK(in[9] == doctest::Approx((36.f - 30.f) / 42.f));
  CHECK(in[10] == doctest::Approx(sch.normalize(kBallFactor, 2, -2.f)));
  CHECK(in[11] == doctest::Approx(sch.normalize(kBallFactor, 3, 1.f)));
  CHECK(in[12] == doctest::Approx(sch.normalize(kBallFactor, 2, 2.f) -
                                  sch.normalize(kBallFactor, 2, -2.f)));
  CHECK(in[13] == doctest::Approx(sch.normalize(kBallFactor, 3, -1.f) -
                                  sch.normalize(kBallFactor, 3, 1.f)));

  // Action-commanded skills carry no source block.
  Skill base;
  base.source = kActionFactor;
  base.target = kPaddleFactor;
  base.mask.midx = {1};
  REQUIRE(skill_policy_input_dim(sch, base) == 4 + 1 + 1);
  Vec g1(1);
  g1 << 20.f;
  const Vec in0 = skill_policy_input(sch, base, Vec(), s_a, g1);
  CHECK(in0[0] == doctest::Approx(sch.normalize(kPaddleFactor, 0, 80.f)));
  CHECK(in0[4] == doctest::Approx(sch.normalize(kPaddleFactor, 1, 20.f)));

  Vec wrong(1);
  wrong << 0.f;
  CHECK_THROWS_AS(skill_policy_input(sch, sk, s_a, s_b, wrong), CoinsError);
}

TEST_CASE("skill termination needs both detection and goal proximity") {
  const Schema sch = BreakoutEnv(Variant::Base).schema();
  Skill sk;
  sk.source = kPaddleFactor;
  sk.target = kBallFactor;
  sk.mask.midx = {2};
  sk.mask.mask = {0, 0, 1, 0};
  sk.models = flip_models(sch);
  sk.eps_c = 0.5f;

  Vec s_a(4), s_b(4), flip(4), pass(4), goal(1);
  s_a << 80.f, 40.f, 0.f, 0.f;
  s_b << 50.f, 40.f, 1.f, 1.f;
  flip << 50.f, 40.f, -1.f, 1.f;
  pass << 51.f, 41.f, 1.f, 1.f;

  goal << -1.f;
  CHECK(skill_terminates(sch, sk, s_a, s_b, flip, goal));
  goal << 0.f;  // detected but off-goal
  CHECK_FALSE(skill_terminates(sch, sk, s_a, s_b, flip, goal));
  goal << 1.f;  // on-goal but undetected (plain motion)
  CHECK_FALSE(skill_terminates(sch, sk, s_a, s_b, pass, goal));
}

TEST_CASE("hindsight goal picks the last achieved outcome") {
  EpisodeRec ep;
  CHECK_FALSE(hindsight_goal(ep).has_value());
  SegmentRec a, b, c;
  b.achieved = Vec::Constant(1, -2.f);
  ep.segments = {a, b, c};
  REQUIRE(hindsight_goal(ep).has_value());
  CHECK((*hindsight_goal(ep))[0] == doctest::Approx(-2.f));
  SegmentRec d;
  d.achieved = Vec::Constant(1, -1.f);
  ep.segments.push_back(d);
  CHECK((*hindsight_goal(ep))[0] == doctest::Approx(-1.f));
}

TEST_CASE("hindsight relabeling rewrites inputs, rewards and truncation") {
  const Schema sch = BreakoutEnv(Variant::Base).schema();
  Skill sk;
  sk.source = kPaddleFactor;
  sk.target = kBallFactor;
  sk.mask.midx = {2};
  sk.mask.mask = {0, 0, 1, 0};
  sk.eps_c = 0.5f;
  sk.eps_rew = 0.1f;
  const float gamma = 0.99f;

  Vec s_a(4), b0(4), b1(4), b2(4), b3(4), g_old(1), g_new(1);
  s_a << 80.f, 40.f, 0.f, 0.f;
  b0 << 50.f, 40.f, 1.f, 1.f;
  b1 << 49.f, 41.f, -1.f, 1.f;
  b2 << 48.f, 42.f, -1.f, 1.f;
  b3 << 47.f, 43.f, -1.f, 1.f;
  g_old << -2.f;
  g_new << -1.f;

  EpisodeRec ep;
  ep.goal = g_old;
  auto seg = [&](const Vec& sb, const Vec& sb2, int tau,
                 std::optional<Vec> achieved) {
    SegmentRec r;
    r.s = skill_policy_input(sch, sk, s_a, sb, g_old);
    r.s2 = skill_policy_input(sch, sk, s_a, sb2, g_old);
    r.tau = tau;
    r.achieved = std::move(achieved);
    r.done = 0.f;
    r.r = segment_reward(tau, false, gamma, sk.eps_rew);
    return r;
  };
  ep.segments.push_back(seg(b0, b1, 2, std::nullopt));
  ep.segments.push_back(seg(b1, b2, 1, Vec::Constant(1, -1.f)));
  ep.segments.push_back(seg(b2, b3, 3, std::nullopt));

  const auto out = relabel_hindsight(sch, sk, ep, g_new, gamma);
  // Truncated at the first segment achieving the new goal.
  REQUIRE(out.size() == 2);
  CHECK(out[0].done == 0.f);
  CHECK(out[0].r == doctest::Approx(segment_reward(2, false, gamma, 0.1f)));
  CHECK(out[1].done == 1.f);
  CHECK(out[1].r == doctest::Approx(segment_reward(1, true, gamma, 0.1f)));

  // Patched inputs equal a from-scratch encoding under the new goal.
  const Vec f0 = skill_policy_input(sch, sk, s_a, b0, g_new);
  const Vec f1 = skill_policy_input(sch, sk, s_a, b1, g_new);
  const Vec f2 = skill_policy_input(sch, sk, s_a, b2, g_new);
  for (int k = 0; k < f0.size(); ++k) {
    CHECK(out[0].s[k] == doctest::Approx(f0[k]).epsilon(1e-5));
    CHECK(out[0].s2[k] == doctest::Approx(f1[k]).epsilon(1e-5));
    CHECK(out[1].s[k] == doctest::Approx(f1[k]).epsilon(1e-5));
    CHECK(out[1].s2[k] == doctest::Approx(f2[k]).epsilon(1e-5));
  }
}

TEST_CASE("goal sampling respects the goal space") {
  Rng rng(31);
  ControlMask disc;
  disc.discrete = true;
  disc.midx = {2, 3};
  disc.goals = {Vec::Constant(2, -1.f), Vec::Constant(2, 1.f)};
  int lo_hits = 0, hi_hits = 0;
  for (int i = 0; i < 200; ++i) {
    const Vec g = sample_goal(disc, rng);
    if (g[0] < 0) ++lo_hits;
    if (g[0] > 0) ++hi_hits;
  }
  CHECK(lo_hits + hi_hits == 200);
  CHECK(lo_hits > 50);
  CHECK(hi_hits > 50);

  ControlMask cont;
  cont.discrete = false;
  cont.midx = {1};
  cont.lo = Vec::Constant(1, 10.f);
  cont.hi = Vec::Constant(1, 70.f);
  for (int i = 0; i < 100; ++i) {
    const float g = sample_goal(cont, rng)[0];
    CHECK(g >= 10.f);
    CHECK(g <= 70.f);
  }

  ControlMask empty_disc;
  empty_disc.discrete = true;
  empty_disc.midx = {0};
  CHECK_THROWS_AS(sample_goal(empty_disc, rng), CoinsError);
  ControlMask empty;
  CHECK_THROWS_AS(sample_goal(empty, rng), CoinsError);
}

TEST_CASE("level-0 execution terminates on detection at the goal") {
  BreakoutEnv env(Variant::Base);
  env.reset(5);
  SkillChain chain;
  chain.schema = env.schema();
  chain.skills.push_back(noop_paddle_skill(chain.schema, 1));
  Skill& sk = chain.skills[0];
  sk.eps_c = 0.5f;
  sk.timeout = 50;

  // Goal = current paddle position; the greedy no-op keeps it and the pinned
  // detector certifies the zero delta immediately.
  const Vec goal = Vec::Constant(1, env.factor_state(kPaddleFactor)[1]);
  Rng rng(41);
  const EpisodeRec ep = execute_skill(env, chain, 0, goal, 0.f, rng);
  CHECK(ep.success);
  CHECK(ep.steps == 1);
  REQUIRE(ep.segments.size() == 1);
  CHECK(ep.segments[0].done == 1.f);
  CHECK(ep.segments[0].tau == 1);
  CHECK(ep.segments[0].r == doctest::Approx(0.f));  // terminating step is free
  REQUIRE(ep.segments[0].achieved.has_value());
  CHECK((*ep.segments[0].achieved)[0] == doctest::Approx(goal[0]));
}

TEST_CASE("level-0 execution respects the timeout without fake terminals") {
  BreakoutEnv env(Variant::Base);
  env.reset(6);
  SkillChain chain;
  chain.schema = env.schema();
  chain.skills.push_back(noop_paddle_skill(chain.schema, 0));
  Skill& sk = chain.skills[0];
  sk.eps_c = 0.5f;
  sk.timeout = 9;

  const Vec goal = Vec::Constant(1, 80.f);  // stays out of reach moving left
  Rng rng(43);
  const EpisodeRec ep = execute_skill(env, chain, 0, goal, 0.f, rng);
  CHECK_FALSE(ep.success);
  CHECK(ep.steps == 9);
  REQUIRE(ep.segments.size() == 9);
  for (const SegmentRec& s : ep.segments) {
    CHECK(s.done == 0.f);  // timeout is not a true terminal
    CHECK(s.tau == 1);
    CHECK(s.r == doctest::Approx(-0.1f));
  }
}

TEST_CASE("execution stops when the environment episode ends") {
  BreakoutEnv env(Variant::Base);
  env.reset(7);
  // Ball two rows above the gutter, descending fast, far from the paddle.
  env.debug_place(79, 10, 2, 1, 70);
  SkillChain chain;
  chain.schema = env.schema();
  chain.skills.push_back(noop_paddle_skill(chain.schema, 1));
  Skill& sk = chain.skills[0];
  sk.eps_c = 0.5f;
  sk.timeout = 50;

  const Vec goal = Vec::Constant(1, 4.f);  // unreachable for the no-op policy
  Rng rng(47);
  const EpisodeRec ep = execute_skill(env, chain, 0, goal, 0.f, rng);
  CHECK_FALSE(ep.success);
  CHECK(ep.env_done);
  CHECK(ep.env_terminal);
  CHECK(ep.steps < 5);
  CHECK(ep.segments.back().done == 0.f);  // env death is not goal success
}

TEST_CASE("level-1 segments command parent goals and count child steps") {
  BreakoutEnv env(Variant::Base);
  env.reset(8);
  SkillChain chain;
  chain.schema = env.schema();

  // Parent: no-op paddle skill that succeeds instantly on any goal.
  chain.skills.push_back(noop_paddle_skill(chain.schema, 1));
  Skill& parent = chain.skills[0];
  parent.eps_c = 1000.f;
  parent.timeout = 20;
  parent.mask.discrete = true;
  parent.mask.goals = {Vec::Constant(1, 30.f), Vec::Constant(1, 50.f)};

  // Child: ball-velocity skill whose fresh detector never fires.
  Skill child;
  child.level = 1;
  child.source = kPaddleFactor;
  child.target = kBallFactor;
  child.mask.midx = {2};
  child.mask.mask = {0, 0, 1, 0};
  child.mask.discrete = true;
  child.mask.goals = {Vec::Constant(1, -1.f)};
  Rng mr(49);
  child.models = std::make_shared<PairModels>();
  child.models->passive = GaussianModel::make_passive(chain.schema,
                                                      kBallFactor, mr);
  child.models->active = GaussianModel::make_active(
      chain.schema, kPaddleFactor, kBallFactor, mr);
  child.policy.init(skill_policy_input_dim(chain.schema, child),
                    actions_for_parent(parent.mask), mr);
  child.eps_c = 0.5f;
  child.eps_rew = 0.1f;
  child.timeout = 3;
  chain.skills.push_back(child);

  Rng rng(53);
  const Vec goal = Vec::Constant(1, -1.f);
  const EpisodeRec ep = execute_skill(env, chain, 1, goal, 0.f, rng);
  CHECK_FALSE(ep.success);
  CHECK(ep.steps == 3);  // timeout, one primitive step per parent attempt
  REQUIRE(ep.segments.size() == 3);
  for (const SegmentRec& s : ep.segments) {
    CHECK(s.tau == 1);
    CHECK(s.a >= 0);
    CHECK(s.a < 2);
    CHECK(s.done == 0.f);
    CHECK(s.r == doctest::Approx(-0.1f));
  }
}
