#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coins/rl.hpp"

#include <cmath>
#include <vector>

using namespace coins;

namespace {

Vec onehot3(int s) {
  Vec v = Vec::Zero(3);
  v[s] = 1.f;
  return v;
}

// Deterministic 3-state chain: action 1 advances toward the terminal state 2
// (reward 1 on the final hop), action 0 retreats; state 2 is absorbing.
TabularMDP chain_mdp() {
  TabularMDP m;
  m.n_states = 3;
  m.n_actions = 2;
  m.next = {0, 1, 0, 2, 2, 2};
  m.reward = {0, 0, 0, 1, 0, 0};
  m.done = {0, 0, 0, 1, 1, 1};
  return m;
}

}  // namespace

TEST_CASE("epsilon anneals linearly over the budget fraction") {
  LearnerConfig cfg;  // eps 1 -> 0.05 over the first 20% of the budget
  CHECK(epsilon_at(cfg, 0, 100000) == doctest::Approx(1.f));
  CHECK(epsilon_at(cfg, 10000, 100000) == doctest::Approx(0.525f));
  CHECK(epsilon_at(cfg, 20000, 100000) == doctest::Approx(0.05f));
  CHECK(epsilon_at(cfg, 90000, 100000) == doctest::Approx(0.05f));
}

TEST_CASE("replay buffer evicts the oldest entries at capacity") {
  ReplayBuffer buf(4);
  for (int i = 0; i < 6; ++i) {
    Transition t;
    t.s = Vec::Zero(1);
    t.s2 = Vec::Zero(1);
    t.r = static_cast<float>(i);
    buf.push(std::move(t));
  }
  CHECK(buf.size() == 4);
  CHECK(buf.capacity() == 4);
  // Ring order after wrapping: slots 0,1 hold the newest items 4,5.
  CHECK(buf[0].r == doctest::Approx(4.f));
  CHECK(buf[1].r == doctest::Approx(5.f));
  CHECK(buf[2].r == doctest::Approx(2.f));
  CHECK(buf[3].r == doctest::Approx(3.f));

  Rng rng(3);
  std::vector<const Transition*> out;
  buf.sample(64, rng, out);
  REQUIRE(out.size() == 64);
  for (const Transition* t : out) CHECK(t->r >= 2.f);
}

TEST_CASE("action selection: greedy argmax, uniform exploration") {
  Rng rng(5);
  QNet q;
  q.init(3, 3, rng);
  q.net.b.back()[2] = 1.f;  // make action 2 the strict argmax everywhere
  const Vec s = onehot3(0);
  for (int i = 0; i < 20; ++i) CHECK(select_action(q, s, 0.f, rng) == 2);

  std::vector<int> counts(3, 0);
  for (int i = 0; i < 300; ++i) ++counts[select_action(q, s, 1.f, rng)];
  for (int a = 0; a < 3; ++a) CHECK(counts[a] > 50);
}

TEST_CASE("value iteration solves a hand-checked MDP") {
  const auto Q = value_iteration(chain_mdp(), 0.9f, 100);
  REQUIRE(Q.size() == 6);
  // Hand fixed point: Q(1,1)=1, Q(0,1)=0.9, Q(0,0)=0.81, Q(1,0)=0.81.
  CHECK(Q[1] == doctest::Approx(0.9f));
  CHECK(Q[0] == doctest::Approx(0.81f));
  CHECK(Q[2] == doctest::Approx(0.81f));
  CHECK(Q[3] == doctest::Approx(1.f));
  CHECK(Q[4] == doctest::Approx(0.f));
  CHECK(Q[5] == doctest::Approx(0.f));
}

TEST_CASE("TD loss at zero initialization equals the mean squared reward") {
  Rng rng(7);
  QNet online, target;
  online.init(3, 2, rng);
  target = online;
  ReplayBuffer buf(8);
  Transition t;
  t.s = onehot3(0);
  t.s2 = onehot3(1);
  t.a = 1;
  t.r = 2.f;
  buf.push(t);
  LearnerConfig cfg;
  // Zero-initialized heads: every Q and bootstrap value is 0, so the TD
  // error is exactly -r for each of the batch duplicates.
  CHECK(update_q(online, target, buf, cfg, rng) == doctest::Approx(4.f));

  ReplayBuffer empty(4);
  CHECK(update_q(online, target, empty, cfg, rng) == 0.f);
}

TEST_CASE("double-DQN converges to the value-iteration solution") {
  const TabularMDP mdp = chain_mdp();
  const float gamma = 0.9f;
  const auto Qstar = value_iteration(mdp, gamma, 200);

  ReplayBuffer buf(16);
  for (int s = 0; s < 3; ++s) {
    for (int a = 0; a < 2; ++a) {
      Transition t;
      t.s = onehot3(s);
      t.a = a;
      const int i = mdp.idx(s, a);
      t.r = mdp.reward[i];
      t.s2 = onehot3(mdp.next[i]);
      t.done = mdp.done[i];
      buf.push(std::move(t));
    }
  }

  Rng rng(11);
  QNet online, target;
  online.init(3, 2, rng);
  target = online;
  LearnerConfig cfg;
  cfg.lr = 1e-3f;
  cfg.gamma = gamma;
  for (int u = 1; u <= 8000; ++u) {
    update_q(online, target, buf, cfg, rng);
    if (u % 100 == 0) target.net = online.net;
  }

  for (int s = 0; s < 3; ++s) {
    const Vec q = online.q(onehot3(s));
    for (int a = 0; a < 2; ++a)
      CHECK(q[a] == doctest::Approx(Qstar[mdp.idx(s, a)]).epsilon(1e-2));
  }
  CHECK(online.argmax(onehot3(0)) == 1);
  CHECK(online.argmax(onehot3(1)) == 1);
}

TEST_CASE("semi-Markov transitions bootstrap with gamma^tau") {
  // Self-loop paying 1 every two primitive steps: Q* = 1 / (1 - gamma^2).
  const float gamma = 0.9f;
  ReplayBuffer buf(4);
  Transition t;
  t.s = Vec::Ones(1);
  t.s2 = Vec::Ones(1);
  t.a = 0;
  t.r = 1.f;
  t.tau = 2;
  buf.push(std::move(t));

  Rng rng(13);
  QNet online, target;
  online.init(1, 1, rng);
  target = online;
  LearnerConfig cfg;
  cfg.lr = 3e-3f;
  cfg.gamma = gamma;
  for (int u = 1; u <= 6000; ++u) {
    update_q(online, target, buf, cfg, rng);
    if (u % 100 == 0) target.net = online.net;
  }
  const float qstar = 1.f / (1.f - gamma * gamma);
  CHECK(online.q(Vec::Ones(1))[0] == doctest::Approx(qstar).epsilon(0.02f));
}
