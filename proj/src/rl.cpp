#include "coins/rl.hpp"

#include <cmath>

namespace coins {

int select_action(const QNet& qnet, const Vec& s, float eps, Rng& rng) {
  if (rng.uniform() < eps)
    return static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(qnet.n_actions)));
  return qnet.argmax(s);
}

float update_q(QNet& online, const QNet& target, const ReplayBuffer& buf,
               const LearnerConfig& cfg, Rng& rng) {
  if (buf.size() == 0) return 0.f;
  const int B = cfg.batch;
  std::vector<const Transition*> batch;
  buf.sample(static_cast<std::size_t>(B), rng, batch);

  const int in = static_cast<int>(batch[0]->s.size());
  Mat X(in, B), X2(in, B);
  for (int j = 0; j < B; ++j) {
    X.col(j) = batch[j]->s;
    X2.col(j) = batch[j]->s2;
  }

  // Double-DQN targets: online argmax, target value, gamma^tau bootstrap.
  const Mat Q2o = online.net.forward(X2);
  const Mat Q2t = target.net.forward(X2);
  std::vector<Mat> hidden;
  const Mat Q = online.net.forward(X, &hidden);

  Mat dY = Mat::Zero(online.n_actions, B);
  float loss = 0.f;
  for (int j = 0; j < B; ++j) {
    const Transition& t = *batch[j];
    int amax = 0;
    for (int a = 1; a < online.n_actions; ++a)
      if (Q2o(a, j) > Q2o(amax, j)) amax = a;
    const float boot = std::pow(cfg.gamma, static_cast<float>(t.tau));
    const float y = t.r + boot * (1.f - t.done) * Q2t(amax, j);
    const float err = Q(t.a, j) - y;
    loss += err * err / B;
    dY(t.a, j) = 2.f * err / B;
  }
  if (!std::isfinite(loss)) throw NumericalError("non-finite TD loss");
  const auto g = online.net.backward(X, hidden, dY);
  online.net.adam_step(g, cfg.lr);
  return loss;
}

std::vector<float> value_iteration(const TabularMDP& mdp, float gamma,
                                   int sweeps) {
  std::vector<float> Q(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions,
                       0.f);
  std::vector<float> Qn(Q.size(), 0.f);
  for (int it = 0; it < sweeps; ++it) {
    for (int s = 0; s < mdp.n_states; ++s) {
      for (int a = 0; a < mdp.n_actions; ++a) {
        const int i = mdp.idx(s, a);
        const int s2 = mdp.next[i];
        float vmax = Q[mdp.idx(s2, 0)];
        for (int a2 = 1; a2 < mdp.n_actions; ++a2)
          vmax = std::max(vmax, Q[mdp.idx(s2, a2)]);
        Qn[i] = mdp.reward[i] + gamma * (1.f - mdp.done[i]) * vmax;
      }
    }
    Q.swap(Qn);
  }
  return Q;
}

}  // namespace coins
