#pragma once
// Value-based control: replay buffer, Q-network, epsilon-greedy action
// selection and double-DQN updates with semi-Markov discounting.
//
// Transitions carry the option duration tau; targets bootstrap with
// gamma^tau, which reduces to the standard rule at tau = 1. `done` marks
// true termination only -- timeouts and external episode cuts must leave it
// 0 so their states keep their continuation value (with all-negative shaping
// rewards, terminating on failure would otherwise make early failure look
// cheaper than slow success).

#include "coins/common.hpp"
#include "coins/net.hpp"

#include <cstdint>
#include <vector>

namespace coins {

struct Transition {
  Vec s;
  int a = 0;
  float r = 0.f;
  Vec s2;
  float done = 0.f;  // 1 only on true terminal transitions
  int tau = 1;       // primitive steps consumed
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : cap_(capacity) {}

  void push(Transition t) {
    if (data_.size() < cap_) {
      data_.push_back(std::move(t));
    } else {
      data_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % cap_;
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return cap_; }
  const Transition& operator[](std::size_t i) const { return data_[i]; }

  void sample(std::size_t batch, Rng& rng,
              std::vector<const Transition*>& out) const {
    out.resize(batch);
    for (std::size_t i = 0; i < batch; ++i)
      out[i] = &data_[rng.uniform_int(static_cast<std::uint64_t>(data_.size()))];
  }

 private:
  std::size_t cap_;
  std::size_t next_ = 0;
  std::vector<Transition> data_;
};

struct QNet {
  MLP<float> net;
  int n_actions = 0;

  void init(int state_dim, int actions, Rng& rng) {
    n_actions = actions;
    net.init({state_dim, 64, 64, actions}, rng, /*zero_final=*/true);
  }
  Vec q(const Vec& s) const { return net.forward1(s); }
  int argmax(const Vec& s) const {
    const Vec v = q(s);
    int best = 0;
    for (int a = 1; a < n_actions; ++a)
      if (v[a] > v[best]) best = a;
    return best;
  }
};

struct LearnerConfig {
  int batch = 64;
  float lr = 5e-4f;
  float gamma = 0.99f;
  int target_sync = 1000;      // updates between target-net refreshes
  int replay_capacity = 200000;
  int warmup = 1000;           // transitions before updates start
  float eps_start = 1.f;
  float eps_final = 0.05f;
  float eps_frac = 0.2f;       // fraction of the budget to anneal over
  int updates_per_collect = 1; // gradient steps per collected env step
  float her_rate = 0.5f;       // hindsight relabel probability per episode
  int n_complete = 10000;      // convergence window in env steps
  int success_window = 100;    // rolling attempts for the success rate
  float success_tol = 0.01f;
  float success_floor = 0.8f;  // rate needed before early convergence stops
};

inline float epsilon_at(const LearnerConfig& cfg, long step, long budget) {
  const double horizon =
      std::max(1.0, static_cast<double>(cfg.eps_frac) * budget);
  const double f = std::min(1.0, step / horizon);
  return static_cast<float>(cfg.eps_start + f * (cfg.eps_final - cfg.eps_start));
}

int select_action(const QNet& qnet, const Vec& s, float eps, Rng& rng);

// One double-DQN minibatch step; returns the TD loss. `target` provides the
// bootstrap values at the online argmax.
float update_q(QNet& online, const QNet& target, const ReplayBuffer& buf,
               const LearnerConfig& cfg, Rng& rng);

// --- small tabular MDPs (verification oracles) -----------------------------

struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  std::vector<int> next;      // [s * n_actions + a] -> s'
  std::vector<float> reward;  // [s * n_actions + a]
  std::vector<float> done;    // [s * n_actions + a], 1 = terminal

  int idx(int s, int a) const { return s * n_actions + a; }
};

// Exact Q values by value iteration to the given sweep count.
std::vector<float> value_iteration(const TabularMDP& mdp, float gamma,
                                   int sweeps);

}  // namespace coins
