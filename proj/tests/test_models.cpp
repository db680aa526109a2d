#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coins/env.hpp"
#include "coins/gaussian.hpp"
#include "coins/log.hpp"

#include <cmath>
#include <vector>

using namespace coins;

namespace {

TransitionLog collect_random(int steps, std::uint64_t seed) {
  BreakoutEnv env(Variant::Base);
  TransitionLog log;
  Rng rng(seed);
  Rng act(seed ^ 0xabcdef);
  collect_primitive(
      env,
      [&act](const BreakoutEnv&) {
        return static_cast<int>(act.uniform_int(3ull));
      },
      steps, log, rng);
  return log;
}

}  // namespace

TEST_CASE("fresh model predicts zero delta with the base variance") {
  Rng rng(1);
  GaussianCore<float> core;
  core.init(8, 4, rng);
  CHECK(core.net.dims == std::vector<int>{8, 64, 64, 8});
  Eigen::VectorXf x = Eigen::VectorXf::Random(8);
  Eigen::VectorXf mu, var;
  core.mu_var1(x, mu, var);
  const float base_var = 0.01f + std::log(2.f);  // softplus(0) = ln 2
  for (int k = 0; k < 4; ++k) {
    CHECK(mu[k] == doctest::Approx(0.f));
    CHECK(var[k] == doctest::Approx(base_var).epsilon(1e-5));
  }
  // Frozen: log-likelihood of a zero-delta target under the fresh model.
  Eigen::VectorXf t = Eigen::VectorXf::Zero(4);
  CHECK(core.loglik1(x, t) == doctest::Approx(-2.9713f).epsilon(1e-3));
}

TEST_CASE("variance floor bounds the per-feature log-likelihood") {
  Rng rng(2);
  GaussianCore<float> core;
  core.init(6, 4, rng);
  // Drive the variance head to its floor: softplus(-30) ~ 1e-13.
  for (int k = 0; k < 4; ++k) core.net.b.back()[4 + k] = -30.f;
  Eigen::VectorXf x = Eigen::VectorXf::Random(6);
  Eigen::VectorXf mu, var;
  core.mu_var1(x, mu, var);
  for (int k = 0; k < 4; ++k) CHECK(var[k] >= 0.01f);
  // A perfect 4-feature prediction at the floor: 4 * 1.383644.
  Eigen::VectorXf t = Eigen::VectorXf::Zero(4);
  CHECK(core.loglik1(x, t) == doctest::Approx(5.5346f).epsilon(1e-3));
  // No setting of the variance head can beat the floor.
  for (int k = 0; k < 4; ++k) core.net.b.back()[4 + k] = -1e9f;
  core.mu_var1(x, mu, var);
  for (int k = 0; k < 4; ++k) CHECK(var[k] >= 0.01f);
  CHECK(core.loglik1(x, t) <= 5.5347f);
}

TEST_CASE("analytic NLL gradients match central differences in double") {
  Rng rng(3);
  for (int inst = 0; inst < 10; ++inst) {
    GaussianCore<double> core;
    core.init(5, 3, rng);
    // Randomize the (zero-initialized) output layer so both heads get
    // exercised away from the symmetric point.
    for (int r = 0; r < core.net.W.back().rows(); ++r) {
      for (int c = 0; c < core.net.W.back().cols(); ++c)
        core.net.W.back()(r, c) = rng.uniform(-0.5, 0.5);
      core.net.b.back()[r] = rng.uniform(-0.5, 0.5);
    }
    Eigen::MatrixXd X(5, 4), T(3, 4);
    for (int j = 0; j < 4; ++j) {
      for (int i = 0; i < 5; ++i) X(i, j) = rng.uniform(-1.0, 1.0);
      for (int i = 0; i < 3; ++i) T(i, j) = rng.uniform(-2.0, 2.0);
    }
    Eigen::VectorXd w(4);
    for (int j = 0; j < 4; ++j) w[j] = 1.0 + 5.0 * rng.uniform(0.0, 1.0);

    MLP<double>::Grads g;
    core.nll_batch(X, T, w, &g);
    const double worst = gradcheck_max_rel_error<double>(
        core.net, [&] { return core.nll_batch(X, T, w, nullptr); }, g);
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("zero weight sum is a numerical error") {
  Rng rng(4);
  GaussianCore<float> core;
  core.init(3, 2, rng);
  Eigen::MatrixXf X = Eigen::MatrixXf::Random(3, 2);
  Eigen::MatrixXf T = Eigen::MatrixXf::Random(2, 2);
  Eigen::VectorXf w = Eigen::VectorXf::Zero(2);
  CHECK_THROWS_AS(core.nll_batch(X, T, w, nullptr), NumericalError);
}

TEST_CASE("model inputs are normalized and targets are raw deltas") {
  TransitionLog log = collect_random(300, 11);
  const Schema sch = BreakoutEnv(Variant::Base).schema();
  PairView view(log, kPaddleFactor, kBallFactor);
  REQUIRE(view.size() > 100);

  Rng rng(5);
  GaussianModel act = GaussianModel::make_active(sch, kPaddleFactor,
                                                 kBallFactor, rng);
  CHECK(act.core.net.in_dim() ==
        active_input_dim(sch, kPaddleFactor, kBallFactor));
  CHECK(act.core.net.in_dim() == 4 + 4 + 2);  // source, target, rel. position

  Mat X, T;
  std::vector<std::size_t> idx{0, 5, 17};
  fill_pair_batch(act, sch, view, idx, X, T);
  REQUIRE(X.cols() == 3);
  Vec s_a, s_b, s_p;
  for (int j = 0; j < 3; ++j) {
    view.get(idx[j], s_a, s_b, s_p);
    for (int k = 0; k < 4; ++k) {
      CHECK(X(k, j) ==
            doctest::Approx(sch.normalize(kPaddleFactor, k, s_a[k])));
      CHECK(X(4 + k, j) ==
            doctest::Approx(sch.normalize(kBallFactor, k, s_b[k])));
      CHECK(T(k, j) == doctest::Approx(s_p[k] - s_b[k]));
    }
    CHECK(X(8, j) == doctest::Approx((s_a[0] - s_b[0]) / 42.f));
    CHECK(X(9, j) == doctest::Approx((s_a[1] - s_b[1]) / 42.f));
  }

  // Passive inputs carry the target factor only.
  GaussianModel pas = GaussianModel::make_passive(sch, kBallFactor, rng);
  CHECK(pas.core.net.in_dim() == passive_input_dim(sch, kBallFactor));
  CHECK(pas.core.net.in_dim() == 4);

  // Action sources are one-hot encoded.
  GaussianModel apm = GaussianModel::make_active(sch, kActionFactor,
                                                 kPaddleFactor, rng);
  CHECK(apm.core.net.in_dim() == kNumActions + 4);
}

TEST_CASE("active paddle model learns the action effect; passive cannot") {
  TransitionLog log = collect_random(2500, 21);
  const Schema sch = BreakoutEnv(Variant::Base).schema();
  PairView view(log, kActionFactor, kPaddleFactor);

  Rng rng(6);
  GaussianModel act =
      GaussianModel::make_active(sch, kActionFactor, kPaddleFactor, rng);
  GaussianModel pas = GaussianModel::make_passive(sch, kPaddleFactor, rng);
  FitConfig fc;
  fc.seed = 7;
  fit_gaussian(act, sch, view, fc);
  fit_gaussian(pas, sch, view, fc);

  double act_err = 0.0, pas_err = 0.0;
  Vec s_a, s_b, s_p, mu, var;
  const std::size_t n = std::min<std::size_t>(view.size(), 500);
  for (std::size_t i = 0; i < n; ++i) {
    view.get(i, s_a, s_b, s_p);
    act.predict(sch, s_a, s_b, mu, var);
    act_err += std::abs(mu[1] - s_p[1]);
    pas.predict(sch, s_a, s_b, mu, var);
    pas_err += std::abs(mu[1] - s_p[1]);
  }
  act_err /= n;
  pas_err /= n;
  // The action fully determines the paddle displacement; without it the
  // best guess is the mixture mean over {-8, 0, +8}.
  CHECK(act_err < 1.0);
  CHECK(pas_err > 3.0);
}

TEST_CASE("fit never ends worse than the initial model on its monitor") {
  TransitionLog log = collect_random(1200, 31);
  const Schema sch = BreakoutEnv(Variant::Base).schema();
  PairView view(log, kActionFactor, kPaddleFactor);
  Rng rng(8);
  GaussianModel m =
      GaussianModel::make_active(sch, kActionFactor, kPaddleFactor, rng);
  FitConfig fc;
  fc.max_steps = 400;
  fc.min_steps = 100;
  fc.seed = 9;
  const FitReport rep = fit_gaussian(m, sch, view, fc);
  CHECK(rep.final_nll <= rep.initial_nll + 1e-4f);
  CHECK(rep.steps <= fc.max_steps);
  CHECK(rep.steps >= fc.min_steps);
}

TEST_CASE("balance weights follow the surprise rule") {
  TransitionLog log = collect_random(3000, 41);
  const Schema sch = BreakoutEnv(Variant::Base).schema();
  PairView view(log, kPaddleFactor, kBallFactor);

  Rng rng(10);
  GaussianModel pas = GaussianModel::make_passive(sch, kBallFactor, rng);
  FitConfig fc;
  fc.max_steps = 600;
  fc.seed = 11;
  fit_gaussian(pas, sch, view, fc);

  const float lambda = 5.f, prox = 12.f, cap = 40.f;
  const Vec w = balance_weights(sch, view, pas, lambda, prox, cap);
  REQUIRE(w.size() == static_cast<Eigen::Index>(view.size()));

  Vec ll;
  std::vector<std::size_t> all(view.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  loglik_records(pas, sch, view, all, ll);

  Vec s_a, s_b, s_p;
  int boosted = 0;
  for (std::size_t i = 0; i < view.size(); ++i) {
    CHECK(w[i] >= 1.f);
    view.get(i, s_a, s_b, s_p);
    const float dy = s_a[0] - s_b[0], dx = s_a[1] - s_b[1];
    const bool close = std::sqrt(dy * dy + dx * dx) < prox;
    const float expect =
        (ll[i] < 0.f && close)
            ? 1.f + lambda * std::min(-ll[i], cap)
            : 1.f;
    CHECK(w[i] == doctest::Approx(expect).epsilon(1e-4));
    boosted += w[i] > 1.f ? 1 : 0;
  }
  CHECK(boosted > 0);                                  // bounces exist
  CHECK(boosted < static_cast<int>(view.size()) / 20);  // and are rare
}

TEST_CASE("interaction mix weights") {
  const Vec w = interaction_mix_weights({0, 1, 0, 1}, 0.3f);
  REQUIRE(w.size() == 4);
  CHECK(w[0] == doctest::Approx(0.7f));
  CHECK(w[1] == doctest::Approx(1.0f));
  CHECK(w[2] == doctest::Approx(0.7f));
  CHECK(w[3] == doctest::Approx(1.0f));
  const Vec off = interaction_mix_weights({0, 1}, 0.f);
  CHECK(off[0] == doctest::Approx(1.f));
  CHECK(off[1] == doctest::Approx(1.f));
}

TEST_CASE("pair views skip terminal transitions") {
  TransitionLog log = collect_random(800, 51);
  PairView view(log, kPaddleFactor, kBallFactor);
  CHECK(view.size() == log.usable_steps());
  CHECK(log.usable_steps() < log.total_steps());  // drops end episodes
  CHECK(log.total_steps() - log.usable_steps() ==
        log.num_episodes() - (log.episodes().back().steps.empty() ||
                                      !log.episodes().back().steps.back().done()
                                  ? 1
                                  : 0));
  // No surviving record is an episode-terminal step.
  Vec s_a, s_b, s_p;
  for (std::size_t i = 0; i < view.size(); ++i) {
    view.get(i, s_a, s_b, s_p);
    CHECK(s_p[0] <= 80.f);  // a kept ball transition never lands in the gutter
  }
}
