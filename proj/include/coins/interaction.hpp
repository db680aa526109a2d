#pragma once
// Interaction detection and scoring over passive/active model pairs.
//
// detect: the active model must find the transition likely (ll_act > eps_act)
// while the passive model is surprised (ll_pas < eps_pas). When the source is
// the primitive-action pseudo-factor the passive conjunct is dropped: actions
// are exogenous, so active confidence alone certifies the edge.
//
// The modifiability gap MG = mean(ll_act) - mean(ll_pas) diagnoses whether a
// source carries any information about a target; the interaction score
// Sc = mean over detected records of (ll_act - ll_pas) drives target
// selection (0 when nothing is detected).

#include "coins/common.hpp"
#include "coins/gaussian.hpp"
#include "coins/log.hpp"
#include "coins/schema.hpp"

#include <optional>
#include <vector>

namespace coins {

struct DetectorThresholds {
  float eps_act = 2.f;
  float eps_pas = 0.f;
};

struct PairModels {
  GaussianModel passive;
  GaussianModel active;
};

inline bool detect(float ll_act, float ll_pas, const DetectorThresholds& thr,
                   bool action_source) {
  if (action_source) return ll_act > thr.eps_act;
  return ll_act > thr.eps_act && ll_pas < thr.eps_pas;
}

bool detect(const Schema& sch, const PairModels& models,
            const DetectorThresholds& thr, const Vec& s_a, const Vec& s_b,
            const Vec& s_b_post);

// Pure score math over per-record log-likelihood arrays (unit-testable
// without models).
float mg_score(const Vec& ll_act, const Vec& ll_pas);
float interaction_score(const Vec& ll_act, const Vec& ll_pas,
                        const DetectorThresholds& thr, bool action_source,
                        int* n_int_out = nullptr);

struct PairScore {
  FactorId source = kActionFactor;
  FactorId target = kBallFactor;
  float mg = 0.f;
  float sc = 0.f;
  float rate = 0.f;  // detected fraction
  int n_int = 0;
  int n = 0;
};
using ScoreTable = std::vector<PairScore>;

// Evaluate both models over the given record indices and score the pair.
PairScore score_pair(const Schema& sch, const PairModels& models,
                     const DetectorThresholds& thr, const PairView& view,
                     const std::vector<std::size_t>& idx);

// Highest interaction score strictly above eps_si; ties resolve to the
// lowest target factor id. Empty when nothing clears the threshold.
std::optional<FactorId> select_target(const ScoreTable& scores, float eps_si);

struct ControlMask {
  std::vector<std::uint8_t> mask;  // 1 = feature controllable via the source
  std::vector<int> midx;           // indices of masked features
  bool discrete = false;
  std::vector<Vec> goals;  // masked dims; lexicographically sorted
  Vec lo, hi;              // masked dims; bounds for continuous goal spaces
  int n_detected = 0;
  Vec mean_dev;  // per-feature mean normalized deviation (diagnostic)

  Vec masked(const Vec& s_full) const {
    Vec out(static_cast<Eigen::Index>(midx.size()));
    for (std::size_t k = 0; k < midx.size(); ++k) out[k] = s_full[midx[k]];
    return out;
  }
  int dim() const { return static_cast<int>(midx.size()); }
};

// Discover the controllability mask over all detected records of the view:
// feature k is controllable when the mean normalized deviation between the
// observed post-state and the passive prediction exceeds eta_eps. The goal
// space over masked features is the set of distinct detected post-values
// when fewer than n_disc survive a small support filter (>= max(2,
// ceil(support_frac * detected))), otherwise the continuous box they span.
ControlMask control_mask(const Schema& sch, const PairModels& models,
                         const DetectorThresholds& thr, const PairView& view,
                         float eta_eps, int n_disc,
                         float support_frac = 0.02f);

}  // namespace coins
