#pragma once
// Factored state schema: named factors with per-feature ranges, plus the
// normalization maps used at every model input boundary.
//
// Factor ids are stable integers: 0 = paddle, 1 = ball, 2+i = block_i.
// The primitive-action pseudo-factor has the reserved id -1 and is encoded
// one-hot when used as a model input.

#include "coins/common.hpp"

#include <string>
#include <vector>

namespace coins {

using FactorId = int;
constexpr FactorId kActionFactor = -1;
constexpr FactorId kPaddleFactor = 0;
constexpr FactorId kBallFactor = 1;
constexpr int kNumBlocks = 100;
constexpr int kNumActions = 3;

inline FactorId block_factor(int i) { return 2 + i; }
inline bool is_block(FactorId f) { return f >= 2; }
inline int block_index(FactorId f) { return f - 2; }

struct FeatureRange {
  float lo = 0.f;
  float hi = 1.f;
};

struct FactorSpec {
  std::string name;
  std::vector<FeatureRange> features;  // one range per feature
  int dim() const { return static_cast<int>(features.size()); }
};

// Fixed schema for the Breakout family: paddle/ball are
// [pos_y, pos_x, vel_y, vel_x]; blocks are [pos_y, pos_x, alive].
class Schema {
 public:
  Schema();

  const FactorSpec& factor(FactorId f) const;
  int dim(FactorId f) const { return factor(f).dim(); }
  int num_factors() const { return static_cast<int>(factors_.size()); }
  std::string name(FactorId f) const;
  // Inverse of name(); throws ConfigError on unknown names.
  FactorId id(const std::string& name) const;

  // x_norm = 2 (x - lo) / (hi - lo) - 1, featurewise.
  float normalize(FactorId f, int k, float raw) const;
  float denormalize(FactorId f, int k, float norm) const;
  Vec normalize(FactorId f, const Vec& raw) const;
  // Scale of one raw unit in normalized space: 2 / (hi - lo).
  float norm_scale(FactorId f, int k) const;

  // One-hot encoding for the action pseudo-factor.
  static Vec encode_action(int a);

  // True when features 0..1 of the factor are grid positions (paddle, ball,
  // blocks); used for proximity balancing and relative input features.
  static bool has_position(FactorId f) { return f != kActionFactor; }

 private:
  std::vector<FactorSpec> factors_;  // index = factor id
  FactorSpec action_;
};

}  // namespace coins
