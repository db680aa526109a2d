#include "coins/schema.hpp"

namespace coins {

namespace {
FactorSpec make_mover(const std::string& name) {
  FactorSpec s;
  s.name = name;
  s.features = {{0.f, 84.f}, {0.f, 84.f}, {-2.f, 2.f}, {-2.f, 2.f}};
  return s;
}
FactorSpec make_block(int i) {
  FactorSpec s;
  s.name = "block_" + std::to_string(i);
  s.features = {{0.f, 84.f}, {0.f, 84.f}, {0.f, 1.f}};
  return s;
}
}  // namespace

Schema::Schema() {
  factors_.reserve(2 + kNumBlocks);
  factors_.push_back(make_mover("paddle"));
  factors_.push_back(make_mover("ball"));
  for (int i = 0; i < kNumBlocks; ++i) factors_.push_back(make_block(i));
  action_.name = "action";
  action_.features = {{0.f, 1.f}, {0.f, 1.f}, {0.f, 1.f}};
}

const FactorSpec& Schema::factor(FactorId f) const {
  if (f == kActionFactor) return action_;
  if (f < 0 || f >= static_cast<FactorId>(factors_.size()))
    throw CoinsError("unknown factor id " + std::to_string(f));
  return factors_[f];
}

std::string Schema::name(FactorId f) const { return factor(f).name; }

FactorId Schema::id(const std::string& name) const {
  if (name == "action") return kActionFactor;
  for (std::size_t i = 0; i < factors_.size(); ++i)
    if (factors_[i].name == name) return static_cast<FactorId>(i);
  throw ConfigError("unknown factor name '" + name + "'");
}

float Schema::normalize(FactorId f, int k, float raw) const {
  const FeatureRange& r = factor(f).features.at(k);
  return 2.f * (raw - r.lo) / (r.hi - r.lo) - 1.f;
}

float Schema::denormalize(FactorId f, int k, float norm) const {
  const FeatureRange& r = factor(f).features.at(k);
  return (norm + 1.f) * 0.5f * (r.hi - r.lo) + r.lo;
}

Vec Schema::normalize(FactorId f, const Vec& raw) const {
  Vec out(raw.size());
  for (int k = 0; k < raw.size(); ++k) out[k] = normalize(f, k, raw[k]);
  return out;
}

float Schema::norm_scale(FactorId f, int k) const {
  const FeatureRange& r = factor(f).features.at(k);
  return 2.f / (r.hi - r.lo);
}

Vec Schema::encode_action(int a) {
  if (a < 0 || a >= kNumActions) throw CoinsError("action out of range");
  Vec v = Vec::Zero(kNumActions);
  v[a] = 1.f;
  return v;
}

}  // namespace coins
