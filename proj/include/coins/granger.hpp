#pragma once
// Affine Granger causality test for scalar series.
//
// Fits two least-squares predictors of b_t: a passive one on a bias plus the
// last w values of b, and an active one that adds the last w values of a.
// The test statistic is n * ln(rss_passive / rss_active); the source is
// declared causal when the statistic exceeds the significance threshold.

#include <cstddef>
#include <vector>

namespace coins {

struct GrangerReport {
  double passive_mse = 0.0;
  double active_mse = 0.0;
  double statistic = 0.0;
  bool causes = false;
  // Set when the regression is ill-posed (constant series, perfectly
  // collinear regressors, or a vanishing active residual); `causes` is
  // always false in that case.
  bool degenerate = false;
  std::vector<double> passive_coef;  // [bias, b lags...]
  std::vector<double> active_coef;   // [bias, b lags..., a lags...]
};

GrangerReport affine_granger_test(const std::vector<double>& a,
                                  const std::vector<double>& b, int w = 1,
                                  double significance = 6.0);

}  // namespace coins
