#include "coins/granger.hpp"

#include "coins/common.hpp"

#include <cmath>

namespace coins {

namespace {
// Least squares via column-pivoted QR; returns residual sum of squares and
// flags rank deficiency.
double solve_ols(const MatD& X, const VecD& y, VecD& coef, bool& deficient) {
  Eigen::ColPivHouseholderQR<MatD> qr(X);
  // Eigen's default rank threshold sits below the rounding noise Householder
  // updates leave on exactly collinear columns; use one that actually
  // separates duplicated regressors from independent ones.
  qr.setThreshold(1e-10);
  deficient = qr.rank() < X.cols();
  coef = qr.solve(y);
  const VecD resid = y - X * coef;
  return resid.squaredNorm();
}
}  // namespace

GrangerReport affine_granger_test(const std::vector<double>& a,
                                  const std::vector<double>& b, int w,
                                  double significance) {
  GrangerReport rep;
  if (w < 1) throw CoinsError("granger: window must be >= 1");
  if (a.size() != b.size()) throw CoinsError("granger: length mismatch");
  const int n = static_cast<int>(b.size());
  const int rows = n - w;
  const int pcols = 1 + w;
  const int acols = 1 + 2 * w;
  if (rows <= acols + 1) throw CoinsError("granger: series too short");

  MatD Xp(rows, pcols), Xa(rows, acols);
  VecD y(rows);
  for (int t = 0; t < rows; ++t) {
    y[t] = b[t + w];
    Xp(t, 0) = 1.0;
    Xa(t, 0) = 1.0;
    for (int k = 0; k < w; ++k) {
      Xp(t, 1 + k) = b[t + w - 1 - k];
      Xa(t, 1 + k) = b[t + w - 1 - k];
      Xa(t, 1 + w + k) = a[t + w - 1 - k];
    }
  }

  bool def_p = false, def_a = false;
  VecD cp, ca;
  const double rss_p = solve_ols(Xp, y, cp, def_p);
  const double rss_a = solve_ols(Xa, y, ca, def_a);
  rep.passive_mse = rss_p / rows;
  rep.active_mse = rss_a / rows;
  rep.passive_coef.assign(cp.data(), cp.data() + cp.size());
  rep.active_coef.assign(ca.data(), ca.data() + ca.size());

  const double tiny = 1e-12 * std::max(1.0, y.squaredNorm());
  rep.degenerate = def_p || def_a || rss_a < tiny;
  if (!rep.degenerate) {
    rep.statistic = rows * std::log(std::max(rss_p, rss_a) / rss_a);
    rep.causes = rep.statistic > significance;
  }
  return rep;
}

}  // namespace coins
