#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

namespace rtdap::testing {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int n, int p) {
  std::normal_distribution<double> d(0, 1);
  Eigen::MatrixXd m(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) m(i, j) = d(rng) * (j + 1) + 3.0 * j;
  return m;
}

// Least squares with intercept via normal equations and Gauss-Jordan with
// partial pivoting; deliberately not sharing code with the model.
inline Eigen::VectorXd ols_predictions(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const int n = int(X.rows()), p = int(X.cols()) + 1;
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (int i = 0; i < n; ++i) {
    std::vector<double> row{1.0};
    for (int j = 0; j < X.cols(); ++j) row.push_back(X(i, j));
    for (int r = 0; r < p; ++r) {
      for (int c = 0; c < p; ++c) a[r][c] += row[r] * row[c];
      a[r][p] += row[r] * y(i);
    }
  }
  for (int c = 0; c < p; ++c) {
    int piv = c;
    for (int r = c + 1; r < p; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (int r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (int k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
    }
  }
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    double v = a[0][p] / a[0][0];
    for (int j = 0; j < X.cols(); ++j) v += a[j + 1][p] / a[j + 1][j + 1] * X(i, j);
    out(i) = v;
  }
  return out;
}

}  // namespace rtdap::testing
