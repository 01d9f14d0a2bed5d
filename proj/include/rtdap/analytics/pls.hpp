#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rtdap/core/error.hpp"

namespace rtdap::analytics {

/// Single-response partial least squares fitted with NIPALS.
///
/// X and y are standardized (sample std, n-1) before extraction; constant
/// feature columns are dropped and ignored at prediction time. Extraction
/// stops early if the response is fully explained before k components.
template <class Scalar = double>
class PlsModel {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Index = Eigen::Index;

  PlsModel() = default;

  static PlsModel fit(const Matrix& X, const Vector& y, Index k) {
    const Index n = X.rows();
    const Index p = X.cols();
    if (y.size() != n) throw Error(Errc::DimensionMismatch, "X and y have different row counts");
    if (n < 2 || p < 1) throw Error(Errc::DegenerateInput, "need at least 2 rows and 1 column");
    if (!X.allFinite() || !y.allFinite()) throw Error(Errc::DegenerateInput, "non-finite input");

    PlsModel m;
    m.features_ = p;
    const Scalar dof = static_cast<Scalar>(n - 1);
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mean = X.colwise().mean();
    for (Index j = 0; j < p; ++j) {
      const Scalar sd = std::sqrt((X.col(j).array() - mean(j)).square().sum() / dof);
      if (sd > 0 && sd > constant_tolerance(mean(j))) {
        m.kept_.push_back(j);
        m.x_std_.conservativeResize(m.x_std_.size() + 1);
        m.x_std_(m.x_std_.size() - 1) = sd;
      }
    }
    const Index pk = static_cast<Index>(m.kept_.size());
    if (pk == 0) throw Error(Errc::DegenerateInput, "every feature column is constant");
    if (k < 1 || k > std::min(n - 1, pk)) throw Error(Errc::DegenerateInput, "component count out of range");

    m.x_mean_.resize(pk);
    Matrix Z(n, pk);
    for (Index j = 0; j < pk; ++j) {
      m.x_mean_(j) = mean(m.kept_[j]);
      Z.col(j) = (X.col(m.kept_[j]).array() - m.x_mean_(j)) / m.x_std_(j);
    }
    m.y_mean_ = y.mean();
    m.y_std_ = std::sqrt((y.array() - m.y_mean_).square().sum() / dof);
    if (!(m.y_std_ > 0 && m.y_std_ > constant_tolerance(m.y_mean_))) throw Error(Errc::DegenerateInput, "response is constant");
    Vector f = (y.array() - m.y_mean_) / m.y_std_;

    m.W_.resize(pk, k);
    m.P_.resize(pk, k);
    m.q_.resize(k);
    m.T_.resize(n, k);
    Index c = 0;
    Scalar first_norm = 0;
    for (; c < k; ++c) {
      Vector w = Z.transpose() * f;
      const Scalar norm = w.norm();
      if (c == 0) first_norm = norm;
      if (!(norm > first_norm * std::numeric_limits<Scalar>::epsilon() * 1e3)) break;
      w /= norm;
      const Vector t = Z * w;
      const Scalar tt = t.squaredNorm();
      const Vector load = Z.transpose() * t / tt;
      const Scalar q = f.dot(t) / tt;
      Z.noalias() -= t * load.transpose();
      f -= q * t;
      m.W_.col(c) = w;
      m.P_.col(c) = load;
      m.q_(c) = q;
      m.T_.col(c) = t;
    }
    if (c == 0) throw Error(Errc::DegenerateInput, "response is orthogonal to every feature");
    m.W_.conservativeResize(pk, c);
    m.P_.conservativeResize(pk, c);
    m.q_.conservativeResize(c);
    m.T_.conservativeResize(n, c);
    m.update_coefficients();
    return m;
  }

  /// Rebuilds a model from stored parts (see model_to_json).
  static PlsModel restore(Index features, std::vector<Index> kept, Vector x_mean, Vector x_std, Scalar y_mean,
                          Scalar y_std, Matrix W, Matrix P, Vector q) {
    const auto pk = static_cast<Index>(kept.size());
    if (features < 1 || pk < 1 || x_mean.size() != pk || x_std.size() != pk || W.rows() != pk || P.rows() != pk ||
        W.cols() != q.size() || P.cols() != q.size() || q.size() < 1)
      throw Error(Errc::DimensionMismatch, "inconsistent model parts");
    for (auto j : kept)
      if (j < 0 || j >= features) throw Error(Errc::DimensionMismatch, "kept column out of range");
    PlsModel m;
    m.features_ = features;
    m.kept_ = std::move(kept);
    m.x_mean_ = std::move(x_mean);
    m.x_std_ = std::move(x_std);
    m.y_mean_ = y_mean;
    m.y_std_ = y_std;
    m.W_ = std::move(W);
    m.P_ = std::move(P);
    m.q_ = std::move(q);
    m.update_coefficients();
    return m;
  }

  Scalar predict(const Vector& x) const {
    if (x.size() != features_) throw Error(Errc::DimensionMismatch, "feature count differs from the model");
    Scalar z = 0;
    for (Index j = 0; j < static_cast<Index>(kept_.size()); ++j) z += (x(kept_[j]) - x_mean_(j)) / x_std_(j) * B_(j);
    return y_mean_ + y_std_ * z;
  }

  Vector predict(const Matrix& X) const {
    if (X.cols() != features_) throw Error(Errc::DimensionMismatch, "feature count differs from the model");
    Vector out(X.rows());
    for (Index i = 0; i < X.rows(); ++i) out(i) = predict(Vector(X.row(i).transpose()));
    return out;
  }

  Index features() const noexcept { return features_; }
  Index components() const noexcept { return q_.size(); }
  const std::vector<Index>& kept_columns() const noexcept { return kept_; }
  const Vector& x_mean() const noexcept { return x_mean_; }
  const Vector& x_std() const noexcept { return x_std_; }
  Scalar y_mean() const noexcept { return y_mean_; }
  Scalar y_std() const noexcept { return y_std_; }
  const Matrix& weights() const noexcept { return W_; }
  const Matrix& loadings() const noexcept { return P_; }
  const Vector& response_loadings() const noexcept { return q_; }
  /// Training scores, one column per component (empty for a restored model).
  const Matrix& scores() const noexcept { return T_; }
  /// Coefficients on the standardized kept features.
  const Vector& standardized_coefficients() const noexcept { return B_; }

 private:
  // Rounding in the mean leaves a constant column with a tiny nonzero spread.
  static Scalar constant_tolerance(Scalar mean) {
    return Scalar(1024) * std::numeric_limits<Scalar>::epsilon() * std::abs(mean);
  }

  void update_coefficients() {
    const Matrix PtW = P_.transpose() * W_;
    B_ = W_ * PtW.partialPivLu().solve(q_);
  }

  Index features_ = 0;
  std::vector<Index> kept_;
  Vector x_mean_, x_std_;
  Scalar y_mean_ = 0, y_std_ = 1;
  Matrix W_, P_, T_;
  Vector q_, B_;
};

}  // namespace rtdap::analytics
