#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "infcone/vec.hpp"

namespace infcone::linalg {

using Matrix = Eigen::MatrixXd;

inline Matrix rows_to_matrix(const std::vector<Vec>& rows, std::size_t dim) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) throw DimensionMismatch("rows_to_matrix: ragged rows");
    for (std::size_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

/// Orthonormal basis of {x : R x = 0}, with R given by rows.
inline std::vector<Vec> null_space(const std::vector<Vec>& rows, std::size_t dim, double tol = 1e-9) {
  std::vector<Vec> out;
  if (rows.empty()) {
    for (std::size_t i = 0; i < dim; ++i) out.push_back(unit_axis(dim, i));
    return out;
  }
  const Matrix m = rows_to_matrix(rows, dim);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol * std::max(1.0, smax)) ++rank;
  }
  const Matrix& v = svd.matrixV();
  for (Eigen::Index c = rank; c < v.cols(); ++c) {
    Vec col(dim);
    for (std::size_t j = 0; j < dim; ++j) col[j] = v(static_cast<Eigen::Index>(j), c);
    out.push_back(std::move(col));
  }
  return out;
}

inline std::size_t rank(const std::vector<Vec>& rows, std::size_t dim, double tol = 1e-9) {
  return dim - null_space(rows, dim, tol).size();
}

/// Orthogonal projection of x onto {y : A y = b}; nullopt when inconsistent.
inline std::optional<Vec> project_affine(const std::vector<Vec>& a_rows, const Vec& b, const Vec& x,
                                         double tol = 1e-9) {
  const std::size_t dim = x.size();
  if (a_rows.empty()) return x;
  const Matrix a = rows_to_matrix(a_rows, dim);
  Eigen::VectorXd bv(static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < b.size(); ++i) bv(static_cast<Eigen::Index>(i)) = b[i];
  Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(dim));
  // y = x - A^+ (A x - b)
  const Eigen::VectorXd resid = a * xv - bv;
  const Eigen::VectorXd corr = a.completeOrthogonalDecomposition().solve(resid);
  const Eigen::VectorXd y = xv - corr;
  if ((a * y - bv).norm() > tol * std::max(1.0, bv.norm() + xv.norm())) return std::nullopt;
  return Vec(y.data(), y.data() + y.size());
}

}  // namespace infcone::linalg
