/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_KRONALG_HPP
#define KGP_KRONALG_HPP

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace kgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense tensor stored row-major: the last axis varies fastest. Every
/// vectorization in kgp uses the axis order (parameter, x_1, ..., x_d, time),
/// which is the same order as the factors of a KronOperator, so that
/// vec(T) = values and (A_0 (x) A_1 (x) ...) vec(T) is a sequence of mode
/// products.
struct FieldTensor {
  std::vector<std::size_t> shape;
  Vector values;

  FieldTensor() = default;
  FieldTensor(std::vector<std::size_t> shape_, Vector values_);

  static FieldTensor zeros(std::vector<std::size_t> shape);
  static FieldTensor constant(std::vector<std::size_t> shape, double value);

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  std::size_t rank() const { return shape.size(); }
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

/// Ordered Kronecker product A_0 (x) A_1 (x) ... (x) A_{k-1}. Never densified
/// above kMaxDenseRows unless explicitly requested.
struct KronOperator {
  std::vector<Matrix> factors;

  std::size_t rows() const;
  std::size_t cols() const;
  std::vector<std::size_t> row_shape() const;
  std::vector<std::size_t> col_shape() const;
};

inline constexpr std::size_t kMaxDenseRows = 4096;

/// Per-factor symmetric eigendecompositions, eigenvalues in descending order.
struct EigFactors {
  std::vector<Matrix> vectors;
  std::vector<Vector> values;

  std::size_t factor_count() const { return vectors.size(); }
  std::vector<std::size_t> shape() const;
  /// Outer product of the per-factor eigenvalues in the fixed layout.
  FieldTensor eigenvalue_tensor() const;
  /// Largest eigenvalue of the Kronecker composition.
  double max_eigenvalue() const;
};

/// Mode-k product: contracts axis `mode` of `tensor` with the columns of
/// `matrix` (or its rows when `transpose` is set).
FieldTensor mode_product(const FieldTensor& tensor, std::size_t mode, const Matrix& matrix,
                         bool transpose = false);

FieldTensor kron_matvec(const KronOperator& op, const FieldTensor& v);
FieldTensor kron_matvec_transposed(const KronOperator& op, const FieldTensor& v);

/// Dense materialization, refused above max_rows.
Matrix kron_dense(const KronOperator& op, std::size_t max_rows = kMaxDenseRows);

/// Eigendecomposition of every factor after adding jitter[i] to the diagonal
/// of factor i. A single value is broadcast to all factors.
EigFactors eig_factors(const KronOperator& op, const std::vector<double>& jitter);
EigFactors eig_factors(const KronOperator& op, double jitter = 0.0);

/// (K + sigma2 I)^{-1} v with K the operator diagonalized by `eig`.
FieldTensor inverse_apply(const EigFactors& eig, double sigma2, const FieldTensor& v);

/// log|K + sigma2 I| as a sum of logs over the eigenvalue tensor.
double logdet_from_eigs(const EigFactors& eig, double sigma2);

FieldTensor kron_diag(const KronOperator& op);

/// diag(C U diag(w) U^T C^T) = ((C U) .* (C U)) w for C = cross (x) factors,
/// U the eigenvector composition and w a weight tensor over the eigenbasis.
FieldTensor row_sq_project(const KronOperator& cross, const EigFactors& eig,
                           const FieldTensor& weights);

/// diag(C P C^T) = (C .* C) p for a diagonal weighting p over the training
/// lattice (a 0/1 regular-point indicator in the gappy case).
FieldTensor row_sq_project(const KronOperator& cross, const FieldTensor& mask);

/// Symmetry check with tolerance relative to the largest entry.
bool is_symmetric(const Matrix& m, double rel_tol = 1e-12);

}  // namespace kgp

#endif  // KGP_KRONALG_HPP
