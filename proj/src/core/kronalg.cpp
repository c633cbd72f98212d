/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/kronalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include <lapacke.h>

#include "kgp/error.hpp"

namespace kgp {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Factors up to this size go through Eigen; larger ones through LAPACK's
// divide-and-conquer driver, which is several times faster there.
constexpr Eigen::Index kLapackEigThreshold = 256;

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Vector outer_flatten(const std::vector<Vector>& parts) {
  Vector acc = Vector::Ones(1);
  for (const auto& part : parts) {
    Vector next(acc.size() * part.size());
    for (Eigen::Index i = 0; i < acc.size(); ++i)
      next.segment(i * part.size(), part.size()) = acc[i] * part;
    acc = std::move(next);
  }
  return acc;
}

void check_operand(const std::vector<std::size_t>& expected, const FieldTensor& v, const char* what) {
  if (v.shape.size() != expected.size())
    throw_dimension(std::string(what) + ": tensor rank " + std::to_string(v.shape.size()) +
                    " does not match factor count " + std::to_string(expected.size()));
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (v.shape[i] != expected[i])
      throw_dimension(std::string(what) + ": factor " + std::to_string(i) + " expects size " +
                      std::to_string(expected[i]) + " but tensor axis has " +
                      std::to_string(v.shape[i]));
  }
  if (v.size() != shape_product(v.shape))
    throw_dimension(std::string(what) + ": tensor values do not match shape " + shape_string(v.shape));
}

bool lapack_eig(Matrix& work, Vector& w) {
  const auto n = static_cast<lapack_int>(work.rows());
  return LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, work.data(), n, w.data()) == 0;
}

// Some OpenBLAS builds pick a miscompiled kernel on certain virtual CPUs and
// return wrong eigenvectors above a few hundred rows. Probe once and fall back
// to Eigen when the result does not reconstruct.
bool lapack_eig_trusted() {
  static const bool trusted = [] {
    const Eigen::Index n = 320;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix a(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) a(i, j) = u(rng);
    Matrix s = a * a.transpose() / static_cast<double>(n);
    Matrix work = s;
    Vector w(n);
    if (!lapack_eig(work, w)) return false;
    double err = (work * w.asDiagonal() * work.transpose() - s).norm() / s.norm();
    bool ok = err <= 1e-10;
    if (!ok && !std::getenv("KGP_QUIET"))
      std::fprintf(stderr, "kgp: LAPACK eigensolver failed a self-check, using Eigen instead\n");
    return ok;
  }();
  return trusted;
}

void eig_symmetric(const Matrix& a, std::size_t index, Matrix& vectors, Vector& values) {
  const Eigen::Index n = a.rows();
  if (n <= kLapackEigThreshold || !lapack_eig_trusted()) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
    if (solver.info() != Eigen::Success)
      throw_numerical("eigendecomposition of factor " + std::to_string(index) + " did not converge");
    vectors = solver.eigenvectors().rowwise().reverse();
    values = solver.eigenvalues().reverse();
    return;
  }
  Matrix work = a;
  Vector w(n);
  if (!lapack_eig(work, w))
    throw_numerical("eigendecomposition of factor " + std::to_string(index) + " did not converge");
  vectors = work.rowwise().reverse();
  values = w.reverse();
}

}  // namespace

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

FieldTensor::FieldTensor(std::vector<std::size_t> shape_, Vector values_)
    : shape(std::move(shape_)), values(std::move(values_)) {
  if (static_cast<std::size_t>(values.size()) != shape_product(shape))
    throw_dimension("FieldTensor: " + std::to_string(values.size()) + " values for shape " +
                    shape_string(shape));
}

FieldTensor FieldTensor::zeros(std::vector<std::size_t> shape) {
  return constant(std::move(shape), 0.0);
}

FieldTensor FieldTensor::constant(std::vector<std::size_t> shape, double value) {
  auto n = static_cast<Eigen::Index>(shape_product(shape));
  return FieldTensor(std::move(shape), Vector::Constant(n, value));
}

std::size_t KronOperator::rows() const {
  std::size_t n = 1;
  for (const auto& f : factors) n *= static_cast<std::size_t>(f.rows());
  return n;
}

std::size_t KronOperator::cols() const {
  std::size_t n = 1;
  for (const auto& f : factors) n *= static_cast<std::size_t>(f.cols());
  return n;
}

std::vector<std::size_t> KronOperator::row_shape() const {
  std::vector<std::size_t> s;
  for (const auto& f : factors) s.push_back(static_cast<std::size_t>(f.rows()));
  return s;
}

std::vector<std::size_t> KronOperator::col_shape() const {
  std::vector<std::size_t> s;
  for (const auto& f : factors) s.push_back(static_cast<std::size_t>(f.cols()));
  return s;
}

std::vector<std::size_t> EigFactors::shape() const {
  std::vector<std::size_t> s;
  for (const auto& d : values) s.push_back(static_cast<std::size_t>(d.size()));
  return s;
}

FieldTensor EigFactors::eigenvalue_tensor() const {
  return FieldTensor(shape(), outer_flatten(values));
}

double EigFactors::max_eigenvalue() const {
  double m = 1.0;
  for (const auto& d : values) m *= d.maxCoeff();
  return m;
}

FieldTensor mode_product(const FieldTensor& tensor, std::size_t mode, const Matrix& matrix,
                         bool transpose) {
  if (mode >= tensor.rank())
    throw_dimension("mode_product: mode " + std::to_string(mode) + " out of range for rank " +
                    std::to_string(tensor.rank()));
  const Eigen::Index in_dim = transpose ? matrix.rows() : matrix.cols();
  const Eigen::Index out_dim = transpose ? matrix.cols() : matrix.rows();
  if (static_cast<std::size_t>(in_dim) != tensor.shape[mode])
    throw_dimension("mode_product: factor " + std::to_string(mode) + " has " +
                    std::to_string(in_dim) + " columns but tensor axis has " +
                    std::to_string(tensor.shape[mode]));

  std::size_t pre = 1, post = 1;
  for (std::size_t i = 0; i < mode; ++i) pre *= tensor.shape[i];
  for (std::size_t i = mode + 1; i < tensor.rank(); ++i) post *= tensor.shape[i];

  std::vector<std::size_t> out_shape = tensor.shape;
  out_shape[mode] = static_cast<std::size_t>(out_dim);
  Vector out(static_cast<Eigen::Index>(pre * post) * out_dim);
  const auto p = static_cast<Eigen::Index>(post);

  if (post == 1) {
    // Last axis: a single (pre x n) * (n x m) product.
    Eigen::Map<const RowMatrix> in(tensor.values.data(), static_cast<Eigen::Index>(pre), in_dim);
    Eigen::Map<RowMatrix> res(out.data(), static_cast<Eigen::Index>(pre), out_dim);
    if (transpose)
      res.noalias() = in * matrix;
    else
      res.noalias() = in * matrix.transpose();
  } else {
    for (std::size_t b = 0; b < pre; ++b) {
      Eigen::Map<const RowMatrix> in(tensor.values.data() + b * in_dim * p, in_dim, p);
      Eigen::Map<RowMatrix> res(out.data() + b * out_dim * p, out_dim, p);
      if (transpose)
        res.noalias() = matrix.transpose() * in;
      else
        res.noalias() = matrix * in;
    }
  }
  return FieldTensor(std::move(out_shape), std::move(out));
}

FieldTensor kron_matvec(const KronOperator& op, const FieldTensor& v) {
  check_operand(op.col_shape(), v, "kron_matvec");
  FieldTensor t = v;
  for (std::size_t k = 0; k < op.factors.size(); ++k) t = mode_product(t, k, op.factors[k]);
  return t;
}

FieldTensor kron_matvec_transposed(const KronOperator& op, const FieldTensor& v) {
  check_operand(op.row_shape(), v, "kron_matvec_transposed");
  FieldTensor t = v;
  for (std::size_t k = 0; k < op.factors.size(); ++k) t = mode_product(t, k, op.factors[k], true);
  return t;
}

Matrix kron_dense(const KronOperator& op, std::size_t max_rows) {
  if (op.rows() > max_rows || op.cols() > max_rows)
    throw_validation("kron_dense: refusing to materialize a " + std::to_string(op.rows()) + "x" +
                     std::to_string(op.cols()) + " Kronecker product (limit " +
                     std::to_string(max_rows) + ")");
  Matrix acc = Matrix::Ones(1, 1);
  for (const auto& f : op.factors) {
    Matrix next(acc.rows() * f.rows(), acc.cols() * f.cols());
    for (Eigen::Index i = 0; i < acc.rows(); ++i)
      for (Eigen::Index j = 0; j < acc.cols(); ++j)
        next.block(i * f.rows(), j * f.cols(), f.rows(), f.cols()) = acc(i, j) * f;
    acc = std::move(next);
  }
  return acc;
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  double scale = m.cwiseAbs().maxCoeff();
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

EigFactors eig_factors(const KronOperator& op, const std::vector<double>& jitter) {
  if (jitter.size() != 1 && jitter.size() != op.factors.size())
    throw_dimension("eig_factors: " + std::to_string(jitter.size()) + " jitter values for " +
                    std::to_string(op.factors.size()) + " factors");
  EigFactors eig;
  eig.vectors.resize(op.factors.size());
  eig.values.resize(op.factors.size());
  for (std::size_t i = 0; i < op.factors.size(); ++i) {
    const Matrix& f = op.factors[i];
    double j = jitter.size() == 1 ? jitter[0] : jitter[i];
    if (!(j >= 0.0)) throw_validation("eig_factors: jitter must be non-negative");
    if (f.rows() != f.cols())
      throw_validation("eig_factors: factor " + std::to_string(i) + " is not square");
    if (!f.allFinite())
      throw_numerical("eig_factors: factor " + std::to_string(i) + " has non-finite entries");
    if (!is_symmetric(f))
      throw_validation("eig_factors: factor " + std::to_string(i) + " is not symmetric");
    Matrix a = f;
    a.diagonal().array() += j;
    eig_symmetric(a, i, eig.vectors[i], eig.values[i]);
  }
  return eig;
}

EigFactors eig_factors(const KronOperator& op, double jitter) {
  return eig_factors(op, std::vector<double>{jitter});
}

FieldTensor inverse_apply(const EigFactors& eig, double sigma2, const FieldTensor& v) {
  if (!(sigma2 > 0.0)) throw_validation("inverse_apply: sigma2 must be positive");
  check_operand(eig.shape(), v, "inverse_apply");
  FieldTensor t = v;
  for (std::size_t k = 0; k < eig.factor_count(); ++k)
    t = mode_product(t, k, eig.vectors[k], /*transpose=*/true);
  t.values.array() /= eig.eigenvalue_tensor().values.array() + sigma2;
  for (std::size_t k = 0; k < eig.factor_count(); ++k) t = mode_product(t, k, eig.vectors[k]);
  return t;
}

double logdet_from_eigs(const EigFactors& eig, double sigma2) {
  if (!(sigma2 > 0.0)) throw_validation("logdet_from_eigs: sigma2 must be positive");
  Vector shifted = eig.eigenvalue_tensor().values.array() + sigma2;
  double lo = shifted.minCoeff();
  if (!(lo > 0.0)) {
    std::ostringstream os;
    os << "logdet_from_eigs: non-positive eigenvalue " << (lo - sigma2) << " + sigma2";
    throw_numerical(os.str());
  }
  return shifted.array().log().sum();
}

FieldTensor kron_diag(const KronOperator& op) {
  std::vector<Vector> diags;
  for (std::size_t i = 0; i < op.factors.size(); ++i) {
    const Matrix& f = op.factors[i];
    if (f.rows() != f.cols())
      throw_validation("kron_diag: factor " + std::to_string(i) + " is not square");
    diags.push_back(f.diagonal());
  }
  return FieldTensor(op.row_shape(), outer_flatten(diags));
}

FieldTensor row_sq_project(const KronOperator& cross, const EigFactors& eig,
                           const FieldTensor& weights) {
  if (cross.factors.size() != eig.factor_count())
    throw_dimension("row_sq_project: " + std::to_string(cross.factors.size()) +
                    " cross factors for " + std::to_string(eig.factor_count()) + " eigen factors");
  KronOperator squared;
  for (std::size_t i = 0; i < cross.factors.size(); ++i) {
    if (cross.factors[i].cols() != eig.vectors[i].rows())
      throw_dimension("row_sq_project: cross factor " + std::to_string(i) +
                      " is not conformable with its eigenvectors");
    Matrix cu = cross.factors[i] * eig.vectors[i];
    squared.factors.push_back(cu.cwiseAbs2());
  }
  return kron_matvec(squared, weights);
}

FieldTensor row_sq_project(const KronOperator& cross, const FieldTensor& mask) {
  KronOperator squared;
  for (const auto& f : cross.factors) squared.factors.push_back(f.cwiseAbs2());
  return kron_matvec(squared, mask);
}

}  // namespace kgp
