/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/dense_gp.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "kgp/error.hpp"

namespace kgp {

namespace {

struct FactorView {
  Matrix raw;     // coordinates of this factor, one row per point
  Matrix scaled;  // latent features divided by lengthscales
};

std::vector<FactorView> factor_views(const ProductKernelSpec& spec, const Matrix& points) {
  std::vector<FactorView> views;
  Eigen::Index col = 0;
  for (const auto& f : spec.factors) {
    const auto d = static_cast<Eigen::Index>(f.map.input_dim);
    if (col + d > points.cols()) throw_dimension("dense GP inputs have too few columns for the kernel");
    FactorView v;
    v.raw = points.middleCols(col, d);
    const Vector inv_l = (-f.base.log_lengthscales).array().exp();
    v.scaled = f.latent(v.raw) * inv_l.asDiagonal();
    views.push_back(std::move(v));
    col += d;
  }
  if (col != points.cols()) throw_dimension("dense GP inputs have too many columns for the kernel");
  return views;
}

Eigen::LLT<Matrix> factorize(const Matrix& ky) {
  Eigen::LLT<Matrix> llt(ky);
  if (llt.info() != Eigen::Success) {
    Eigen::LDLT<Matrix> ldlt(ky);
    std::ostringstream os;
    os << "Cholesky factorization failed; smallest pivot " << ldlt.vectorD().minCoeff();
    throw_numerical(os.str());
  }
  return llt;
}

Matrix noisy_covariance(const DenseGP& gp) {
  Matrix ky = gp.training_covariance();
  ky.diagonal().array() += gp.sigma2;
  return ky;
}

}  // namespace

Matrix dense_kernel_matrix(const ProductKernelSpec& spec, const Matrix& a, const Matrix& b,
                           bool training) {
  auto va = factor_views(spec, a);
  auto vb = factor_views(spec, b);
  Matrix k = Matrix::Ones(a.rows(), b.rows());
  for (std::size_t f = 0; f < spec.factors.size(); ++f) {
    const auto& base = spec.factors[f].base;
    const double jitter = spec.relative_jitter * base.outputscale();
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      for (Eigen::Index i = 0; i < a.rows(); ++i) {
        double kf = base.from_sq_distance((va[f].scaled.row(i) - vb[f].scaled.row(j)).squaredNorm());
        if (training && va[f].raw.row(i) == vb[f].raw.row(j)) kf += jitter;
        k(i, j) *= kf;
      }
    }
  }
  return k;
}

DenseGP::DenseGP(Matrix inputs_, Vector targets_, ProductKernelSpec spec_, double sigma2_,
                 std::size_t cap)
    : inputs(std::move(inputs_)), targets(std::move(targets_)), spec(std::move(spec_)), sigma2(sigma2_) {
  if (static_cast<std::size_t>(inputs.rows()) > cap)
    throw_validation("dense oracle refuses " + std::to_string(inputs.rows()) + " points (cap " +
                     std::to_string(cap) + ")");
  if (inputs.rows() != targets.size())
    throw_dimension("dense GP has " + std::to_string(inputs.rows()) + " inputs but " +
                    std::to_string(targets.size()) + " targets");
  if (!(sigma2 >= 0.0)) throw_validation("noise variance must be non-negative");
  spec.validate();
}

Matrix DenseGP::training_covariance() const { return dense_kernel_matrix(spec, inputs, inputs, true); }

Matrix DenseGP::cross_covariance(const Matrix& test) const {
  return dense_kernel_matrix(spec, test, inputs, false);
}

double dense_nlml(const DenseGP& gp) {
  auto llt = factorize(noisy_covariance(gp));
  Vector w = llt.matrixL().solve(gp.targets);
  double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double n = static_cast<double>(gp.targets.size());
  return 0.5 * w.squaredNorm() + 0.5 * logdet + 0.5 * n * std::log(2.0 * std::numbers::pi);
}

Vector dense_alpha(const DenseGP& gp) { return factorize(noisy_covariance(gp)).solve(gp.targets); }

DensePrediction dense_predict(const DenseGP& gp, const Matrix& test) {
  auto llt = factorize(noisy_covariance(gp));
  Vector alpha = llt.solve(gp.targets);
  Matrix ks = gp.cross_covariance(test);
  DensePrediction out;
  out.mean = ks * alpha;
  Matrix v = llt.matrixL().solve(ks.transpose());
  Vector prior(test.rows());
  for (Eigen::Index i = 0; i < test.rows(); ++i) prior[i] = gp.spec.evaluate(test.row(i).transpose(), test.row(i).transpose());
  out.variance = prior - v.colwise().squaredNorm().transpose();
  out.min_raw_variance = out.variance.size() ? out.variance.minCoeff() : 0.0;
  for (Eigen::Index i = 0; i < out.variance.size(); ++i) {
    if (out.variance[i] < 0.0) {
      out.variance[i] = 0.0;
      ++out.clamped;
    }
  }
  return out;
}

Vector dense_nlml_grad_fd(const DenseGP& gp, const Vector& theta, double step) {
  const auto schema = ParamSchema::for_spec(gp.spec);
  auto objective = [&](const Vector& t) {
    DenseGP probe = gp;
    unpack(schema, t, probe.spec, probe.sigma2);
    return dense_nlml(probe);
  };
  return grad_fd(objective, theta, step, nullptr, [&](std::size_t i) { return schema.label(i); });
}

}  // namespace kgp
