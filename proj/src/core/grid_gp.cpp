/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/grid_gp.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "kgp/error.hpp"

namespace kgp {

namespace {

void check_targets(const ProductGrid& grid, const FieldTensor& y) {
  if (y.shape != grid.shape())
    throw_dimension("target tensor shape does not match the grid");
  if (!y.values.allFinite()) throw_validation("targets contain non-finite values");
}

void check_test_grid(const FittedModel& model, const ProductGrid& test) {
  if (test.axes.size() != model.grid.axes.size())
    throw_dimension("test grid has " + std::to_string(test.axes.size()) + " axes, model has " +
                    std::to_string(model.grid.axes.size()));
  for (std::size_t i = 0; i < test.axes.size(); ++i)
    if (test.axes[i].dim() != model.grid.axes[i].dim())
      throw_dimension("test axis " + std::to_string(i) + " has " + std::to_string(test.axes[i].dim()) +
                      " columns, model expects " + std::to_string(model.grid.axes[i].dim()));
}

}  // namespace

double nlml_constant(std::size_t n) {
  return 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

NlmlTerms nlml_terms_from_eig(const EigFactors& eig, const FieldTensor& y, double sigma2) {
  FieldTensor alpha = inverse_apply(eig, sigma2, y);
  NlmlTerms t;
  t.quadratic = 0.5 * y.values.dot(alpha.values);
  t.logdet = 0.5 * logdet_from_eigs(eig, sigma2);
  t.constant = nlml_constant(y.size());
  return t;
}

NlmlTerms grid_nlml_terms(const ProductKernelSpec& spec, const ProductGrid& grid,
                          const FieldTensor& y, double sigma2) {
  if (!(sigma2 > 0.0)) throw_validation("noise variance must be positive");
  check_targets(grid, y);
  EigFactors eig = eig_factors(training_covariance(spec, grid), 0.0);
  return nlml_terms_from_eig(eig, y, sigma2);
}

double grid_nlml(const ProductKernelSpec& spec, const ProductGrid& grid, const FieldTensor& y,
                 double sigma2) {
  return grid_nlml_terms(spec, grid, y, sigma2).total();
}

FittedModel fit_from_eig(const ProductKernelSpec& spec, const ProductGrid& grid, KronOperator covariance,
                         EigFactors eig, const FieldTensor& y, double sigma2, double y_offset) {
  check_targets(grid, y);
  FittedModel m;
  m.spec = spec;
  m.grid = grid;
  m.sigma2 = sigma2;
  m.y_offset = y_offset;
  m.covariance = std::move(covariance);
  m.eig = std::move(eig);
  m.y = y;
  m.alpha = inverse_apply(m.eig, sigma2, y);
  if (!m.alpha.values.allFinite()) throw_numerical("representer weights are not finite");
  FieldTensor back = kron_matvec(m.covariance, m.alpha);
  Vector r = back.values + sigma2 * m.alpha.values - y.values;
  const double ynorm = y.values.norm();
  m.residual = ynorm > 0.0 ? r.norm() / ynorm : r.norm();
  if (y.size() <= kResidualCheckSize && m.residual > kResidualTolerance) {
    std::ostringstream os;
    os << "solve residual " << m.residual << " exceeds " << kResidualTolerance;
    throw_numerical(os.str());
  }
  return m;
}

FittedModel fit(const ProductKernelSpec& spec, const ProductGrid& grid, const FieldTensor& y,
                double sigma2, double y_offset) {
  if (!(sigma2 > 0.0)) throw_validation("noise variance must be positive");
  spec.validate();
  grid.validate();
  KronOperator cov = training_covariance(spec, grid);
  EigFactors eig = eig_factors(cov, 0.0);
  return fit_from_eig(spec, grid, std::move(cov), std::move(eig), y, sigma2, y_offset);
}

FieldTensor predict_mean(const FittedModel& model, const ProductGrid& test) {
  check_test_grid(model, test);
  FieldTensor mean = kron_matvec(cross_covariance(model.spec, model.grid, test), model.alpha);
  mean.values.array() += model.y_offset;
  return mean;
}

FieldTensor prior_variance(const ProductKernelSpec& spec, const ProductGrid& test) {
  // Stationary factors: each diagonal is the factor's value at zero distance.
  KronOperator diag;
  for (std::size_t i = 0; i < test.axes.size(); ++i) {
    const auto n = static_cast<Eigen::Index>(test.axes[i].size());
    diag.factors.push_back(Matrix::Identity(n, n) * spec.factors.at(i).base.from_sq_distance(0.0));
  }
  return kron_diag(diag);
}

VariancePrediction predict_var(const FittedModel& model, const ProductGrid& test) {
  check_test_grid(model, test);
  KronOperator cross = cross_covariance(model.spec, model.grid, test);
  FieldTensor weights = model.eig.eigenvalue_tensor();
  weights.values = (weights.values.array() + model.sigma2).inverse();
  FieldTensor explained = row_sq_project(cross, model.eig, weights);
  VariancePrediction out;
  out.variance = prior_variance(model.spec, test);
  out.variance.values -= explained.values;
  out.min_raw_variance = out.variance.values.size() ? out.variance.values.minCoeff() : 0.0;
  for (Eigen::Index i = 0; i < out.variance.values.size(); ++i) {
    if (out.variance.values[i] < 0.0) {
      out.variance.values[i] = 0.0;
      ++out.clamped;
    }
  }
  return out;
}

}  // namespace kgp
