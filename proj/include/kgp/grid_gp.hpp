/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_GRID_GP_HPP
#define KGP_GRID_GP_HPP

#include "kgp/grid.hpp"
#include "kgp/kernels.hpp"
#include "kgp/kronalg.hpp"

namespace kgp {

struct NlmlTerms {
  double quadratic = 0.0;  // 1/2 y^T K_y^{-1} y
  double logdet = 0.0;     // 1/2 log|K_y|
  double constant = 0.0;   // n/2 log(2 pi)

  double total() const { return quadratic + logdet + constant; }
};

double nlml_constant(std::size_t n);

/// NLML on a full lattice. `y` uses the grid's layout.
NlmlTerms grid_nlml_terms(const ProductKernelSpec& spec, const ProductGrid& grid,
                          const FieldTensor& y, double sigma2);
double grid_nlml(const ProductKernelSpec& spec, const ProductGrid& grid, const FieldTensor& y,
                 double sigma2);

/// Same terms from an existing decomposition.
NlmlTerms nlml_terms_from_eig(const EigFactors& eig, const FieldTensor& y, double sigma2);

struct FittedModel {
  ProductKernelSpec spec;
  ProductGrid grid;
  double sigma2 = 0.0;
  /// Added back to every prediction; the GP itself has zero prior mean.
  double y_offset = 0.0;
  KronOperator covariance;  // jittered training factors
  EigFactors eig;
  FieldTensor alpha;
  FieldTensor y;
  /// ||K_y alpha - y|| / ||y||.
  double residual = 0.0;
};

/// Models up to this many lattice points must satisfy the residual bound.
inline constexpr std::size_t kResidualCheckSize = 2000;
inline constexpr double kResidualTolerance = 1e-8;

FittedModel fit(const ProductKernelSpec& spec, const ProductGrid& grid, const FieldTensor& y,
                double sigma2, double y_offset = 0.0);

/// Same as fit() with a precomputed decomposition of `covariance`.
FittedModel fit_from_eig(const ProductKernelSpec& spec, const ProductGrid& grid, KronOperator covariance,
                         EigFactors eig, const FieldTensor& y, double sigma2, double y_offset);

FieldTensor predict_mean(const FittedModel& model, const ProductGrid& test);

struct VariancePrediction {
  FieldTensor variance;
  std::size_t clamped = 0;
  double min_raw_variance = 0.0;
};

VariancePrediction predict_var(const FittedModel& model, const ProductGrid& test);

/// diag(K_**) on a test lattice.
FieldTensor prior_variance(const ProductKernelSpec& spec, const ProductGrid& test);

}  // namespace kgp

#endif  // KGP_GRID_GP_HPP
