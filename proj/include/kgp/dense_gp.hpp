/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_DENSE_GP_HPP
#define KGP_DENSE_GP_HPP

#include "kgp/kernels.hpp"
#include "kgp/params.hpp"

namespace kgp {

inline constexpr std::size_t kDenseCap = 2000;

/// Reference GP over an explicit point set with a Cholesky factorization.
/// Rows of `inputs` are stacked axis coordinates in grid order. The product
/// kernel is evaluated pointwise, including the per-factor jitter wherever
/// factor coordinates coincide, so that on a lattice it reproduces the
/// structured training covariance exactly.
struct DenseGP {
  Matrix inputs;
  Vector targets;
  ProductKernelSpec spec;
  double sigma2 = 0.0;

  DenseGP(Matrix inputs_, Vector targets_, ProductKernelSpec spec_, double sigma2_,
          std::size_t cap = kDenseCap);

  /// Jittered K_Z, without noise.
  Matrix training_covariance() const;
  /// K(test, inputs), unjittered.
  Matrix cross_covariance(const Matrix& test) const;
};

/// Covariance between two point sets; `training` adds jitter on coinciding
/// factor coordinates.
Matrix dense_kernel_matrix(const ProductKernelSpec& spec, const Matrix& a, const Matrix& b,
                           bool training);

/// 1/2 y^T K_y^{-1} y + 1/2 log|K_y| + n/2 log(2 pi).
double dense_nlml(const DenseGP& gp);

/// K_y^{-1} y.
Vector dense_alpha(const DenseGP& gp);

struct DensePrediction {
  Vector mean;
  Vector variance;
  std::size_t clamped = 0;
  double min_raw_variance = 0.0;
};

DensePrediction dense_predict(const DenseGP& gp, const Matrix& test);

/// Central-difference NLML gradient at the packed parameter vector `theta`
/// (see ParamSchema::for_spec).
Vector dense_nlml_grad_fd(const DenseGP& gp, const Vector& theta, double step = 1e-5);

}  // namespace kgp

#endif  // KGP_DENSE_GP_HPP
