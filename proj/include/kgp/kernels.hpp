/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_KERNELS_HPP
#define KGP_KERNELS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "kgp/grid.hpp"
#include "kgp/kronalg.hpp"

namespace kgp {

enum class KernelFamily { squared_exponential, matern52 };
enum class Activation { relu, tanh, identity };

std::string to_string(KernelFamily family);
std::string to_string(Activation activation);
KernelFamily kernel_family_from_string(const std::string& name);
Activation activation_from_string(const std::string& name);

/// Stationary kernel on a latent space. Positive quantities are stored as
/// logs so that the optimizer works on an unconstrained vector.
///
///   SE:        s * exp(-r^2)
///   Matern52:  s * (1 + sqrt(5) r + 5 r^2 / 3) * exp(-sqrt(5) r)
///
/// with r^2 = sum_i ((u_i - v_i) / l_i)^2. The SE form has no factor 1/2 in
/// the exponent.
struct BaseKernel {
  KernelFamily family = KernelFamily::squared_exponential;
  Vector log_lengthscales = Vector::Zero(1);
  double log_outputscale = 0.0;

  std::size_t dim() const { return static_cast<std::size_t>(log_lengthscales.size()); }
  double outputscale() const;
  /// Kernel value from the squared scaled distance r^2.
  double from_sq_distance(double r2) const;
};

/// Small fully connected network applied to one axis before the base kernel.
/// An empty layer list is the identity map. Hidden layers are followed by
/// the activation; the output layer is affine. When `input_shift` is set the
/// inputs are first mapped to (x - shift) * scale.
struct FeatureMap {
  std::size_t input_dim = 1;
  std::vector<Matrix> weights;  // layer l: out_l x in_l
  std::vector<Vector> biases;
  Activation activation = Activation::relu;
  Vector input_shift;
  Vector input_scale;

  static FeatureMap identity(std::size_t dim);
  /// Glorot-uniform weights, zero biases; deterministic in `seed`.
  static FeatureMap network(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                            std::size_t output_dim, Activation activation, std::uint64_t seed);

  bool is_identity() const { return weights.empty(); }
  std::size_t output_dim() const;
  std::vector<std::size_t> layer_sizes() const;
  std::size_t parameter_count() const;
  void get_parameters(double* out) const;
  void set_parameters(const double* in);

  /// Min-max normalization of inputs to [-1, 1] from training coordinates.
  void fit_input_normalization(const Matrix& points);

  Matrix forward(const Matrix& points) const;
};

struct FactorKernel {
  FeatureMap map;
  BaseKernel base;

  void validate() const;
  Matrix latent(const Matrix& points) const { return map.forward(points); }
  Matrix gram(const Matrix& a, const Matrix& b) const;
  /// Gram matrix from points already pushed through the feature map.
  Matrix gram_latent(const Matrix& la, const Matrix& lb) const;
};

/// Deep product kernel: one factor per grid axis, in grid order. Only the
/// first (parameter) factor carries a free outputscale.
struct ProductKernelSpec {
  std::vector<FactorKernel> factors;
  /// Diagonal jitter added to each training factor, relative to its
  /// outputscale (the mean diagonal of a stationary Gram matrix).
  double relative_jitter = 1e-8;

  void validate() const;
  double outputscale() const { return factors.front().base.outputscale(); }
  std::vector<double> factor_jitter() const;
  /// Kernel between two stacked inputs z = [axis_0 coords, axis_1 coords, ...].
  double evaluate(const Eigen::Ref<const Vector>& z1, const Eigen::Ref<const Vector>& z2) const;
  /// Same, plus the per-factor jitter on factors whose coordinates coincide.
  /// This is the pointwise form of the jittered training covariance.
  double evaluate_training(const Eigen::Ref<const Vector>& z1, const Eigen::Ref<const Vector>& z2) const;
};

/// Unjittered covariance factors on the grid.
KronOperator product_covariance(const ProductKernelSpec& spec, const ProductGrid& grid);
/// Gram matrix of axis `k` with the kernel's jitter on the diagonal.
Matrix training_factor(const ProductKernelSpec& spec, const ProductGrid& grid, std::size_t k);
/// Factors with the kernel's jitter added to each diagonal.
KronOperator training_covariance(const ProductKernelSpec& spec, const ProductGrid& grid);
/// Rectangular factors K(test_axis, train_axis).
KronOperator cross_covariance(const ProductKernelSpec& spec, const ProductGrid& train,
                              const ProductGrid& test);

/// Identity maps with the given base family and unit lengthscales.
ProductKernelSpec stationary_spec(const ProductGrid& grid, KernelFamily family);

struct DeepKernelLayout {
  std::vector<std::size_t> hidden{16, 16};
  Activation activation = Activation::relu;
  /// Latent size of non-parameter axes; the parameter axis keeps its input
  /// dimension.
  std::size_t axis_latent_dim = 2;
};

/// Feature networks on every axis, inputs normalized over the grid.
ProductKernelSpec deep_spec(const ProductGrid& grid, KernelFamily family,
                            const DeepKernelLayout& layout, std::uint64_t seed);

}  // namespace kgp

#endif  // KGP_KERNELS_HPP
