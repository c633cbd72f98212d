/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_TESTS_SUPPORT_HPP
#define KGP_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "kgp/dense_gp.hpp"
#include "kgp/gappy_gp.hpp"
#include "kgp/grid.hpp"
#include "kgp/kernels.hpp"
#include "kgp/kronalg.hpp"

namespace kgp::test {

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n) { return random_matrix(rng, n, 1); }

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n) {
  Matrix a = random_matrix(rng, n, n);
  Matrix s = a * a.transpose() / static_cast<double>(n);
  s.diagonal().array() += 0.5;
  return 0.5 * (s + s.transpose());
}

inline double max_rel(const Vector& a, const Vector& b) {
  double scale = std::max(1e-300, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Uniform sorted points on [lo, hi] with a small random jitter.
inline Matrix axis_points(std::mt19937_64& rng, std::size_t n, std::size_t dim, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) p(i, j) = u(rng);
  return p;
}

/// Random lattice: parameter axis (n_param x param_dim), one entry in
/// `spatial` per spatial axis, optional time axis of n_time points.
inline ProductGrid random_grid(std::mt19937_64& rng, std::size_t n_param, std::size_t param_dim,
                               const std::vector<std::size_t>& spatial, std::size_t n_time) {
  ProductGrid g;
  g.axes.push_back({AxisRole::parameter, axis_points(rng, n_param, param_dim, 0.0, 1.0)});
  for (auto m : spatial) g.axes.push_back({AxisRole::spatial, axis_points(rng, m, 1, 0.0, 2.0)});
  if (n_time) g.axes.push_back({AxisRole::temporal, axis_points(rng, n_time, 1, 0.0, 1.5)});
  g.validate();
  return g;
}

/// Identity maps (or small random networks) with random hyperparameters.
inline ProductKernelSpec random_spec(std::mt19937_64& rng, const ProductGrid& grid, KernelFamily family,
                                     bool networks) {
  std::uniform_real_distribution<double> u(-0.7, 0.3);
  ProductKernelSpec spec;
  for (std::size_t i = 0; i < grid.axes.size(); ++i) {
    FactorKernel f;
    const auto& axis = grid.axes[i];
    if (networks) {
      std::size_t out = axis.role == AxisRole::parameter ? axis.dim() : 2;
      f.map = FeatureMap::network(axis.dim(), {5}, out, Activation::tanh, rng());
      f.map.fit_input_normalization(axis.points);
    } else {
      f.map = FeatureMap::identity(axis.dim());
    }
    f.base.family = family;
    f.base.log_lengthscales = Vector(static_cast<Eigen::Index>(f.map.output_dim()));
    for (Eigen::Index d = 0; d < f.base.log_lengthscales.size(); ++d) f.base.log_lengthscales[d] = u(rng);
    spec.factors.push_back(std::move(f));
  }
  spec.factors[0].base.log_outputscale = u(rng);
  return spec;
}

inline FieldTensor random_targets(std::mt19937_64& rng, const ProductGrid& grid) {
  return FieldTensor(grid.shape(), random_vector(rng, static_cast<Eigen::Index>(grid.size())));
}

/// Random mask with round(fraction * M) gaps, never all gaps.
inline GappyMask random_mask(std::mt19937_64& rng, const std::vector<std::size_t>& spatial_shape,
                             double fraction) {
  const std::size_t m = shape_product(spatial_shape);
  std::size_t ng = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(m)));
  ng = std::min(ng, m - 1);
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint8_t> flags(m, 1);
  for (std::size_t i = 0; i < ng; ++i) flags[order[i]] = 0;
  return GappyMask::from_flags(spatial_shape, flags);
}

inline DenseGP dense_on_grid(const ProductKernelSpec& spec, const ProductGrid& grid, const FieldTensor& y,
                             double sigma2) {
  return DenseGP(grid.lattice_points(), y.values, spec, sigma2);
}

/// Grid with a far-away point on every axis (a single test point).
inline ProductGrid far_point(const ProductGrid& grid, double offset) {
  ProductGrid g = grid;
  for (auto& a : g.axes) a.points = Matrix::Constant(1, a.points.cols(), offset);
  return g;
}

}  // namespace kgp::test

#endif  // KGP_TESTS_SUPPORT_HPP
