/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_DATAGEN_HPP
#define KGP_DATAGEN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "kgp/gappy_gp.hpp"
#include "kgp/kronalg.hpp"

namespace kgp {

/// Values at scattered points, one row per point.
struct ScatteredSnapshot {
  Matrix points;
  Vector values;

  void validate() const;
};

struct Embedding {
  FieldTensor field;  // spatial lattice shape, NaN at gaps
  GappyMask mask;
};

/// Inverse-distance (power 2) interpolation from the `k` nearest sources
/// within `radius` of each lattice node; ties broken by source index. A
/// source closer than 1e-12 is copied exactly. Nodes without a source in
/// range become gaps.
Embedding embed_to_lattice(const ScatteredSnapshot& snap, const std::vector<Vector>& axes, double radius,
                           std::size_t k = 4);

enum class MapKind { affine, polar_annulus };
enum class MapDirection { forward, inverse };

/// Analytic coordinate map to a reference domain.
///   affine:         x -> A x + b
///   polar_annulus:  (x, y) -> ((r - r_in) / (r_out - r_in), theta / (2 pi)), theta in [0, 2 pi),
///                   centered at `center`, so (r_in, 0) maps to (0, 0).
struct AnalyticMap {
  MapKind kind = MapKind::affine;
  Matrix A;
  Vector b;
  double r_in = 1.0;
  double r_out = 2.0;
  Vector center = Vector::Zero(2);

  static AnalyticMap affine(Matrix A, Vector b);
  static AnalyticMap annulus(double r_in, double r_out, Vector center = Vector::Zero(2));

  Matrix forward(const Matrix& points) const;
  Matrix inverse(const Matrix& points) const;
};

ScatteredSnapshot apply_map(const AnalyticMap& map, const ScatteredSnapshot& snap, MapDirection direction);

struct PcaResult {
  Vector mean;                // p
  Matrix basis;               // p x k, orthonormal columns
  Matrix coefficients;        // n x k
  Vector explained_variance;  // k, non-increasing
  Vector singular_values;     // all of them
};

PcaResult pca_reduce(const Matrix& samples, std::size_t k);
Matrix pca_reconstruct(const PcaResult& pca);

/// ||truth - pred|| / ||truth||.
double relative_error(const Vector& truth, const Vector& pred);

/// First n points of the Sobol sequence scaled to the box [lo, hi].
Matrix sobol_points(std::size_t n, const Vector& lo, const Vector& hi);

/// Smooth parametrized field on an annulus sampled at scattered points.
/// The point cloud depends only on the seed, so every parameter shares it.
ScatteredSnapshot annulus_snapshot(const Vector& mu, double r_in, double r_out, std::size_t n_points,
                                   std::uint64_t seed);
double annulus_field(double x, double y, const Vector& mu);

}  // namespace kgp

#endif  // KGP_DATAGEN_HPP
