/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_GRID_HPP
#define KGP_GRID_HPP

#include <string>
#include <vector>

#include "kgp/kronalg.hpp"

namespace kgp {

enum class AxisRole { parameter, spatial, temporal };

std::string to_string(AxisRole role);
AxisRole axis_role_from_string(const std::string& name);

/// One factor of the lattice. Rows of `points` are the distinct coordinates
/// along this axis (a parameter axis may carry several columns).
struct GridAxis {
  AxisRole role = AxisRole::spatial;
  Matrix points;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }
};

/// Cartesian product lattice in the fixed order (parameter, spatial..., temporal).
struct ProductGrid {
  std::vector<GridAxis> axes;

  /// Throws ValidationError unless there is exactly one parameter axis first,
  /// at least one spatial axis, at most one temporal axis last and every
  /// axis has unique rows.
  void validate() const;

  std::size_t axis_count() const { return axes.size(); }
  std::vector<std::size_t> shape() const;
  std::size_t size() const { return shape_product(shape()); }
  std::size_t parameter_count() const;
  /// Product of spatial axis sizes.
  std::size_t spatial_size() const;
  std::vector<std::size_t> spatial_shape() const;
  /// Temporal axis size, 1 when the grid has no time axis.
  std::size_t time_count() const;
  bool has_time() const;
  /// Total input dimension: sum of axis column counts.
  std::size_t input_dim() const;

  /// Enumerates every lattice point in layout order as one row each.
  Matrix lattice_points() const;
};

ProductGrid make_grid(Matrix parameters, std::vector<Vector> spatial, const Vector* times = nullptr);

}  // namespace kgp

#endif  // KGP_GRID_HPP
