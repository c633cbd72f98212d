/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/grid.hpp"

#include "kgp/error.hpp"

namespace kgp {

std::string to_string(AxisRole role) {
  switch (role) {
    case AxisRole::parameter: return "parameter";
    case AxisRole::spatial: return "spatial";
    case AxisRole::temporal: return "temporal";
  }
  return "spatial";
}

AxisRole axis_role_from_string(const std::string& name) {
  if (name == "parameter") return AxisRole::parameter;
  if (name == "spatial") return AxisRole::spatial;
  if (name == "temporal") return AxisRole::temporal;
  throw_validation("unknown axis role '" + name + "'");
}

void ProductGrid::validate() const {
  if (axes.size() < 2) throw_validation("grid needs a parameter axis and at least one spatial axis");
  std::size_t params = 0, spatial = 0, temporal = 0;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const auto& a = axes[i];
    if (a.points.rows() == 0 || a.points.cols() == 0)
      throw_validation("grid axis " + std::to_string(i) + " is empty");
    if (!a.points.allFinite()) throw_validation("grid axis " + std::to_string(i) + " has non-finite points");
    switch (a.role) {
      case AxisRole::parameter:
        if (i != 0) throw_validation("the parameter axis must come first");
        ++params;
        break;
      case AxisRole::spatial:
        if (temporal) throw_validation("spatial axes must precede the temporal axis");
        ++spatial;
        break;
      case AxisRole::temporal:
        if (i + 1 != axes.size()) throw_validation("the temporal axis must come last");
        ++temporal;
        break;
    }
    for (Eigen::Index r = 0; r < a.points.rows(); ++r)
      for (Eigen::Index s = r + 1; s < a.points.rows(); ++s)
        if (a.points.row(r) == a.points.row(s))
          throw_validation("grid axis " + std::to_string(i) + " has duplicate point rows " +
                           std::to_string(r) + " and " + std::to_string(s));
  }
  if (params != 1) throw_validation("grid needs exactly one parameter axis");
  if (spatial < 1) throw_validation("grid needs at least one spatial axis");
  if (temporal > 1) throw_validation("grid allows at most one temporal axis");
}

std::vector<std::size_t> ProductGrid::shape() const {
  std::vector<std::size_t> s;
  for (const auto& a : axes) s.push_back(a.size());
  return s;
}

std::size_t ProductGrid::parameter_count() const { return axes.empty() ? 0 : axes.front().size(); }

std::size_t ProductGrid::spatial_size() const {
  std::size_t m = 1;
  for (const auto& a : axes)
    if (a.role == AxisRole::spatial) m *= a.size();
  return m;
}

std::vector<std::size_t> ProductGrid::spatial_shape() const {
  std::vector<std::size_t> s;
  for (const auto& a : axes)
    if (a.role == AxisRole::spatial) s.push_back(a.size());
  return s;
}

bool ProductGrid::has_time() const { return !axes.empty() && axes.back().role == AxisRole::temporal; }

std::size_t ProductGrid::time_count() const { return has_time() ? axes.back().size() : 1; }

std::size_t ProductGrid::input_dim() const {
  std::size_t q = 0;
  for (const auto& a : axes) q += a.dim();
  return q;
}

Matrix ProductGrid::lattice_points() const {
  const auto n = static_cast<Eigen::Index>(size());
  Matrix z(n, static_cast<Eigen::Index>(input_dim()));
  std::vector<std::size_t> idx(axes.size(), 0);
  for (Eigen::Index row = 0; row < n; ++row) {
    Eigen::Index col = 0;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const auto d = static_cast<Eigen::Index>(axes[a].dim());
      z.row(row).segment(col, d) = axes[a].points.row(static_cast<Eigen::Index>(idx[a]));
      col += d;
    }
    for (std::size_t a = axes.size(); a-- > 0;) {
      if (++idx[a] < axes[a].size()) break;
      idx[a] = 0;
    }
  }
  return z;
}

ProductGrid make_grid(Matrix parameters, std::vector<Vector> spatial, const Vector* times) {
  ProductGrid g;
  g.axes.push_back({AxisRole::parameter, std::move(parameters)});
  for (auto& s : spatial) g.axes.push_back({AxisRole::spatial, Matrix(s)});
  if (times) g.axes.push_back({AxisRole::temporal, Matrix(*times)});
  return g;
}

}  // namespace kgp
