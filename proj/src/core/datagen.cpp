/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/random/sobol.hpp>

#include "kgp/error.hpp"

namespace kgp {

void ScatteredSnapshot::validate() const {
  if (points.rows() != values.size()) throw_dimension("snapshot has mismatched points and values");
  if (!points.allFinite() || !values.allFinite()) throw_validation("snapshot contains non-finite entries");
}

Embedding embed_to_lattice(const ScatteredSnapshot& snap, const std::vector<Vector>& axes, double radius,
                           std::size_t k) {
  snap.validate();
  if (axes.empty()) throw_validation("embedding needs at least one lattice axis");
  if (static_cast<std::size_t>(snap.points.cols()) != axes.size())
    throw_dimension("snapshot dimension does not match the lattice");
  if (!(radius > 0.0) || k == 0) throw_validation("embedding radius and k must be positive");
  for (std::size_t a = 0; a < axes.size(); ++a) {
    if (axes[a].size() == 0) throw_validation("empty lattice axis");
    const double lo = axes[a].minCoeff(), hi = axes[a].maxCoeff();
    const double slack = 1e-9 * std::max(1.0, hi - lo);
    const auto col = snap.points.col(static_cast<Eigen::Index>(a));
    if (col.size() && (col.minCoeff() < lo - slack || col.maxCoeff() > hi + slack))
      throw_validation("lattice does not cover the snapshot along axis " + std::to_string(a));
  }

  std::vector<std::size_t> shape;
  for (const auto& ax : axes) shape.push_back(static_cast<std::size_t>(ax.size()));
  const std::size_t total = shape_product(shape);
  Vector values(static_cast<Eigen::Index>(total));
  std::vector<std::uint8_t> flags(total, 0);
  std::vector<std::size_t> idx(axes.size(), 0);
  Vector node(static_cast<Eigen::Index>(axes.size()));
  std::vector<std::pair<double, Eigen::Index>> near;
  const double r2max = radius * radius;

  for (std::size_t s = 0; s < total; ++s) {
    for (std::size_t a = 0; a < axes.size(); ++a) node[static_cast<Eigen::Index>(a)] = axes[a][static_cast<Eigen::Index>(idx[a])];
    near.clear();
    for (Eigen::Index p = 0; p < snap.points.rows(); ++p) {
      double d2 = (snap.points.row(p).transpose() - node).squaredNorm();
      if (d2 <= r2max) near.emplace_back(d2, p);
    }
    if (near.empty()) {
      values[static_cast<Eigen::Index>(s)] = std::numeric_limits<double>::quiet_NaN();
    } else {
      std::size_t take = std::min(k, near.size());
      std::partial_sort(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(take), near.end());
      flags[s] = 1;
      if (near[0].first <= 1e-24) {
        values[static_cast<Eigen::Index>(s)] = snap.values[near[0].second];
      } else {
        double wsum = 0.0, vsum = 0.0;
        for (std::size_t i = 0; i < take; ++i) {
          double w = 1.0 / near[i].first;  // 1 / d^2
          wsum += w;
          vsum += w * snap.values[near[i].second];
        }
        values[static_cast<Eigen::Index>(s)] = vsum / wsum;
      }
    }
    for (std::size_t a = axes.size(); a-- > 0;) {
      if (++idx[a] < shape[a]) break;
      idx[a] = 0;
    }
  }
  if (std::none_of(flags.begin(), flags.end(), [](std::uint8_t f) { return f != 0; }))
    throw_validation("embedding produced no regular lattice points");
  Embedding e;
  e.field = FieldTensor(shape, std::move(values));
  e.mask = GappyMask::from_flags(shape, flags);
  return e;
}

AnalyticMap AnalyticMap::affine(Matrix A, Vector b) {
  if (A.rows() != A.cols() || A.rows() != b.size()) throw_dimension("affine map needs square A and matching b");
  Eigen::FullPivLU<Matrix> lu(A);
  if (!lu.isInvertible()) throw_validation("affine map matrix is singular");
  AnalyticMap m;
  m.kind = MapKind::affine;
  m.A = std::move(A);
  m.b = std::move(b);
  return m;
}

AnalyticMap AnalyticMap::annulus(double r_in, double r_out, Vector center) {
  if (!(r_in > 0.0 && r_out > r_in)) throw_validation("annulus map needs 0 < r_in < r_out");
  if (center.size() != 2) throw_dimension("annulus center must be 2-dimensional");
  AnalyticMap m;
  m.kind = MapKind::polar_annulus;
  m.r_in = r_in;
  m.r_out = r_out;
  m.center = std::move(center);
  return m;
}

namespace {

[[noreturn]] void outside_domain(const std::vector<Eigen::Index>& bad) {
  std::ostringstream os;
  os << "points outside the map domain at rows";
  for (std::size_t i = 0; i < bad.size() && i < 20; ++i) os << ' ' << bad[i];
  if (bad.size() > 20) os << " ...";
  throw_validation(os.str());
}

}  // namespace

Matrix AnalyticMap::forward(const Matrix& points) const {
  if (kind == MapKind::affine) {
    if (points.cols() != A.cols()) throw_dimension("affine map dimension mismatch");
    return (points * A.transpose()).rowwise() + b.transpose();
  }
  if (points.cols() != 2) throw_dimension("annulus map needs 2D points");
  const double tol = 1e-12 * r_out;
  Matrix out(points.rows(), 2);
  std::vector<Eigen::Index> bad;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double dx = points(i, 0) - center[0], dy = points(i, 1) - center[1];
    double r = std::hypot(dx, dy);
    if (r < r_in - tol || r > r_out + tol) {
      bad.push_back(i);
      continue;
    }
    double theta = std::atan2(dy, dx);
    if (theta < 0.0) theta += 2.0 * std::numbers::pi;
    out(i, 0) = (r - r_in) / (r_out - r_in);
    out(i, 1) = theta / (2.0 * std::numbers::pi);
  }
  if (!bad.empty()) outside_domain(bad);
  return out;
}

Matrix AnalyticMap::inverse(const Matrix& points) const {
  if (kind == MapKind::affine) {
    if (points.cols() != A.cols()) throw_dimension("affine map dimension mismatch");
    Matrix shifted = points.rowwise() - b.transpose();
    return A.fullPivLu().solve(shifted.transpose()).transpose();
  }
  if (points.cols() != 2) throw_dimension("annulus map needs 2D points");
  Matrix out(points.rows(), 2);
  std::vector<Eigen::Index> bad;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double xi = points(i, 0), eta = points(i, 1);
    if (xi < -1e-12 || xi > 1.0 + 1e-12 || eta < -1e-12 || eta > 1.0 + 1e-12) {
      bad.push_back(i);
      continue;
    }
    double r = r_in + xi * (r_out - r_in);
    double theta = 2.0 * std::numbers::pi * eta;
    out(i, 0) = center[0] + r * std::cos(theta);
    out(i, 1) = center[1] + r * std::sin(theta);
  }
  if (!bad.empty()) outside_domain(bad);
  return out;
}

ScatteredSnapshot apply_map(const AnalyticMap& map, const ScatteredSnapshot& snap, MapDirection direction) {
  snap.validate();
  ScatteredSnapshot out;
  out.points = direction == MapDirection::forward ? map.forward(snap.points) : map.inverse(snap.points);
  out.values = snap.values;
  return out;
}

PcaResult pca_reduce(const Matrix& samples, std::size_t k) {
  const auto n = samples.rows(), p = samples.cols();
  if (n == 0 || p == 0) throw_validation("PCA needs a non-empty sample matrix");
  if (k == 0 || k > static_cast<std::size_t>(std::min(n, p)))
    throw_validation("PCA component count " + std::to_string(k) + " exceeds min(n, p) = " +
                     std::to_string(std::min(n, p)));
  PcaResult r;
  r.mean = samples.colwise().mean().transpose();
  Matrix centered = samples.rowwise() - r.mean.transpose();
  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto kk = static_cast<Eigen::Index>(k);
  r.singular_values = svd.singularValues();
  r.basis = svd.matrixV().leftCols(kk);
  r.coefficients = centered * r.basis;
  r.explained_variance = r.singular_values.head(kk).array().square() / static_cast<double>(n);
  return r;
}

Matrix pca_reconstruct(const PcaResult& pca) {
  return (pca.coefficients * pca.basis.transpose()).rowwise() + pca.mean.transpose();
}

double relative_error(const Vector& truth, const Vector& pred) {
  if (truth.size() != pred.size()) throw_dimension("relative_error: vectors differ in length");
  const double tn = truth.norm();
  if (!(tn > 0.0)) throw_validation("relative_error: reference has zero norm");
  return (truth - pred).norm() / tn;
}

Matrix sobol_points(std::size_t n, const Vector& lo, const Vector& hi) {
  if (lo.size() != hi.size() || lo.size() == 0) throw_dimension("Sobol box bounds differ in dimension");
  const auto d = static_cast<std::size_t>(lo.size());
  boost::random::sobol engine(d);
  const double scale = std::ldexp(1.0, -static_cast<int>(std::numeric_limits<boost::random::sobol::result_type>::digits));
  Matrix pts(static_cast<Eigen::Index>(n), lo.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      double u = static_cast<double>(engine()) * scale;
      pts(static_cast<Eigen::Index>(i), jj) = lo[jj] + u * (hi[jj] - lo[jj]);
    }
  return pts;
}

double annulus_field(double x, double y, const Vector& mu) {
  const double a = mu.size() > 0 ? mu[0] : 1.0;
  const double b = mu.size() > 1 ? mu[1] : 0.0;
  const double r = std::hypot(x, y);
  return std::sin(a * x) * std::cos(0.7 * y) + b * r * r + 0.3 * std::cos(a * r);
}

ScatteredSnapshot annulus_snapshot(const Vector& mu, double r_in, double r_out, std::size_t n_points,
                                   std::uint64_t seed) {
  if (!(r_in >= 0.0 && r_out > r_in)) throw_validation("annulus needs 0 <= r_in < r_out");
  std::mt19937_64 rng(seed);
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  ScatteredSnapshot s;
  s.points.resize(static_cast<Eigen::Index>(n_points), 2);
  s.values.resize(static_cast<Eigen::Index>(n_points));
  for (std::size_t i = 0; i < n_points; ++i) {
    // Area-uniform radius.
    double r = std::sqrt(r_in * r_in + unit() * (r_out * r_out - r_in * r_in));
    double th = 2.0 * std::numbers::pi * unit();
    const auto ii = static_cast<Eigen::Index>(i);
    s.points(ii, 0) = r * std::cos(th);
    s.points(ii, 1) = r * std::sin(th);
    s.values[ii] = annulus_field(s.points(ii, 0), s.points(ii, 1), mu);
  }
  return s;
}

}  // namespace kgp
