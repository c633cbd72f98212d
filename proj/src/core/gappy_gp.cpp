/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/gappy_gp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace kgp {

GappyMask GappyMask::from_flags(std::vector<std::size_t> shape, const std::vector<std::uint8_t>& flags) {
  GappyMask m;
  m.spatial_shape = std::move(shape);
  if (flags.size() != m.spatial_size())
    throw_dimension("mask has " + std::to_string(flags.size()) + " flags for " +
                    std::to_string(m.spatial_size()) + " spatial points");
  for (std::size_t s = 0; s < flags.size(); ++s) (flags[s] ? m.regular : m.gaps).push_back(s);
  m.validate();
  return m;
}

GappyMask GappyMask::all_regular(std::vector<std::size_t> shape) {
  std::vector<std::uint8_t> flags(shape_product(shape), 1);
  return from_flags(std::move(shape), flags);
}

std::vector<std::uint8_t> GappyMask::flags() const {
  std::vector<std::uint8_t> f(spatial_size(), 0);
  for (auto s : regular) f.at(s) = 1;
  return f;
}

void GappyMask::validate() const {
  const std::size_t m = spatial_size();
  if (regular.empty()) throw_validation("mask has no regular points");
  if (regular.size() + gaps.size() != m) throw_validation("mask does not cover the spatial lattice");
  std::vector<std::uint8_t> seen(m, 0);
  for (const auto* set : {&regular, &gaps}) {
    for (std::size_t i = 0; i < set->size(); ++i) {
      std::size_t s = (*set)[i];
      if (s >= m) throw_validation("mask index " + std::to_string(s) + " out of range");
      if (i > 0 && (*set)[i - 1] >= s) throw_validation("mask indices must be sorted and unique");
      if (seen[s]++) throw_validation("mask index " + std::to_string(s) + " is both regular and gap");
    }
  }
}

LiftedMask lift_mask(const GappyMask& mask, std::size_t n_params, std::size_t n_times) {
  const std::size_t m = mask.spatial_size();
  LiftedMask out;
  out.full_size = n_params * m * n_times;
  out.regular.reserve(n_params * mask.regular.size() * n_times);
  out.gaps.reserve(n_params * mask.gaps.size() * n_times);
  auto flags = mask.flags();
  for (std::size_t j = 0; j < n_params; ++j)
    for (std::size_t s = 0; s < m; ++s)
      for (std::size_t l = 0; l < n_times; ++l)
        (flags[s] ? out.regular : out.gaps).push_back((j * m + s) * n_times + l);
  return out;
}

Vector gather(const Vector& full, const std::vector<std::size_t>& index) {
  Vector part(static_cast<Eigen::Index>(index.size()));
  for (std::size_t i = 0; i < index.size(); ++i) part[static_cast<Eigen::Index>(i)] = full[static_cast<Eigen::Index>(index[i])];
  return part;
}

void scatter(const Vector& part, const std::vector<std::size_t>& index, Vector& full) {
  if (static_cast<std::size_t>(part.size()) != index.size())
    throw_dimension("scatter: " + std::to_string(part.size()) + " values for " +
                    std::to_string(index.size()) + " indices");
  for (std::size_t i = 0; i < index.size(); ++i) full[static_cast<Eigen::Index>(index[i])] = part[static_cast<Eigen::Index>(i)];
}

Vector reconstruct(const LiftedMask& lifted, const Vector& y_r, const Vector& y_g) {
  Vector y = Vector::Zero(static_cast<Eigen::Index>(lifted.full_size));
  scatter(y_r, lifted.regular, y);
  scatter(y_g, lifted.gaps, y);
  return y;
}

namespace {

void check_grid_mask(const ProductGrid& grid, const GappyMask& mask) {
  if (grid.spatial_shape() != mask.spatial_shape)
    throw_dimension("mask spatial shape does not match the grid");
}

}  // namespace

PseudoValueSolution solve_pseudovalues(const EigFactors& eig, double sigma2, const LiftedMask& lifted,
                                       const Vector& y_r, const CgOptions& cg, const Vector* warm_start) {
  if (!(sigma2 > 0.0)) throw_validation("noise variance must be positive");
  if (static_cast<std::size_t>(y_r.size()) != lifted.regular.size())
    throw_dimension("regular targets have " + std::to_string(y_r.size()) + " entries, mask has " +
                    std::to_string(lifted.regular.size()));
  if (shape_product(eig.shape()) != lifted.full_size) throw_dimension("mask does not match the decomposition");

  PseudoValueSolution sol;
  const auto ng = static_cast<Eigen::Index>(lifted.gaps.size());
  sol.y_g = Vector::Zero(ng);
  if (ng == 0) return sol;

  const auto shape = eig.shape();
  auto apply_inverse = [&](const Vector& full) {
    return inverse_apply(eig, sigma2, FieldTensor(shape, full)).values;
  };
  auto op = [&](const Vector& p) {
    Vector full = Vector::Zero(static_cast<Eigen::Index>(lifted.full_size));
    scatter(p, lifted.gaps, full);
    return gather(apply_inverse(full), lifted.gaps);
  };

  Vector full_r = Vector::Zero(static_cast<Eigen::Index>(lifted.full_size));
  scatter(y_r, lifted.regular, full_r);
  Vector b = -gather(apply_inverse(full_r), lifted.gaps);
  const double bnorm = b.norm();
  if (bnorm == 0.0) return sol;

  if (warm_start && warm_start->size() == ng) sol.y_g = *warm_start;
  Vector r = b - (sol.y_g.squaredNorm() > 0.0 ? op(sol.y_g) : Vector::Zero(ng));
  Vector p = r;
  double rr = r.squaredNorm();
  Vector best = sol.y_g;
  double best_res = std::sqrt(rr) / bnorm;
  std::size_t it = 0;
  while (best_res > cg.tolerance && it < cg.max_iterations) {
    Vector ap = op(p);
    double pap = p.dot(ap);
    if (!(pap > 0.0)) break;  // breakdown: operator is SPD, so only round-off gets here
    double a = rr / pap;
    sol.y_g += a * p;
    r -= a * ap;
    double rr_new = r.squaredNorm();
    ++it;
    double res = std::sqrt(rr_new) / bnorm;
    if (res < best_res) {
      best_res = res;
      best = sol.y_g;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  sol.y_g = best;
  sol.iterations = it;
  sol.residual = best_res;
  if (best_res > cg.tolerance) {
    std::ostringstream os;
    os << "pseudovalue CG did not reach tolerance " << cg.tolerance << " in " << it
       << " iterations (best relative residual " << best_res << ")";
    throw ConvergenceError(os.str(), sol);
  }
  return sol;
}

PseudoValueSolution solve_pseudovalues(const ProductKernelSpec& spec, const ProductGrid& grid,
                                       const GappyMask& mask, const Vector& y_r, double sigma2,
                                       const CgOptions& cg, const Vector* warm_start) {
  check_grid_mask(grid, mask);
  EigFactors eig = eig_factors(training_covariance(spec, grid), 0.0);
  return solve_pseudovalues(eig, sigma2, lift_mask(mask, grid.parameter_count(), grid.time_count()), y_r,
                            cg, warm_start);
}

namespace {

Vector sorted_eigenvalues_desc(const EigFactors& eig) {
  Vector lam = eig.eigenvalue_tensor().values;
  std::sort(lam.data(), lam.data() + lam.size(), std::greater<double>());
  return lam;
}

}  // namespace

double nystrom_logdet(const EigFactors& eig, double sigma2, std::size_t n_regular) {
  Vector lam = sorted_eigenvalues_desc(eig);
  const auto n = static_cast<std::size_t>(lam.size());
  if (n_regular > n) throw_dimension("more regular points than lattice points");
  const double scale = static_cast<double>(n_regular) / static_cast<double>(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n_regular; ++i) {
    double v = scale * lam[static_cast<Eigen::Index>(i)] + sigma2;
    if (!(v > 0.0)) throw_numerical("non-positive shifted eigenvalue in the Nystrom log-determinant");
    s += std::log(v);
  }
  return s;
}

LogdetBounds interlacing_logdet_bounds(const EigFactors& eig, double sigma2, std::size_t n_regular) {
  Vector lam = sorted_eigenvalues_desc(eig);
  const auto n = static_cast<std::size_t>(lam.size());
  if (n_regular > n) throw_dimension("more regular points than lattice points");
  const std::size_t ng = n - n_regular;
  LogdetBounds b;
  for (std::size_t i = 0; i < n_regular; ++i) {
    b.upper += std::log(lam[static_cast<Eigen::Index>(i)] + sigma2);
    b.lower += std::log(lam[static_cast<Eigen::Index>(i + ng)] + sigma2);
  }
  return b;
}

GappyNlml gappy_nlml_terms(const EigFactors& eig, const LiftedMask& lifted, const Vector& y_r,
                           double sigma2, const CgOptions& cg, const Vector* warm_start) {
  GappyNlml out;
  out.pseudo = solve_pseudovalues(eig, sigma2, lifted, y_r, cg, warm_start);
  Vector y = reconstruct(lifted, y_r, out.pseudo.y_g);
  FieldTensor alpha = inverse_apply(eig, sigma2, FieldTensor(eig.shape(), y));
  out.terms.quadratic = 0.5 * y.dot(alpha.values);
  out.terms.logdet = 0.5 * nystrom_logdet(eig, sigma2, lifted.regular.size());
  out.terms.constant = nlml_constant(lifted.regular.size());
  out.approximate = !lifted.gaps.empty();
  return out;
}

GappyNlml gappy_nlml_terms(const ProductKernelSpec& spec, const ProductGrid& grid, const GappyMask& mask,
                           const Vector& y_r, double sigma2, const CgOptions& cg, const Vector* warm_start) {
  check_grid_mask(grid, mask);
  EigFactors eig = eig_factors(training_covariance(spec, grid), 0.0);
  return gappy_nlml_terms(eig, lift_mask(mask, grid.parameter_count(), grid.time_count()), y_r, sigma2,
                          cg, warm_start);
}

double gappy_nlml(const ProductKernelSpec& spec, const ProductGrid& grid, const GappyMask& mask,
                  const Vector& y_r, double sigma2, const CgOptions& cg) {
  return gappy_nlml_terms(spec, grid, mask, y_r, sigma2, cg).terms.total();
}

GappyModel fit_gappy(const ProductKernelSpec& spec, const ProductGrid& grid, const GappyMask& mask,
                     const Vector& y_r, double sigma2, const CgOptions& cg, double y_offset,
                     const Vector* warm_start) {
  spec.validate();
  grid.validate();
  check_grid_mask(grid, mask);
  KronOperator cov = training_covariance(spec, grid);
  EigFactors eig = eig_factors(cov, 0.0);
  LiftedMask lifted = lift_mask(mask, grid.parameter_count(), grid.time_count());
  GappyModel gm;
  gm.mask = mask;
  gm.pseudo = solve_pseudovalues(eig, sigma2, lifted, y_r, cg, warm_start);
  FieldTensor y(grid.shape(), reconstruct(lifted, y_r, gm.pseudo.y_g));
  gm.model = fit_from_eig(spec, grid, std::move(cov), std::move(eig), y, sigma2, y_offset);
  return gm;
}

namespace {

LiftedMask test_lift(const ProductGrid& test, const GappyMask& test_mask) {
  check_grid_mask(test, test_mask);
  return lift_mask(test_mask, test.parameter_count(), test.time_count());
}

}  // namespace

Vector gappy_predict_mean(const GappyModel& model, const ProductGrid& test, const GappyMask& test_mask) {
  LiftedMask lifted = test_lift(test, test_mask);
  return gather(predict_mean(model.model, test).values, lifted.regular);
}

VarianceBounds gappy_predict_var_bounds(const GappyModel& model, const ProductGrid& test,
                                        const GappyMask& test_mask) {
  LiftedMask test_lifted = test_lift(test, test_mask);
  const FittedModel& m = model.model;
  VariancePrediction full = predict_var(m, test);

  // Regular-point indicator over the training lattice for the masked row norms.
  LiftedMask train_lifted = lift_mask(model.mask, m.grid.parameter_count(), m.grid.time_count());
  FieldTensor indicator = FieldTensor::zeros(m.grid.shape());
  for (auto i : train_lifted.regular) indicator.values[static_cast<Eigen::Index>(i)] = 1.0;
  KronOperator cross = cross_covariance(m.spec, m.grid, test);
  FieldTensor rowsq = row_sq_project(cross, indicator);
  FieldTensor upper = prior_variance(m.spec, test);
  upper.values -= rowsq.values / (m.eig.max_eigenvalue() + m.sigma2);

  VarianceBounds out;
  out.lower = gather(full.variance.values, test_lifted.regular);
  out.upper = gather(upper.values, test_lifted.regular);
  out.clamped = full.clamped;
  return out;
}

}  // namespace kgp
