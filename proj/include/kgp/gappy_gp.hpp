/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_GAPPY_GP_HPP
#define KGP_GAPPY_GP_HPP

#include <cstdint>
#include <vector>

#include "kgp/error.hpp"
#include "kgp/grid_gp.hpp"

namespace kgp {

/// Regular/gap split of the spatial lattice. Indices are flat row-major
/// positions over the spatial axes only.
struct GappyMask {
  std::vector<std::size_t> spatial_shape;
  std::vector<std::size_t> regular;
  std::vector<std::size_t> gaps;

  /// flags[s] != 0 marks spatial point s as regular.
  static GappyMask from_flags(std::vector<std::size_t> shape, const std::vector<std::uint8_t>& flags);
  static GappyMask all_regular(std::vector<std::size_t> shape);

  std::size_t spatial_size() const { return shape_product(spatial_shape); }
  std::vector<std::uint8_t> flags() const;
  void validate() const;
};

/// Index sets over the full training vector, full index (j M + s) N_t + l.
struct LiftedMask {
  std::vector<std::size_t> regular;
  std::vector<std::size_t> gaps;
  std::size_t full_size = 0;
};

LiftedMask lift_mask(const GappyMask& mask, std::size_t n_params, std::size_t n_times);

Vector gather(const Vector& full, const std::vector<std::size_t>& index);
/// full[index[i]] = part[i]; other entries untouched.
void scatter(const Vector& part, const std::vector<std::size_t>& index, Vector& full);

struct CgOptions {
  double tolerance = 1e-5;  // relative residual
  std::size_t max_iterations = 2000;
};

struct PseudoValueSolution {
  Vector y_g;
  std::size_t iterations = 0;
  double residual = 0.0;  // ||b - A y_g|| / ||b||
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, PseudoValueSolution best)
      : NumericalError(what), best_(std::move(best)) {}
  const PseudoValueSolution& best() const noexcept { return best_; }

 private:
  PseudoValueSolution best_;
};

/// CG on V K_y^{-1} V^T y_g = -V K_y^{-1} W^T y_r with K_y diagonalized by
/// `eig`. `warm_start` (length n_g, may be null) seeds the iteration.
PseudoValueSolution solve_pseudovalues(const EigFactors& eig, double sigma2, const LiftedMask& lifted,
                                       const Vector& y_r, const CgOptions& cg,
                                       const Vector* warm_start = nullptr);

PseudoValueSolution solve_pseudovalues(const ProductKernelSpec& spec, const ProductGrid& grid,
                                       const GappyMask& mask, const Vector& y_r, double sigma2,
                                       const CgOptions& cg, const Vector* warm_start = nullptr);

/// Full vector W^T y_r + V^T y_g.
Vector reconstruct(const LiftedMask& lifted, const Vector& y_r, const Vector& y_g);

/// Sum over the largest n_r eigenvalues of log(n_r/n * lambda + sigma2).
double nystrom_logdet(const EigFactors& eig, double sigma2, std::size_t n_regular);

/// Interval bracketing log|K_r + sigma2 I| for any principal submatrix of
/// size n_r, from the full eigenvalues.
struct LogdetBounds {
  double lower = 0.0;
  double upper = 0.0;
};
LogdetBounds interlacing_logdet_bounds(const EigFactors& eig, double sigma2, std::size_t n_regular);

struct GappyNlml {
  NlmlTerms terms;
  /// The log-determinant is the Nystrom estimate, not exact.
  bool approximate = true;
  PseudoValueSolution pseudo;
};

GappyNlml gappy_nlml_terms(const EigFactors& eig, const LiftedMask& lifted, const Vector& y_r,
                           double sigma2, const CgOptions& cg, const Vector* warm_start = nullptr);
GappyNlml gappy_nlml_terms(const ProductKernelSpec& spec, const ProductGrid& grid, const GappyMask& mask,
                           const Vector& y_r, double sigma2, const CgOptions& cg,
                           const Vector* warm_start = nullptr);
double gappy_nlml(const ProductKernelSpec& spec, const ProductGrid& grid, const GappyMask& mask,
                  const Vector& y_r, double sigma2, const CgOptions& cg);

struct GappyModel {
  FittedModel model;  // over the full lattice with reconstructed targets
  GappyMask mask;
  PseudoValueSolution pseudo;
};

GappyModel fit_gappy(const ProductKernelSpec& spec, const ProductGrid& grid, const GappyMask& mask,
                     const Vector& y_r, double sigma2, const CgOptions& cg, double y_offset = 0.0,
                     const Vector* warm_start = nullptr);

/// Posterior mean at the regular test points (test mask over the test
/// spatial lattice), in lifted order.
Vector gappy_predict_mean(const GappyModel& model, const ProductGrid& test, const GappyMask& test_mask);

struct VarianceBounds {
  Vector lower;
  Vector upper;
  std::size_t clamped = 0;
};

VarianceBounds gappy_predict_var_bounds(const GappyModel& model, const ProductGrid& test,
                                        const GappyMask& test_mask);

}  // namespace kgp

#endif  // KGP_GAPPY_GP_HPP
