/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_BURGERS_HPP
#define KGP_BURGERS_HPP

#include "kgp/kronalg.hpp"

namespace kgp {

/// u_t + (u^2/2)_x = 0.02 exp(mu2 x) on [0, x_max], u(x, 0) = 1, u(0, t) = mu1.
struct BurgersConfig {
  double mu1 = 4.25;
  double mu2 = 0.015;
  std::size_t M = 128;    // grid nodes, x_i = i x_max / (M - 1)
  std::size_t Nt = 100;   // output times t_l = l T / (Nt - 1), t_0 = 0
  double T_final = 35.0;
  double x_max = 100.0;
  double dt = 0.02;       // nominal step; halved when the CFL bound is violated

  void validate() const;
};

inline constexpr double kBurgersMu1Min = 4.25;
inline constexpr double kBurgersMu1Max = 5.5;
inline constexpr double kBurgersMu2Min = 0.015;
inline constexpr double kBurgersMu2Max = 0.03;

/// Throws ValidationError when (mu1, mu2) lies outside the benchmark box.
void check_burgers_box(double mu1, double mu2);

struct BurgersResult {
  FieldTensor field;  // shape [M, Nt]
  Vector x;
  Vector t;
  /// Largest per-step |change of sum(u) dx - boundary and source fluxes|
  /// relative to |sum(u) dx|.
  double max_balance_residual = 0.0;
  std::size_t steps = 0;
  std::size_t refinements = 0;
};

/// First-order Godunov finite volumes with forward Euler. Node 0 is the
/// Dirichlet inflow node, the right end uses a zero-gradient ghost.
BurgersResult burgers_solve(const BurgersConfig& cfg);

/// Exact Riemann (Godunov) flux for f(u) = u^2 / 2.
double godunov_flux(double left, double right);

}  // namespace kgp

#endif  // KGP_BURGERS_HPP
