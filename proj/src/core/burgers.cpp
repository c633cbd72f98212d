/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/burgers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kgp/error.hpp"

namespace kgp {

void BurgersConfig::validate() const {
  if (M < 3) throw_validation("Burgers grid needs at least 3 nodes");
  if (Nt < 1) throw_validation("Burgers output needs at least one time");
  if (!(T_final > 0.0) && Nt > 1) throw_validation("T_final must be positive");
  if (!(x_max > 0.0)) throw_validation("x_max must be positive");
  if (!(dt > 0.0)) throw_validation("dt must be positive");
  if (!std::isfinite(mu1) || !std::isfinite(mu2)) throw_validation("Burgers parameters must be finite");
}

void check_burgers_box(double mu1, double mu2) {
  if (mu1 < kBurgersMu1Min || mu1 > kBurgersMu1Max || mu2 < kBurgersMu2Min || mu2 > kBurgersMu2Max) {
    std::ostringstream os;
    os << "Burgers parameters (" << mu1 << ", " << mu2 << ") outside [" << kBurgersMu1Min << ", "
       << kBurgersMu1Max << "] x [" << kBurgersMu2Min << ", " << kBurgersMu2Max << "]";
    throw_validation(os.str());
  }
}

double godunov_flux(double left, double right) {
  auto f = [](double u) { return 0.5 * u * u; };
  if (left <= right) {
    if (left > 0.0) return f(left);
    if (right < 0.0) return f(right);
    return 0.0;
  }
  return std::max(f(left), f(right));
}

BurgersResult burgers_solve(const BurgersConfig& cfg) {
  cfg.validate();
  const auto m = static_cast<Eigen::Index>(cfg.M);
  const double dx = cfg.x_max / static_cast<double>(cfg.M - 1);

  BurgersResult out;
  out.x = Vector::LinSpaced(m, 0.0, cfg.x_max);
  out.t = Vector::Zero(1);
  if (cfg.Nt > 1) out.t = Vector::LinSpaced(static_cast<Eigen::Index>(cfg.Nt), 0.0, cfg.T_final);
  Vector source = (cfg.mu2 * out.x.array()).exp() * 0.02;
  Vector u = Vector::Ones(m);
  Matrix field(m, static_cast<Eigen::Index>(cfg.Nt));
  field.col(0) = u;

  double dt = cfg.dt;
  Vector next(m);
  double t = 0.0;
  for (Eigen::Index l = 1; l < out.t.size(); ++l) {
    const double target = out.t[l];
    while (t < target) {
      u[0] = cfg.mu1;
      const double umax = u.cwiseAbs().maxCoeff();
      double step = std::min(dt, target - t);
      while (step * umax > dx) {
        if (++out.refinements > 10)
          throw_numerical("Burgers CFL condition still violated after 10 step refinements");
        dt *= 0.5;
        step = std::min(dt, target - t);
      }
      // Interior nodes 1..M-1 are the finite volumes; node 0 is the inflow state.
      double inflow = godunov_flux(u[0], u[1]);
      double outflow = godunov_flux(u[m - 1], u[m - 1]);
      double mass_before = u.tail(m - 1).sum() * dx;
      double source_total = source.tail(m - 1).sum() * dx;
      next[0] = cfg.mu1;
      double left = inflow;
      for (Eigen::Index i = 1; i < m; ++i) {
        double right = i + 1 < m ? godunov_flux(u[i], u[i + 1]) : outflow;
        next[i] = u[i] - step / dx * (right - left) + step * source[i];
        left = right;
      }
      u.swap(next);
      double mass_after = u.tail(m - 1).sum() * dx;
      double balance = mass_after - mass_before - step * (inflow - outflow + source_total);
      double scale = std::abs(mass_after);
      if (scale > 0.0) out.max_balance_residual = std::max(out.max_balance_residual, std::abs(balance) / scale);
      if (!u.allFinite()) throw_numerical("Burgers solution became non-finite");
      t = (target - t <= step) ? target : t + step;
      ++out.steps;
    }
    field.col(l) = u;
  }

  // Row-major [M, Nt]: each row is one spatial node over time.
  Vector values(m * static_cast<Eigen::Index>(cfg.Nt));
  for (Eigen::Index i = 0; i < m; ++i) values.segment(i * field.cols(), field.cols()) = field.row(i).transpose();
  out.field = FieldTensor({cfg.M, cfg.Nt}, std::move(values));
  return out;
}

}  // namespace kgp
