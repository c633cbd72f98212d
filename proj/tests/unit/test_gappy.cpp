/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "kgp/dense_gp.hpp"
#include "kgp/error.hpp"
#include "kgp/gappy_gp.hpp"
#include "kgp/grid_gp.hpp"
#include "support.hpp"

using namespace kgp;
using kgp::test::max_rel;

namespace {

struct Instance {
  ProductGrid grid;
  ProductKernelSpec spec;
  GappyMask mask;
  LiftedMask lifted;
  Vector y_r;
  double sigma2 = 0.05;
};

Instance make_instance(std::mt19937_64& rng, std::size_t n, std::vector<std::size_t> spatial, std::size_t nt,
                       double fraction, KernelFamily family = KernelFamily::matern52, bool networks = false) {
  Instance in;
  in.grid = kgp::test::random_grid(rng, n, 1, spatial, nt);
  in.spec = kgp::test::random_spec(rng, in.grid, family, networks);
  in.mask = kgp::test::random_mask(rng, in.grid.spatial_shape(), fraction);
  in.lifted = lift_mask(in.mask, in.grid.parameter_count(), in.grid.time_count());
  in.y_r = kgp::test::random_vector(rng, static_cast<Eigen::Index>(in.lifted.regular.size()));
  return in;
}

Matrix rows_of(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

DenseGP regular_oracle(const Instance& in) {
  return DenseGP(rows_of(in.grid.lattice_points(), in.lifted.regular), in.y_r, in.spec, in.sigma2);
}

}  // namespace

TEST_SUITE("gappy") {

TEST_CASE("lifted index sets") {
  GappyMask m = GappyMask::from_flags({2, 2}, {1, 0, 1, 1});
  LiftedMask l = lift_mask(m, 2, 3);
  std::vector<std::size_t> expect;
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t s = 0; s < 4; ++s)
      for (std::size_t t = 0; t < 3; ++t)
        if (s == 1) expect.push_back(j * 12 + s * 3 + t);
  CHECK(l.gaps == expect);
  CHECK(l.gaps.size() == 6);
  CHECK(l.regular.size() + l.gaps.size() == l.full_size);

  CHECK(lift_mask(GappyMask::all_regular({3}), 2, 2).gaps.empty());
  GappyMask lone = GappyMask::from_flags({4}, {0, 0, 1, 0});
  CHECK(lift_mask(lone, 3, 5).regular.size() == 15);

  std::mt19937_64 rng(51);
  Vector full = kgp::test::random_vector(rng, 24);
  Vector part = gather(full, l.regular);
  Vector back = Vector::Zero(24);
  scatter(part, l.regular, back);
  CHECK(gather(back, l.regular) == part);
}

TEST_CASE("mask validation") {
  CHECK_THROWS_AS(GappyMask::from_flags({3}, {0, 0, 0}), ValidationError);
  CHECK_THROWS_AS(GappyMask::from_flags({3}, {1, 0}), DimensionError);
  GappyMask bad;
  bad.spatial_shape = {3};
  bad.regular = {0, 1};
  bad.gaps = {1, 2};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("zero gaps") {
  std::mt19937_64 rng(52);
  Instance in = make_instance(rng, 2, {4}, 3, 0.0);
  PseudoValueSolution sol = solve_pseudovalues(in.spec, in.grid, in.mask, in.y_r, in.sigma2, CgOptions{});
  CHECK(sol.y_g.size() == 0);
  CHECK(sol.iterations == 0);
  FieldTensor y(in.grid.shape(), in.y_r);
  GappyNlml g = gappy_nlml_terms(in.spec, in.grid, in.mask, in.y_r, in.sigma2, CgOptions{});
  CHECK(g.terms.total() == doctest::Approx(grid_nlml(in.spec, in.grid, y, in.sigma2)).epsilon(1e-13));
  CHECK_FALSE(g.approximate);

  GappyModel gm = fit_gappy(in.spec, in.grid, in.mask, in.y_r, in.sigma2, CgOptions{});
  ProductGrid test = kgp::test::random_grid(rng, 2, 1, {5}, 2);
  GappyMask full = GappyMask::all_regular(test.spatial_shape());
  CHECK(gappy_predict_mean(gm, test, full) == predict_mean(fit(in.spec, in.grid, y, in.sigma2), test).values);
  VarianceBounds b = gappy_predict_var_bounds(gm, test, full);
  CHECK(max_rel(b.lower, predict_var(gm.model, test).variance.values) <= 1e-15);
  CHECK(((b.upper - b.lower).array() >= -1e-10).all());
}

TEST_CASE("single gap matches the dense 1x1 system") {
  ProductGrid g = make_grid(Matrix::Constant(1, 1, 0.5), {Eigen::VectorXd::LinSpaced(4, 0.0, 1.5)});
  ProductKernelSpec spec = stationary_spec(g, KernelFamily::squared_exponential);
  GappyMask mask = GappyMask::from_flags({4}, {1, 1, 0, 1});
  Vector y_r = kgp::test::vec({0.3, -0.2, 0.8});
  const double sigma2 = 0.1;
  CgOptions cg{1e-12, 50};
  PseudoValueSolution sol = solve_pseudovalues(spec, g, mask, y_r, sigma2, cg);

  Matrix ky = kron_dense(training_covariance(spec, g));
  ky.diagonal().array() += sigma2;
  Matrix inv = ky.inverse();
  Vector yfull = Vector::Zero(4);
  yfull << 0.3, -0.2, 0.0, 0.8;
  double expect = -(inv.row(2) * yfull)(0) / inv(2, 2);
  CHECK(sol.y_g.size() == 1);
  CHECK(std::abs(sol.y_g[0] - expect) <= 1e-10 * std::max(1.0, std::abs(expect)));
}

TEST_CASE("gap block on a 5x5 lattice") {
  std::mt19937_64 rng(53);
  Instance in;
  in.grid = kgp::test::random_grid(rng, 2, 1, {5, 5}, 3);
  in.spec = kgp::test::random_spec(rng, in.grid, KernelFamily::matern52, false);
  std::vector<std::uint8_t> flags(25, 1);
  for (std::size_t a : {1, 2})
    for (std::size_t b : {2, 3}) flags[a * 5 + b] = 0;
  in.mask = GappyMask::from_flags({5, 5}, flags);
  in.lifted = lift_mask(in.mask, 2, 3);
  in.y_r = kgp::test::random_vector(rng, static_cast<Eigen::Index>(in.lifted.regular.size()));
  GappyModel gm = fit_gappy(in.spec, in.grid, in.mask, in.y_r, in.sigma2, CgOptions{1e-8, 2000});
  Vector alpha = gm.model.alpha.values;
  CHECK(gather(alpha, in.lifted.gaps).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(max_rel(gather(alpha, in.lifted.regular), dense_alpha(regular_oracle(in))) <= 1e-6);
}

TEST_CASE("restricted solve, quadratic form, mean and variance sandwich") {
  std::mt19937_64 rng(54);
  const CgOptions cg{1e-8, 2000};
  for (double fraction : {0.1, 0.3, 0.5}) {
    for (int trial = 0; trial < 2; ++trial) {
      Instance in = make_instance(rng, 2 + trial, {6, 4}, 2 + trial, fraction,
                                  trial ? KernelFamily::squared_exponential : KernelFamily::matern52, trial == 1);
      GappyModel gm = fit_gappy(in.spec, in.grid, in.mask, in.y_r, in.sigma2, cg);
      DenseGP oracle = regular_oracle(in);
      Vector ref = dense_alpha(oracle);
      Vector alpha_r = gather(gm.model.alpha.values, in.lifted.regular);
      CHECK((alpha_r - ref).cwiseAbs().maxCoeff() <= 10 * cg.tolerance * std::max(1.0, ref.cwiseAbs().maxCoeff()));
      CHECK(gather(gm.model.alpha.values, in.lifted.gaps).cwiseAbs().maxCoeff() <= 1e-6);

      double quad = 0.5 * in.y_r.dot(ref);
      GappyNlml g = gappy_nlml_terms(in.spec, in.grid, in.mask, in.y_r, in.sigma2, cg);
      CHECK(std::abs(g.terms.quadratic - quad) <= 1e-6 * std::max(1.0, quad));
      CHECK(g.approximate);

      ProductGrid test = kgp::test::random_grid(rng, 2, 1, {5, 3}, 2);
      GappyMask tmask = kgp::test::random_mask(rng, test.spatial_shape(), 0.3);
      LiftedMask tl = lift_mask(tmask, 2, 2);
      Matrix tp = rows_of(test.lattice_points(), tl.regular);
      DensePrediction dp = dense_predict(oracle, tp);
      CHECK((gappy_predict_mean(gm, test, tmask) - dp.mean).cwiseAbs().maxCoeff() <= 1e-6);
      VarianceBounds b = gappy_predict_var_bounds(gm, test, tmask);
      CHECK(((dp.variance - b.lower).array() >= -1e-8).all());
      CHECK(((b.upper - dp.variance).array() >= -1e-8).all());
      CHECK(((b.upper - b.lower).array() >= -1e-10).all());
    }
  }
}

TEST_CASE("interlacing and Nystrom log-determinant bounds") {
  std::mt19937_64 rng(55);
  for (double fraction : {0.1, 0.3, 0.5}) {
    Instance in = make_instance(rng, 2, {5, 4}, 3, fraction);
    KronOperator cov = training_covariance(in.spec, in.grid);
    Matrix full = kron_dense(cov);
    Vector lam = Eigen::SelfAdjointEigenSolver<Matrix>(full).eigenvalues().reverse();
    Matrix kr(in.lifted.regular.size(), in.lifted.regular.size());
    for (std::size_t i = 0; i < in.lifted.regular.size(); ++i)
      for (std::size_t j = 0; j < in.lifted.regular.size(); ++j)
        kr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            full(static_cast<Eigen::Index>(in.lifted.regular[i]), static_cast<Eigen::Index>(in.lifted.regular[j]));
    Vector sub = Eigen::SelfAdjointEigenSolver<Matrix>(kr).eigenvalues().reverse();
    const auto ng = static_cast<Eigen::Index>(in.lifted.gaps.size());
    for (Eigen::Index i = 0; i < sub.size(); ++i) {
      CHECK(lam[i] >= sub[i] - 1e-8);
      CHECK(sub[i] >= lam[i + ng] - 1e-8);
    }
    EigFactors eig = eig_factors(cov);
    LogdetBounds bounds = interlacing_logdet_bounds(eig, in.sigma2, in.lifted.regular.size());
    double nys = nystrom_logdet(eig, in.sigma2, in.lifted.regular.size());
    Matrix kry = kr;
    kry.diagonal().array() += in.sigma2;
    double exact = 2.0 * Eigen::LLT<Matrix>(kry).matrixLLT().diagonal().array().log().sum();
    CHECK(exact >= bounds.lower - 1e-8);
    CHECK(exact <= bounds.upper + 1e-8);
    CHECK(nys >= bounds.lower - 1e-8);
    CHECK(nys <= bounds.upper + 1e-8);
  }
}

TEST_CASE("far-field bounds revert to the prior") {
  std::mt19937_64 rng(56);
  Instance in = make_instance(rng, 2, {4, 4}, 2, 0.3, KernelFamily::squared_exponential);
  GappyModel gm = fit_gappy(in.spec, in.grid, in.mask, in.y_r, in.sigma2, CgOptions{1e-8, 2000});
  ProductGrid far = kgp::test::far_point(in.grid, 100.0);
  VarianceBounds b = gappy_predict_var_bounds(gm, far, GappyMask::all_regular(far.spatial_shape()));
  CHECK(b.lower[0] == doctest::Approx(in.spec.outputscale()).epsilon(1e-12));
  CHECK(b.upper[0] == doctest::Approx(in.spec.outputscale()).epsilon(1e-12));
}

TEST_CASE("interpolation at regular training points") {
  std::mt19937_64 rng(57);
  Vector t = Vector::LinSpaced(2, 0.0, 1.0);
  ProductGrid g = make_grid(Vector::LinSpaced(2, 0.0, 1.0), {Vector::LinSpaced(5, 0.0, 2.0), Vector::LinSpaced(4, 0.0, 2.0)}, &t);
  ProductKernelSpec spec = stationary_spec(g, KernelFamily::matern52);
  GappyMask mask = kgp::test::random_mask(rng, g.spatial_shape(), 0.3);
  LiftedMask l = lift_mask(mask, 2, 2);
  Vector y_r = kgp::test::random_vector(rng, static_cast<Eigen::Index>(l.regular.size()));
  GappyModel gm = fit_gappy(spec, g, mask, y_r, 1e-8, CgOptions{1e-10, 5000});
  Vector mean = gappy_predict_mean(gm, g, mask);
  CHECK((mean - y_r).cwiseAbs().maxCoeff() <= 1e-4 * (y_r.maxCoeff() - y_r.minCoeff()));
}

TEST_CASE("CG failure carries the best iterate") {
  std::mt19937_64 rng(58);
  Instance in = make_instance(rng, 2, {6, 5}, 3, 0.5);
  in.sigma2 = 1e-6;
  try {
    solve_pseudovalues(in.spec, in.grid, in.mask, in.y_r, in.sigma2, CgOptions{1e-14, 2});
    FAIL("expected non-convergence");
  } catch (const ConvergenceError& e) {
    CHECK(e.best().iterations == 2);
    CHECK(e.best().residual > 1e-14);
    CHECK(e.best().y_g.size() == static_cast<Eigen::Index>(in.lifted.gaps.size()));
  }
}

TEST_CASE("warm start reduces iterations") {
  std::mt19937_64 rng(59);
  Instance in = make_instance(rng, 2, {6, 5}, 3, 0.3);
  CgOptions cg{1e-8, 2000};
  PseudoValueSolution cold = solve_pseudovalues(in.spec, in.grid, in.mask, in.y_r, in.sigma2, cg);
  PseudoValueSolution warm = solve_pseudovalues(in.spec, in.grid, in.mask, in.y_r, in.sigma2, cg, &cold.y_g);
  CHECK(warm.iterations < cold.iterations);
  CHECK(warm.residual <= cg.tolerance);
}

}
