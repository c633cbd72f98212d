/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include <doctest.h>

#include <cmath>

#include "kgp/dense_gp.hpp"
#include "kgp/error.hpp"
#include "kgp/grid_gp.hpp"
#include "kgp/params.hpp"
#include "kgp/training.hpp"
#include "support.hpp"

using namespace kgp;
using kgp::test::vec;

TEST_SUITE("training") {

TEST_CASE("pack and unpack round trip") {
  std::mt19937_64 rng(61);
  ProductGrid g = kgp::test::random_grid(rng, 3, 2, {4}, 3);
  ProductKernelSpec spec = kgp::test::random_spec(rng, g, KernelFamily::matern52, true);
  ParamSchema schema = ParamSchema::for_spec(spec);
  std::size_t expected = 1;
  for (const auto& f : spec.factors) expected += f.base.dim() + f.map.parameter_count();
  CHECK(schema.size == expected + 1);
  Vector theta = pack(schema, spec, 0.07);
  CHECK(theta[theta.size() - 1] == doctest::Approx(std::log(0.07)));
  ProductKernelSpec other = kgp::test::random_spec(rng, g, KernelFamily::matern52, true);
  double s2 = 0;
  unpack(schema, theta, other, s2);
  CHECK(pack(schema, other, s2) == theta);
  CHECK(schema.label(0) == "factor 0 log_lengthscale[0]");
  CHECK(schema.label(schema.size - 1) == "log_noise");
  CHECK(schema.segment_of(2).kind == ParamKind::log_outputscale);
}

TEST_CASE("finite differences on calibration functions") {
  Vector theta = vec({0.5, -1.25, 2.0});
  Vector g = grad_fd([](const Vector& t) { return t.squaredNorm(); }, theta, 1e-5);
  CHECK((g - 2.0 * theta).cwiseAbs().maxCoeff() <= 1e-9);

  std::vector<bool> frozen{false, true, false};
  int calls = 0;
  Vector gf = grad_fd(
      [&](const Vector& t) {
        ++calls;
        return t[0] * t[0] + 3.0 * t[2];
      },
      theta, 1e-5, &frozen);
  CHECK(gf[1] == 0.0);
  CHECK(gf[2] == doctest::Approx(3.0));
  CHECK(calls == 4);

  try {
    grad_fd([](const Vector& t) { return t[1] > 0 ? std::nan("") : 0.0; }, vec({0.0, 0.0}), 1e-5, nullptr,
            [](std::size_t i) { return "coord " + std::to_string(i); });
    FAIL("expected error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("coord 1") != std::string::npos);
  }
}

TEST_CASE("grid objective equals the dense oracle and is deterministic") {
  std::mt19937_64 rng(62);
  ProductGrid g = kgp::test::random_grid(rng, 2, 1, {4}, 3);
  ProductKernelSpec spec = kgp::test::random_spec(rng, g, KernelFamily::matern52, false);
  FieldTensor y = kgp::test::random_targets(rng, g);
  GridObjective obj(spec, GridProblem{g, y});
  Vector theta = pack(obj.schema(), spec, 0.02);
  double a = obj.value(theta), b = obj.value(theta);
  CHECK(a == b);
  double d = dense_nlml(kgp::test::dense_on_grid(spec, g, y, 0.02));
  CHECK(std::abs(a - d) <= 1e-8 * std::abs(d));
}

TEST_CASE("quadratic term decreases with noise") {
  std::mt19937_64 rng(63);
  ProductGrid g = kgp::test::random_grid(rng, 2, 1, {4}, 2);
  ProductKernelSpec spec = kgp::test::random_spec(rng, g, KernelFamily::matern52, false);
  FieldTensor y = kgp::test::random_targets(rng, g);
  double q1 = grid_nlml_terms(spec, g, y, std::exp(1.0)).quadratic;
  double q2 = grid_nlml_terms(spec, g, y, std::exp(2.0)).quadratic;
  CHECK(q2 < q1);
}

TEST_CASE("cached grid gradient equals plain central differences") {
  std::mt19937_64 rng(64);
  ProductGrid g = kgp::test::random_grid(rng, 3, 2, {5}, 3);
  ProductKernelSpec spec = kgp::test::random_spec(rng, g, KernelFamily::squared_exponential, true);
  FieldTensor y = kgp::test::random_targets(rng, g);
  GridObjective obj(spec, GridProblem{g, y});
  Vector theta = pack(obj.schema(), spec, 0.05);
  Vector fast = obj.gradient(theta, 1e-5);
  Vector plain = grad_fd([&](const Vector& t) { return obj.value(t); }, theta, 1e-5);
  CHECK((fast - plain).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, plain.cwiseAbs().maxCoeff()));
  Vector dense = dense_nlml_grad_fd(kgp::test::dense_on_grid(spec, g, y, 0.05), theta);
  CHECK((fast - dense).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, dense.cwiseAbs().maxCoeff()));
}

TEST_CASE("gappy gradient with warm starts equals plain central differences") {
  std::mt19937_64 rng(65);
  ProductGrid g = kgp::test::random_grid(rng, 2, 1, {5, 4}, 2);
  ProductKernelSpec spec = kgp::test::random_spec(rng, g, KernelFamily::matern52, false);
  GappyMask mask = kgp::test::random_mask(rng, g.spatial_shape(), 0.3);
  LiftedMask l = lift_mask(mask, 2, 2);
  Vector y_r = kgp::test::random_vector(rng, static_cast<Eigen::Index>(l.regular.size()));
  CgOptions cg{1e-11, 5000};
  GappyObjective obj(spec, GappyProblem{g, mask, y_r}, cg);
  Vector theta = pack(obj.schema(), spec, 0.05);
  double f = obj.value(theta);
  CHECK(f == doctest::Approx(gappy_nlml(spec, g, mask, y_r, 0.05, cg)).epsilon(1e-10));
  CHECK(obj.last_cg_iterations() > 0);
  Vector fast = obj.gradient(theta, 1e-5);
  Vector plain = grad_fd([&](const Vector& t) { return gappy_nlml(
      [&] { ProductKernelSpec s = spec; double s2; unpack(obj.schema(), t, s, s2); return s; }(), g, mask, y_r,
      std::exp(t[t.size() - 1]), cg); }, theta, 1e-5);
  CHECK((fast - plain).cwiseAbs().maxCoeff() <= 1e-5 * std::max(1.0, plain.cwiseAbs().maxCoeff()));
}

TEST_CASE("Adam recursion") {
  ParamSchema schema;
  schema.segments = {{0, ParamKind::log_lengthscale, 0, 2}, {0, ParamKind::feature_weights, 2, 2}};
  schema.size = 4;
  TrainConfig cfg;
  cfg.weight_decay = 0.1;

  SUBCASE("constant gradient, one step from zero moments") {
    AdamState st;
    Vector theta = Vector::Zero(4);
    Vector g = vec({0.3, -2.0, 0.0, 0.0});
    Vector next = adam_step(st, theta, g, cfg, schema, 0.01);
    CHECK(next[0] == doctest::Approx(-0.01 * 0.3 / (0.3 + 1e-8)));
    CHECK(next[1] == doctest::Approx(0.01 * 2.0 / (2.0 + 1e-8)));
    CHECK(next[2] == 0.0);
  }
  SUBCASE("zero gradient moves only feature weights") {
    AdamState st;
    Vector theta = vec({1.0, -1.0, 0.5, -0.5});
    for (int i = 0; i < 10; ++i) theta = adam_step(st, theta, Vector::Zero(4), cfg, schema, 0.01);
    CHECK(theta[0] == 1.0);
    CHECK(theta[1] == -1.0);
    CHECK(theta[2] < 0.5);
    CHECK(theta[3] > -0.5);
  }
  SUBCASE("quadratic calibration converges monotonically after burn-in") {
    ParamSchema plain;
    plain.segments = {{0, ParamKind::log_lengthscale, 0, 3}};
    plain.size = 3;
    AdamState st;
    Vector theta = vec({1.0, -0.8, 0.6});
    std::vector<double> norms;
    for (int i = 0; i < 50; ++i) {
      theta = adam_step(st, theta, 2.0 * theta, cfg, plain, 0.01);
      norms.push_back(theta.norm());
    }
    for (std::size_t i = 6; i < norms.size(); ++i) CHECK(norms[i] < norms[i - 1]);
  }
}

TEST_CASE("learning rate schedule") {
  TrainConfig cfg;
  CHECK(scheduled_learning_rate(cfg, 500) == cfg.learning_rate);
  cfg.step_decay = StepDecay{100, 0.8};
  CHECK(scheduled_learning_rate(cfg, 99) == cfg.learning_rate);
  CHECK(scheduled_learning_rate(cfg, 100) == doctest::Approx(0.8 * cfg.learning_rate));
  CHECK(scheduled_learning_rate(cfg, 250) == doctest::Approx(0.64 * cfg.learning_rate));
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = TrainConfig{};
  cfg.beta2 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("train returns the best iterate") {
  std::mt19937_64 rng(66);
  ProductGrid g = kgp::test::random_grid(rng, 3, 1, {6}, 4);
  ProductKernelSpec spec = kgp::test::random_spec(rng, g, KernelFamily::matern52, true);
  FieldTensor y = kgp::test::random_targets(rng, g);
  TrainConfig cfg;
  cfg.max_iters = 0;
  TrainResult zero = train(GridProblem{g, y}, spec, 0.1, cfg);
  CHECK(zero.trace.rows.empty());
  CHECK(zero.best_nlml == zero.initial_nlml);
  CHECK(zero.initial_nlml == doctest::Approx(grid_nlml(spec, g, y, 0.1)).epsilon(1e-14));
  CHECK(zero.sigma2 == doctest::Approx(0.1).epsilon(1e-14));

  cfg.max_iters = 15;
  cfg.learning_rate = 0.05;
  TrainResult r = train(GridProblem{g, y}, spec, 0.1, cfg);
  CHECK(r.best_nlml <= r.initial_nlml);
  CHECK(r.trace.rows.size() == 15);
  CHECK(grid_nlml(r.spec, g, y, r.sigma2) == doctest::Approx(r.best_nlml).epsilon(1e-12));
  TrainResult again = train(GridProblem{g, y}, spec, 0.1, cfg);
  CHECK(again.theta == r.theta);
  CHECK(r.trace.to_csv().rfind("iteration,nlml,grad_norm,seconds,cg_iters\n", 0) == 0);
}

TEST_CASE("gappy training records CG iterations") {
  std::mt19937_64 rng(67);
  ProductGrid g = kgp::test::random_grid(rng, 2, 1, {5, 4}, 2);
  ProductKernelSpec spec = kgp::test::random_spec(rng, g, KernelFamily::matern52, false);
  GappyMask mask = kgp::test::random_mask(rng, g.spatial_shape(), 0.3);
  Vector y_r = kgp::test::random_vector(rng, static_cast<Eigen::Index>(lift_mask(mask, 2, 2).regular.size()));
  TrainConfig cfg;
  cfg.max_iters = 5;
  TrainResult r = train(GappyProblem{g, mask, y_r}, spec, 0.05, cfg);
  CHECK(r.best_nlml <= r.initial_nlml);
  CHECK(r.trace.rows.front().cg_iters > 0);
  CHECK(r.pseudovalues.size() == static_cast<Eigen::Index>(lift_mask(mask, 2, 2).gaps.size()));
}

TEST_CASE("parameter budget is enforced") {
  std::mt19937_64 rng(68);
  ProductGrid g = kgp::test::random_grid(rng, 2, 1, {4}, 2);
  ProductKernelSpec spec = kgp::test::random_spec(rng, g, KernelFamily::matern52, true);
  TrainConfig cfg;
  cfg.fd_budget = 5;
  CHECK_THROWS_AS(train(GridProblem{g, kgp::test::random_targets(rng, g)}, spec, 0.1, cfg), ValidationError);
}

TEST_CASE("hyperparameter initialization") {
  Vector t = Vector::LinSpaced(5, 0.0, 4.0);
  ProductGrid g = make_grid(Vector::LinSpaced(3, 1.0, 2.0), {Vector::LinSpaced(4, 0.0, 100.0)}, &t);
  ProductKernelSpec spec = stationary_spec(g, KernelFamily::matern52);
  initialize_hyperparameters(spec, g, 2.5);
  CHECK(spec.factors[0].base.log_lengthscales[0] == doctest::Approx(std::log(0.5)));
  CHECK(spec.factors[1].base.log_lengthscales[0] == doctest::Approx(std::log(50.0)));
  CHECK(spec.factors[2].base.log_lengthscales[0] == doctest::Approx(std::log(2.0)));
  CHECK(spec.outputscale() == doctest::Approx(2.5));
  auto [mean, var] = target_moments(vec({1.0, std::nan(""), 3.0}));
  CHECK(mean == 2.0);
  CHECK(var == 1.0);
}

}
