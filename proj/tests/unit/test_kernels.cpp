/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include <doctest.h>

#include <cmath>

#include "kgp/error.hpp"
#include "kgp/json_io.hpp"
#include "kgp/kernels.hpp"
#include "support.hpp"

using namespace kgp;
using kgp::test::max_rel;
using kgp::test::vec;

namespace {

// Plain loops, independent of the Eigen expression used by forward().
Matrix manual_forward(const FeatureMap& m, const Matrix& x) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(m.output_dim()));
  for (Eigen::Index p = 0; p < x.rows(); ++p) {
    std::vector<double> h(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      double v = x(p, c);
      if (m.input_shift.size()) v = (v - m.input_shift[c]) * m.input_scale[c];
      h[static_cast<std::size_t>(c)] = v;
    }
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      const Matrix& w = m.weights[l];
      std::vector<double> next(static_cast<std::size_t>(w.rows()));
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        double acc = m.biases[l][r];
        for (Eigen::Index c = 0; c < w.cols(); ++c) acc += w(r, c) * h[static_cast<std::size_t>(c)];
        if (l + 1 < m.weights.size()) {
          if (m.activation == Activation::relu) acc = acc > 0 ? acc : 0;
          if (m.activation == Activation::tanh) acc = std::tanh(acc);
        }
        next[static_cast<std::size_t>(r)] = acc;
      }
      h = next;
    }
    for (std::size_t c = 0; c < h.size(); ++c) out(p, static_cast<Eigen::Index>(c)) = h[c];
  }
  return out;
}

Vector stack(const ProductGrid& g, const std::vector<Eigen::Index>& idx) {
  Vector z(static_cast<Eigen::Index>(g.input_dim()));
  Eigen::Index col = 0;
  for (std::size_t k = 0; k < g.axes.size(); ++k) {
    auto d = static_cast<Eigen::Index>(g.axes[k].dim());
    z.segment(col, d) = g.axes[k].points.row(idx[k]).transpose();
    col += d;
  }
  return z;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("feature map forward pass") {
  std::mt19937_64 rng(11);
  Matrix pts = kgp::test::random_matrix(rng, 3, 2);
  CHECK(FeatureMap::identity(2).forward(pts) == pts);

  FeatureMap lin = FeatureMap::network(2, {}, 2, Activation::identity, 1);
  lin.weights[0] = 2.0 * Matrix::Identity(2, 2);
  CHECK(lin.forward(pts).isApprox(2.0 * pts));

  FeatureMap relu = FeatureMap::network(1, {4}, 2, Activation::relu, 99);
  relu.biases[0] = vec({0.1, -0.2, 0.3, -0.05});
  relu.biases[1] = vec({0.5, -0.5});
  Matrix x(3, 1);
  x << -1.0, 0.25, 2.0;
  CHECK(max_rel(Eigen::Map<const Vector>(relu.forward(x).data(), 6),
                Eigen::Map<const Vector>(manual_forward(relu, x).data(), 6)) <= 1e-12);

  FeatureMap deep = FeatureMap::network(3, {5, 4}, 2, Activation::tanh, 5);
  Matrix y = kgp::test::random_matrix(rng, 7, 3);
  deep.fit_input_normalization(y);
  Matrix a = deep.forward(y), b = manual_forward(deep, y);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("feature map initialization is deterministic and bounded") {
  FeatureMap a = FeatureMap::network(3, {16, 16}, 2, Activation::relu, 42);
  FeatureMap b = FeatureMap::network(3, {16, 16}, 2, Activation::relu, 42);
  FeatureMap c = FeatureMap::network(3, {16, 16}, 2, Activation::relu, 43);
  CHECK(a.weights[1] == b.weights[1]);
  CHECK(a.weights[1] != c.weights[1]);
  CHECK(a.weights[0].cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 19.0));
  CHECK(a.biases[2].isZero());
  CHECK(a.parameter_count() == 3 * 16 + 16 + 16 * 16 + 16 + 16 * 2 + 2);
  CHECK(a.layer_sizes() == std::vector<std::size_t>{3, 16, 16, 2});

  std::vector<double> p(a.parameter_count());
  a.get_parameters(p.data());
  FeatureMap d = c;
  d.set_parameters(p.data());
  CHECK(d.weights[2] == a.weights[2]);
}

TEST_CASE("normalization maps the training range to [-1, 1]") {
  FeatureMap m = FeatureMap::network(1, {}, 1, Activation::identity, 0);
  m.weights[0] = Matrix::Identity(1, 1);
  Matrix x(3, 1);
  x << 0.0, 50.0, 100.0;
  m.fit_input_normalization(x);
  Matrix out = m.forward(x);
  CHECK(out(0, 0) == doctest::Approx(-1.0));
  CHECK(out(1, 0) == doctest::Approx(0.0));
  CHECK(out(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("diverged weights raise a numerical error") {
  FeatureMap m = FeatureMap::network(1, {2}, 1, Activation::identity, 0);
  m.weights[0](0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(m.forward(Matrix::Ones(1, 1)), NumericalError);
  CHECK_THROWS_AS(m.forward(Matrix::Ones(1, 2)), DimensionError);
}

TEST_CASE("base kernel closed forms") {
  FactorKernel f;
  f.map = FeatureMap::identity(1);
  f.base.family = KernelFamily::matern52;
  f.base.log_outputscale = std::log(2.5);
  Matrix p = Matrix::Constant(1, 1, 0.3);
  CHECK(f.gram(p, p)(0, 0) == doctest::Approx(2.5).epsilon(1e-15));

  f.base.family = KernelFamily::squared_exponential;
  f.base.log_outputscale = std::log(3.0);
  Matrix two(2, 1);
  two << 0.0, 1.0;
  Matrix g = f.gram(two, two);
  CHECK(g(0, 1) == doctest::Approx(3.0 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(g(1, 0) == g(0, 1));

  f.base.family = KernelFamily::matern52;
  f.base.log_outputscale = 0.0;
  f.base.log_lengthscales = vec({std::log(2.0)});
  double r = 0.5, s5 = std::sqrt(5.0);
  CHECK(f.gram(two, two)(0, 1) == doctest::Approx((1 + s5 * r + 5 * r * r / 3) * std::exp(-s5 * r)).epsilon(1e-14));
}

TEST_CASE("gram through a random feature map matches the composed oracle") {
  std::mt19937_64 rng(12);
  FactorKernel f;
  f.map = FeatureMap::network(1, {}, 2, Activation::identity, 17);
  f.map.biases[0] = vec({0.3, -0.1});
  f.base.log_lengthscales = vec({-0.2, 0.4});
  Matrix a = kgp::test::random_matrix(rng, 4, 1), b = kgp::test::random_matrix(rng, 3, 1);
  Matrix g = f.gram(a, b);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      double acc = 0;
      for (Eigen::Index d = 0; d < 2; ++d) {
        double u = f.map.weights[0](d, 0) * a(i, 0) + f.map.biases[0][d];
        double v = f.map.weights[0](d, 0) * b(j, 0) + f.map.biases[0][d];
        double diff = (u - v) / std::exp(f.base.log_lengthscales[d]);
        acc += diff * diff;
      }
      CHECK(std::abs(g(i, j) - std::exp(-acc)) <= 1e-12);
    }
}

TEST_CASE("gram matrices are symmetric and PSD after jitter") {
  std::mt19937_64 rng(13);
  for (auto family : {KernelFamily::squared_exponential, KernelFamily::matern52}) {
    ProductGrid g = kgp::test::random_grid(rng, 6, 2, {15}, 9);
    ProductKernelSpec spec = kgp::test::random_spec(rng, g, family, true);
    for (std::size_t k = 0; k < g.axes.size(); ++k) {
      Matrix m = training_factor(spec, g, k);
      CHECK((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * m.cwiseAbs().maxCoeff());
      double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(m).eigenvalues().minCoeff();
      CHECK(min_eig >= -1e-8 * m.trace() / static_cast<double>(m.rows()));
    }
  }
}

TEST_CASE("product covariance equals pairwise evaluation on the lattice") {
  std::mt19937_64 rng(14);
  for (auto family : {KernelFamily::squared_exponential, KernelFamily::matern52}) {
    ProductGrid g = kgp::test::random_grid(rng, 2, 1, {3}, 2);
    ProductKernelSpec spec = kgp::test::random_spec(rng, g, family, false);
    Matrix dense = kron_dense(product_covariance(spec, g));
    Matrix pts = g.lattice_points();
    CHECK(dense.rows() == 12);
    double err = 0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      for (Eigen::Index j = 0; j < pts.rows(); ++j)
        err = std::max(err, std::abs(dense(i, j) - spec.evaluate(pts.row(i).transpose(), pts.row(j).transpose())));
    CHECK(err <= 1e-12);
  }

  ProductGrid big = kgp::test::random_grid(rng, 4, 2, {5, 3}, 3);
  ProductKernelSpec spec = kgp::test::random_spec(rng, big, KernelFamily::matern52, false);
  Matrix dense = kron_dense(product_covariance(spec, big));
  Matrix pts = big.lattice_points();
  double err = 0;
  for (Eigen::Index i = 0; i < pts.rows(); i += 7)
    for (Eigen::Index j = 0; j < pts.rows(); ++j)
      err = std::max(err, std::abs(dense(i, j) - spec.evaluate(pts.row(i).transpose(), pts.row(j).transpose())));
  CHECK(err <= 1e-12);

  ProductGrid single = kgp::test::random_grid(rng, 1, 2, {4}, 0);
  KronOperator op = product_covariance(stationary_spec(single, KernelFamily::squared_exponential), single);
  CHECK(op.factors[0].rows() == 1);
  CHECK(op.factors[0](0, 0) == doctest::Approx(1.0));
}

TEST_CASE("cross covariance") {
  std::mt19937_64 rng(15);
  ProductGrid train = kgp::test::random_grid(rng, 3, 2, {4}, 3);
  ProductKernelSpec spec = kgp::test::random_spec(rng, train, KernelFamily::matern52, true);
  KronOperator same = cross_covariance(spec, train, train);
  KronOperator cov = product_covariance(spec, train);
  for (std::size_t k = 0; k < cov.factors.size(); ++k) CHECK(same.factors[k] == cov.factors[k]);

  ProductGrid one = train;
  for (std::size_t k = 0; k < one.axes.size(); ++k) one.axes[k].points = train.axes[k].points.row(1);
  Matrix row = kron_dense(cross_covariance(spec, train, one));
  Matrix dense = kron_dense(cov);
  Eigen::Index flat = ((1 * 4) + 1) * 3 + 1;
  CHECK((row.row(0) - dense.row(flat)).cwiseAbs().maxCoeff() <= 1e-14);

  ProductGrid test = kgp::test::random_grid(rng, 2, 2, {3}, 2);
  Matrix cross = kron_dense(cross_covariance(spec, train, test));
  Matrix tp = test.lattice_points(), zp = train.lattice_points();
  double err = 0;
  for (Eigen::Index i = 0; i < tp.rows(); ++i)
    for (Eigen::Index j = 0; j < zp.rows(); ++j)
      err = std::max(err, std::abs(cross(i, j) - spec.evaluate(tp.row(i).transpose(), zp.row(j).transpose())));
  CHECK(err <= 1e-12);
}

TEST_CASE("identity-map deep product kernel equals the stationary product kernel") {
  std::mt19937_64 rng(16);
  ProductGrid g = kgp::test::random_grid(rng, 3, 2, {4, 2}, 3);
  ProductKernelSpec spec = kgp::test::random_spec(rng, g, KernelFamily::squared_exponential, false);
  Matrix pts = g.lattice_points();
  for (int trial = 0; trial < 40; ++trial) {
    Eigen::Index i = static_cast<Eigen::Index>(rng() % pts.rows()), j = static_cast<Eigen::Index>(rng() % pts.rows());
    double expect = spec.outputscale();
    Eigen::Index col = 0;
    for (const auto& f : spec.factors) {
      double r2 = 0;
      for (Eigen::Index d = 0; d < static_cast<Eigen::Index>(f.base.dim()); ++d) {
        double diff = (pts(i, col + d) - pts(j, col + d)) / std::exp(f.base.log_lengthscales[d]);
        r2 += diff * diff;
      }
      expect *= std::exp(-r2);
      col += static_cast<Eigen::Index>(f.base.dim());
    }
    CHECK(std::abs(spec.evaluate(pts.row(i).transpose(), pts.row(j).transpose()) - expect) <= 1e-12);
  }
}

TEST_CASE("SE product of deep factors is an SE kernel on concatenated features") {
  std::mt19937_64 rng(17);
  ProductGrid g = kgp::test::random_grid(rng, 3, 2, {4}, 3);
  ProductKernelSpec spec = kgp::test::random_spec(rng, g, KernelFamily::squared_exponential, true);
  spec.factors[0].base.log_outputscale = 0.0;
  auto phi = [&](const Vector& z) {
    std::vector<double> out;
    Eigen::Index col = 0;
    for (const auto& f : spec.factors) {
      auto d = static_cast<Eigen::Index>(f.map.input_dim);
      Matrix lat = f.latent(z.segment(col, d).transpose());
      for (Eigen::Index c = 0; c < lat.cols(); ++c) out.push_back(lat(0, c) / std::exp(f.base.log_lengthscales[c]));
      col += d;
    }
    return out;
  };
  std::uniform_real_distribution<double> u(-0.5, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    Vector z1(static_cast<Eigen::Index>(g.input_dim())), z2(z1.size());
    for (Eigen::Index c = 0; c < z1.size(); ++c) {
      z1[c] = u(rng);
      z2[c] = u(rng);
    }
    auto a = phi(z1), b = phi(z2);
    double r2 = 0;
    for (std::size_t c = 0; c < a.size(); ++c) r2 += (a[c] - b[c]) * (a[c] - b[c]);
    CHECK(std::abs(spec.evaluate(z1, z2) - std::exp(-r2)) <= 1e-12);
  }
}

TEST_CASE("kernel values lie in (0, outputscale]") {
  std::mt19937_64 rng(18);
  ProductGrid g = kgp::test::random_grid(rng, 4, 1, {6}, 4);
  for (auto family : {KernelFamily::squared_exponential, KernelFamily::matern52}) {
    ProductKernelSpec spec = kgp::test::random_spec(rng, g, family, true);
    Matrix dense = kron_dense(product_covariance(spec, g));
    CHECK(dense.minCoeff() > 0.0);
    CHECK(dense.maxCoeff() <= spec.outputscale() * (1 + 1e-15));
    Vector z = stack(g, {1, 2, 3});
    CHECK(spec.evaluate(z, z) == spec.outputscale());
  }
}

TEST_CASE("spec validation") {
  std::mt19937_64 rng(19);
  ProductGrid g = kgp::test::random_grid(rng, 2, 1, {3}, 0);
  ProductKernelSpec spec = stationary_spec(g, KernelFamily::matern52);
  CHECK_NOTHROW(spec.validate());
  spec.factors[1].base.log_outputscale = 0.5;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec.factors[1].base.log_outputscale = 0.0;
  spec.factors[1].base.log_lengthscales = vec({0.0, 0.0});
  CHECK_THROWS_AS(spec.validate(), ValidationError);

  ProductKernelSpec short_spec = stationary_spec(g, KernelFamily::matern52);
  short_spec.factors.pop_back();
  CHECK_THROWS_AS(product_covariance(short_spec, g), ValidationError);
  CHECK_THROWS_AS(kernel_family_from_string("rbf"), ValidationError);
}

TEST_CASE("deep spec shapes") {
  std::mt19937_64 rng(20);
  ProductGrid g = kgp::test::random_grid(rng, 5, 2, {8}, 6);
  ProductKernelSpec spec = deep_spec(g, KernelFamily::matern52, DeepKernelLayout{}, 3);
  CHECK(spec.factors[0].map.output_dim() == 2);
  CHECK(spec.factors[1].map.output_dim() == 2);
  CHECK(spec.factors[2].map.layer_sizes() == std::vector<std::size_t>{1, 16, 16, 2});
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("kernel spec JSON round trip") {
  std::mt19937_64 rng(21);
  ProductGrid g = kgp::test::random_grid(rng, 3, 2, {4}, 3);
  ProductKernelSpec spec = kgp::test::random_spec(rng, g, KernelFamily::matern52, true);
  ProductKernelSpec back = kernel_spec_from_json(Json::parse(to_json(spec).dump()));
  CHECK(kron_dense(product_covariance(back, g)) == kron_dense(product_covariance(spec, g)));
  ProductGrid g2 = grid_from_json(Json::parse(to_json(g).dump()));
  CHECK(g2.axes[0].points == g.axes[0].points);
  CHECK(g2.axes[2].role == AxisRole::temporal);

  Json bad = to_json(spec);
  bad["factors"][0]["colour"] = 1;
  CHECK_THROWS_AS(kernel_spec_from_json(bad), ValidationError);
}

}
