/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <numbers>

#include "kgp/burgers.hpp"
#include "kgp/datagen.hpp"
#include "kgp/error.hpp"
#include "kgp/json_io.hpp"
#include "kgp/tensor_file.hpp"
#include "support.hpp"

using namespace kgp;
using kgp::test::vec;

namespace {

double at(const BurgersResult& r, Eigen::Index i, Eigen::Index l) {
  return r.field.values[i * r.t.size() + l];
}

}  // namespace

TEST_SUITE("datagen") {

TEST_CASE("Burgers initial and boundary data") {
  BurgersConfig cfg;
  cfg.M = 64;
  cfg.Nt = 12;
  cfg.mu1 = 5.0;
  cfg.mu2 = 0.02;
  BurgersResult r = burgers_solve(cfg);
  CHECK(r.field.shape == std::vector<std::size_t>{64, 12});
  for (Eigen::Index i = 0; i < 64; ++i) CHECK(at(r, i, 0) == 1.0);
  for (Eigen::Index l = 1; l < 12; ++l) CHECK(at(r, 0, l) == 5.0);
  CHECK(r.t[11] == doctest::Approx(35.0));
  CHECK(r.x[63] == doctest::Approx(100.0));
  CHECK(r.field.values.allFinite());
  CHECK(r.max_balance_residual <= 1e-8);
}

TEST_CASE("zero source decay: undisturbed region follows u = 1 + 0.02 t") {
  BurgersConfig cfg;
  cfg.M = 201;
  cfg.Nt = 6;
  cfg.T_final = 5.0;
  cfg.mu1 = 4.5;
  cfg.mu2 = 0.0;
  BurgersResult r = burgers_solve(cfg);
  for (Eigen::Index l = 0; l < 6; ++l)
    for (Eigen::Index i = 80; i < 201; ++i) CHECK(std::abs(at(r, i, l) - (1.0 + 0.02 * r.t[l])) <= 1e-12);
}

TEST_CASE("Burgers grid refinement converges") {
  std::vector<BurgersResult> runs;
  for (std::size_t m : {101, 201, 401, 801}) {
    BurgersConfig cfg;
    cfg.M = m;
    cfg.Nt = 2;
    cfg.T_final = 10.0;
    cfg.mu1 = 4.5;
    cfg.mu2 = 0.0;
    cfg.dt = 0.01;
    runs.push_back(burgers_solve(cfg));
  }
  // L1 difference between consecutive levels on the coarse nodes at the final time.
  std::vector<double> diffs;
  for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
    const auto& c = runs[k];
    const auto& f = runs[k + 1];
    double dx = 100.0 / static_cast<double>(c.x.size() - 1), s = 0.0;
    for (Eigen::Index i = 0; i < c.x.size(); ++i) s += std::abs(at(c, i, 1) - at(f, 2 * i, 1)) * dx;
    diffs.push_back(s);
  }
  for (std::size_t k = 0; k + 1 < diffs.size(); ++k) {
    double order = std::log2(diffs[k] / diffs[k + 1]);
    MESSAGE("observed L1 self-convergence order " << order);
    CHECK(order >= 0.8);
  }
}

TEST_CASE("Burgers step refinement and failures") {
  BurgersConfig cfg;
  cfg.M = 32;
  cfg.Nt = 3;
  cfg.T_final = 2.0;
  cfg.dt = 1.0;
  BurgersResult r = burgers_solve(cfg);
  CHECK(r.refinements > 0);
  cfg.dt = 1e6;
  CHECK_THROWS_AS(burgers_solve(cfg), NumericalError);
  cfg = BurgersConfig{};
  cfg.M = 2;
  CHECK_THROWS_AS(burgers_solve(cfg), ValidationError);
  CHECK_NOTHROW(check_burgers_box(5.0, 0.02));
  CHECK_THROWS_AS(check_burgers_box(4.0, 0.02), ValidationError);
  CHECK_THROWS_AS(check_burgers_box(5.0, 0.04), ValidationError);
}

TEST_CASE("Godunov flux cases") {
  CHECK(godunov_flux(2.0, 3.0) == 2.0);
  CHECK(godunov_flux(-3.0, -2.0) == 2.0);
  CHECK(godunov_flux(-1.0, 1.0) == 0.0);
  CHECK(godunov_flux(3.0, 1.0) == 4.5);
  CHECK(godunov_flux(1.0, -3.0) == 4.5);
}

TEST_CASE("embedding copies coincident sources") {
  Vector ax = Vector::LinSpaced(4, 0.0, 3.0), ay = Vector::LinSpaced(3, 0.0, 2.0);
  ScatteredSnapshot s;
  s.points.resize(12, 2);
  s.values.resize(12);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      s.points.row(i * 3 + j) << ax[i], ay[j];
      s.values[i * 3 + j] = 10.0 * static_cast<double>(i) + static_cast<double>(j);
    }
  Embedding e = embed_to_lattice(s, {ax, ay}, 0.5);
  CHECK(e.mask.gaps.empty());
  CHECK(e.field.values == s.values);
}

TEST_CASE("embedding of a dense linear field") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScatteredSnapshot s;
  s.points.resize(4000, 2);
  s.values.resize(4000);
  for (Eigen::Index i = 0; i < 4000; ++i) {
    s.points.row(i) << u(rng), u(rng);
    s.values[i] = s.points(i, 0) + 2.0 * s.points(i, 1);
  }
  Vector ax = Vector::LinSpaced(11, 0.0, 1.0);
  Embedding e = embed_to_lattice(s, {ax, ax}, 0.05);
  for (Eigen::Index i = 1; i < 10; ++i)
    for (Eigen::Index j = 1; j < 10; ++j) {
      double f = ax[i] + 2.0 * ax[j];
      CHECK(std::abs(e.field.values[i * 11 + j] - f) <= 1e-2 * 3.0);
    }
}

TEST_CASE("annulus cloud leaves the hole as gaps") {
  const double r_in = 0.5, r_out = 1.0, radius = 0.08;
  ScatteredSnapshot s = annulus_snapshot(vec({1.0, 0.5}), r_in, r_out, 6000, 3);
  Vector ax = Vector::LinSpaced(21, -1.0, 1.0);
  Embedding e = embed_to_lattice(s, {ax, ax}, radius);
  std::size_t checked = 0;
  for (Eigen::Index i = 0; i < 21; ++i)
    for (Eigen::Index j = 0; j < 21; ++j) {
      double r = std::hypot(ax[i], ax[j]);
      bool gap = std::isnan(e.field.values[i * 21 + j]);
      // Nodes well inside the hole are gaps; nodes well inside the ring are regular.
      if (r < r_in - radius - 1e-9) {
        CHECK(gap);
        ++checked;
      }
      if (r > r_in + 0.05 && r < r_out - 0.05) {
        CHECK_FALSE(gap);
        ++checked;
      }
    }
  CHECK(checked > 100);
  std::size_t nan_count = 0;
  for (Eigen::Index i = 0; i < e.field.values.size(); ++i) nan_count += std::isnan(e.field.values[i]);
  CHECK(nan_count == e.mask.gaps.size());
}

TEST_CASE("embedding errors") {
  ScatteredSnapshot s;
  s.points = Matrix::Constant(1, 1, 5.0);
  s.values = vec({1.0});
  Vector ax = Vector::LinSpaced(3, 0.0, 1.0);
  CHECK_THROWS_AS(embed_to_lattice(s, {ax}, 0.1), ValidationError);
  s.points = Matrix::Constant(1, 2, 0.5);
  CHECK_THROWS_AS(embed_to_lattice(s, {ax}, 0.1), DimensionError);
  s.points = Matrix::Constant(1, 1, 0.5);
  CHECK_THROWS_AS(embed_to_lattice(s, {ax}, 0.0), ValidationError);
  Embedding e = embed_to_lattice(s, {ax}, 0.1);
  CHECK(e.mask.regular == std::vector<std::size_t>{1});
}

TEST_CASE("analytic maps") {
  std::mt19937_64 rng(72);
  ScatteredSnapshot s;
  s.points = kgp::test::random_matrix(rng, 100, 2);
  s.values = kgp::test::random_vector(rng, 100);
  AnalyticMap id = AnalyticMap::affine(Matrix::Identity(2, 2), Vector::Zero(2));
  CHECK(apply_map(id, s, MapDirection::forward).points == s.points);

  AnalyticMap aff = AnalyticMap::affine(kgp::test::random_spd(rng, 2), kgp::test::random_vector(rng, 2));
  ScatteredSnapshot back = apply_map(aff, apply_map(aff, s, MapDirection::forward), MapDirection::inverse);
  CHECK((back.points - s.points).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(back.values == s.values);

  AnalyticMap ann = AnalyticMap::annulus(1.0, 2.0);
  Matrix p(1, 2);
  p << 1.0, 0.0;
  Matrix ref = ann.forward(p);
  CHECK(ref(0, 0) == 0.0);
  CHECK(ref(0, 1) == 0.0);

  ScatteredSnapshot ring = annulus_snapshot(vec({1.0}), 1.0, 2.0, 100, 9);
  ScatteredSnapshot rt = apply_map(ann, apply_map(ann, ring, MapDirection::forward), MapDirection::inverse);
  CHECK((rt.points - ring.points).cwiseAbs().maxCoeff() <= 1e-10);

  Matrix bad(3, 2);
  bad << 1.5, 0.0, 0.1, 0.1, 3.0, 0.0;
  try {
    ann.forward(bad);
    FAIL("expected domain error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("rows 1 2") != std::string::npos);
  }
}

TEST_CASE("annulus snapshots share their point cloud") {
  ScatteredSnapshot a = annulus_snapshot(vec({1.0, 0.2}), 0.5, 1.0, 50, 4);
  ScatteredSnapshot b = annulus_snapshot(vec({2.0, 0.4}), 0.5, 1.0, 50, 4);
  CHECK(a.points == b.points);
  CHECK(a.values != b.values);
}

TEST_CASE("PCA") {
  std::mt19937_64 rng(73);
  Matrix rank1 = kgp::test::random_vector(rng, 30) * kgp::test::random_vector(rng, 5).transpose();
  PcaResult r1 = pca_reduce(rank1, 3);
  CHECK(r1.explained_variance[0] / r1.explained_variance.sum() >= 1 - 1e-10);

  Matrix design = Matrix::Zero(4, 3);
  design(0, 1) = 3;
  design(1, 1) = -3;
  design(2, 2) = 1;
  design(3, 2) = -1;
  PcaResult ro = pca_reduce(design, 2);
  CHECK(std::abs(ro.basis(1, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(ro.basis(2, 1)) == doctest::Approx(1.0));

  Matrix x = kgp::test::random_matrix(rng, 20, 10);
  PcaResult full = pca_reduce(x, 10);
  CHECK((pca_reconstruct(full) - x).cwiseAbs().maxCoeff() <= 1e-10);
  for (Eigen::Index i = 1; i < 10; ++i) CHECK(full.explained_variance[i] <= full.explained_variance[i - 1]);

  PcaResult part = pca_reduce(x, 4);
  double err = (pca_reconstruct(part) - x).squaredNorm() / 20.0;
  double tail = full.singular_values.tail(6).squaredNorm() / 20.0;
  CHECK(err == doctest::Approx(tail).epsilon(1e-10));
  CHECK_THROWS_AS(pca_reduce(x, 11), ValidationError);
}

TEST_CASE("relative error") {
  Vector t = vec({1.0, -2.0, 3.0});
  CHECK(relative_error(t, t) == 0.0);
  CHECK(relative_error(t, Vector::Zero(3)) == 1.0);
  CHECK(relative_error(t, 1.01 * t) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK_THROWS_AS(relative_error(Vector::Zero(3), t), ValidationError);
}

TEST_CASE("Sobol points") {
  Matrix p = sobol_points(16, vec({4.25, 0.015}), vec({5.5, 0.03}));
  CHECK(p.rows() == 16);
  CHECK(p.col(0).minCoeff() >= 4.25);
  CHECK(p.col(0).maxCoeff() <= 5.5);
  CHECK(p.col(1).maxCoeff() <= 0.03);
  Matrix q = sobol_points(8, vec({4.25, 0.015}), vec({5.5, 0.03}));
  CHECK(q == p.topRows(8));
  // The engine skips the origin, so the first 15 points are the rest of a 16-point net.
  std::vector<int> hits(16, 0);
  hits[0] = 1;
  CHECK(p(0, 0) == doctest::Approx(4.875));
  for (Eigen::Index i = 0; i < 15; ++i) ++hits[static_cast<std::size_t>((p(i, 0) - 4.25) / 1.25 * 16)];
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}

}

TEST_SUITE("tensor_file") {

TEST_CASE("round trip with and without a mask") {
  std::mt19937_64 rng(81);
  TensorFileData d;
  d.tensor = FieldTensor({2, 3, 4}, kgp::test::random_vector(rng, 24));
  d.axis_roles = {"parameter", "spatial", "temporal"};
  TensorFileData back = decode_tensor(encode_tensor(d));
  CHECK(back.tensor.shape == d.tensor.shape);
  CHECK(back.tensor.values == d.tensor.values);
  CHECK(back.axis_roles == d.axis_roles);
  CHECK_FALSE(back.mask.has_value());

  std::vector<std::uint8_t> mask(24, 1);
  mask[5] = 0;
  d.tensor.values[5] = std::nan("");
  d.mask = mask;
  auto path = std::filesystem::temp_directory_path() / "kgp_tensor_roundtrip.kgpt";
  write_tensor_file(path.string(), d);
  TensorFileData f = read_tensor_file(path.string());
  CHECK(*f.mask == mask);
  CHECK(std::isnan(f.tensor.values[5]));
  CHECK(f.tensor.values[6] == d.tensor.values[6]);
  std::filesystem::remove(path);
}

TEST_CASE("header layout") {
  TensorFileData d;
  d.tensor = FieldTensor({2}, vec({1.0, 2.0}));
  std::string bytes = encode_tensor(d);
  auto nl = bytes.find('\n');
  Json h = Json::parse(bytes.substr(0, nl));
  CHECK(h["magic"] == "KGP1");
  CHECK(h["dtype"] == "f64le");
  CHECK(h["mask_present"] == false);
  CHECK(bytes.size() == nl + 1 + 16);
  double first;
  std::memcpy(&first, bytes.data() + nl + 1, 8);
  CHECK(first == 1.0);
}

TEST_CASE("reader rejects malformed files") {
  TensorFileData d;
  d.tensor = FieldTensor({2}, vec({1.0, 2.0}));
  std::string good = encode_tensor(d);
  std::string wrong_magic = good;
  wrong_magic.replace(wrong_magic.find("KGP1"), 4, "KGP2");
  CHECK_THROWS_AS(decode_tensor(wrong_magic), IoError);
  std::string wrong_dtype = good;
  wrong_dtype.replace(wrong_dtype.find("f64le"), 5, "f32le");
  CHECK_THROWS_AS(decode_tensor(wrong_dtype), IoError);
  CHECK_THROWS_AS(decode_tensor(good.substr(0, good.size() - 1)), IoError);
  CHECK_THROWS_AS(decode_tensor("no header"), IoError);

  d.mask = std::vector<std::uint8_t>{1, 1};
  std::string masked = encode_tensor(d);
  masked.back() = 2;
  CHECK_THROWS_AS(decode_tensor(masked), IoError);
  d.tensor.values[0] = std::nan("");
  CHECK_THROWS_AS(decode_tensor(encode_tensor(d)), IoError);
  CHECK_THROWS_AS(read_tensor_file("/nonexistent/file.kgpt"), IoError);
}

}
