/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "kgp/dense_gp.hpp"
#include "kgp/error.hpp"
#include "kgp/gappy_gp.hpp"
#include "kgp/grid_gp.hpp"

namespace kgp {

std::string to_string(VerifySuite suite) {
  switch (suite) {
    case VerifySuite::kron: return "kron";
    case VerifySuite::oracle: return "oracle";
    case VerifySuite::lemma1: return "lemma1";
    case VerifySuite::lemma2: return "lemma2";
    case VerifySuite::logdet: return "logdet";
  }
  return "kron";
}

VerifySuite verify_suite_from_string(const std::string& name) {
  for (auto s : {VerifySuite::kron, VerifySuite::oracle, VerifySuite::lemma1, VerifySuite::lemma2,
                 VerifySuite::logdet})
    if (to_string(s) == name) return s;
  throw UsageError("unknown verify suite '" + name + "' (expected kron, oracle, lemma1, lemma2 or logdet)");
}

std::string to_string(Perturbation p) {
  switch (p) {
    case Perturbation::none: return "none";
    case Perturbation::factor: return "factor";
    case Perturbation::pseudovalues: return "pseudovalues";
  }
  return "none";
}

Perturbation perturbation_from_string(const std::string& name) {
  for (auto p : {Perturbation::none, Perturbation::factor, Perturbation::pseudovalues})
    if (to_string(p) == name) return p;
  throw UsageError("unknown perturbation '" + name + "' (expected none, factor or pseudovalues)");
}

bool VerifyCheck::passed() const { return margin() >= 0.0; }

double VerifyCheck::margin() const {
  const double m = relation == Relation::at_most ? tolerance - value : value - tolerance;
  return std::isnan(m) ? -std::numeric_limits<double>::infinity() : m;
}

bool VerifyReport::all_passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed(); });
}

Json VerifyReport::to_json() const {
  Json cs = Json::array();
  for (const auto& c : checks) {
    const double margin = c.margin();
    cs.push_back({{"name", c.name},
                  {"instance", c.instance},
                  {"value", c.value},
                  {"tolerance", c.tolerance},
                  {"relation", c.relation == Relation::at_most ? "<=" : ">="},
                  {"margin", std::isfinite(margin) ? Json(margin) : Json(nullptr)},
                  {"pass", c.passed()}});
  }
  Json ms = Json::array();
  for (const auto& m : metrics) ms.push_back({{"name", m.name}, {"instance", m.instance}, {"value", m.value}});
  return {{"suite", kgp::to_string(suite)}, {"seed", seed},       {"perturbation", kgp::to_string(perturbation)},
          {"instances", instances},          {"passed", all_passed()}, {"seconds", seconds},
          {"checks", cs},                    {"metrics", ms}};
}

namespace {

using Rng = std::mt19937_64;

Matrix gaussian(Rng& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// max |a - b| / max(1, max |b|).
double rel_diff(const Matrix& a, const Matrix& b) { return max_abs(a - b) / std::max(1.0, max_abs(b)); }

/// max |a - b| / max |b|.
double rel_to_ref(const Matrix& a, const Matrix& b) { return max_abs(a - b) / std::max(1e-300, max_abs(b)); }

void perturb_entry(Matrix& m) { m(0, 0) += kPerturbationSize * std::max(1.0, max_abs(m)); }

Matrix axis_points(Rng& rng, std::size_t n, std::size_t dim, double hi) {
  std::uniform_real_distribution<double> u(0.0, hi);
  Matrix p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) p(i, j) = u(rng);
  return p;
}

ProductGrid random_grid(Rng& rng, std::size_t n_param, std::size_t param_dim, const std::vector<std::size_t>& spatial,
                        std::size_t n_time) {
  ProductGrid g;
  g.axes.push_back({AxisRole::parameter, axis_points(rng, n_param, param_dim, 1.0)});
  for (auto m : spatial) g.axes.push_back({AxisRole::spatial, axis_points(rng, m, 1, 2.0)});
  if (n_time) g.axes.push_back({AxisRole::temporal, axis_points(rng, n_time, 1, 1.5)});
  g.validate();
  return g;
}

ProductKernelSpec random_spec(Rng& rng, const ProductGrid& grid, KernelFamily family, bool networks) {
  std::uniform_real_distribution<double> u(-0.7, 0.3);
  ProductKernelSpec spec;
  for (const auto& axis : grid.axes) {
    FactorKernel f;
    if (networks) {
      std::size_t out = axis.role == AxisRole::parameter ? axis.dim() : 2;
      f.map = FeatureMap::network(axis.dim(), {5}, out, Activation::tanh, rng());
      f.map.fit_input_normalization(axis.points);
    } else {
      f.map = FeatureMap::identity(axis.dim());
    }
    f.base.family = family;
    f.base.log_lengthscales = Vector(static_cast<Eigen::Index>(f.map.output_dim()));
    for (Eigen::Index d = 0; d < f.base.log_lengthscales.size(); ++d) f.base.log_lengthscales[d] = u(rng);
    spec.factors.push_back(std::move(f));
  }
  spec.factors[0].base.log_outputscale = u(rng);
  return spec;
}

GappyMask random_mask(Rng& rng, const std::vector<std::size_t>& shape, double fraction) {
  const std::size_t m = shape_product(shape);
  std::size_t ng = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(m)));
  ng = std::clamp<std::size_t>(ng, 1, m - 1);
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint8_t> flags(m, 1);
  for (std::size_t i = 0; i < ng; ++i) flags[order[i]] = 0;
  return GappyMask::from_flags(shape, flags);
}

Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

Matrix select_block(const Matrix& m, const std::vector<std::size_t>& idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out(i, j) = m(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]),
                    static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]));
  return out;
}

Vector descending_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw_numerical("dense reference eigensolver failed");
  return es.eigenvalues().reverse();
}

// ---------------------------------------------------------------- kron suite

struct KronTrial {
  double mixed = 0, inverse = 0, transpose = 0, trace = 0, det = 0, vec = 0, hadamard = 0;
};

Matrix kron2(const Matrix& a, const Matrix& b) { return kron_dense(KronOperator{{a, b}}); }

KronTrial kron_trial(Rng& rng, bool perturb) {
  KronTrial t;
  auto dim = [&] { return static_cast<Eigen::Index>(pick(rng, 1, 4)); };
  const Eigen::Index p = dim(), q = dim(), r = dim(), s = dim(), u = dim(), v = dim();
  auto left = [&](Matrix a) {
    if (perturb) perturb_entry(a);
    return a;
  };

  // (A (x) B)(C (x) D) = AC (x) BD
  Matrix A = gaussian(rng, p, q), B = gaussian(rng, r, s), C = gaussian(rng, q, u), D = gaussian(rng, s, v);
  t.mixed = rel_diff(kron2(left(A), B) * kron2(C, D), kron2(A * C, B * D));

  // (A (x) B)^-1 = A^-1 (x) B^-1
  Matrix As = gaussian(rng, p, p), Bs = gaussian(rng, r, r);
  As.diagonal().array() += static_cast<double>(p) + 1.0;
  Bs.diagonal().array() += static_cast<double>(r) + 1.0;
  t.inverse = rel_diff(kron2(left(As), Bs).inverse(), kron2(As.inverse(), Bs.inverse()));

  // (A (x) B)^T = A^T (x) B^T
  t.transpose = rel_diff(kron2(left(A), B).transpose(), kron2(A.transpose(), B.transpose()));

  // tr(A (x) B) = tr(A) tr(B)
  Matrix G = gaussian(rng, p, p), H = gaussian(rng, r, r);
  const double tr_ref = G.trace() * H.trace();
  t.trace = std::abs(kron2(left(G), H).trace() - tr_ref) / std::max(1.0, std::abs(tr_ref));

  // det(A (x) B) = det(A)^r det(B)^p for A p x p, B r x r
  const double det_ref = std::pow(G.determinant(), static_cast<double>(r)) *
                         std::pow(H.determinant(), static_cast<double>(p));
  t.det = std::abs(kron2(left(G), H).determinant() - det_ref) / std::max(1.0, std::abs(det_ref));

  // vec(C X B^T) = (B (x) C) vec(X), column-major vec. With X of size q x s,
  // column-major vec(X) is the row-major layout of X^T, whose axes pair with
  // B (u x s) and C (v x q) in that order.
  Matrix Cm = gaussian(rng, v, q), Bm = gaussian(rng, u, s), X = gaussian(rng, q, s);
  Matrix lhs = Cm * X * Bm.transpose();  // v x u
  FieldTensor xt({static_cast<std::size_t>(s), static_cast<std::size_t>(q)},
                 Eigen::Map<const Vector>(X.data(), X.size()));
  FieldTensor rhs = kron_matvec(KronOperator{{left(Bm), Cm}}, xt);
  t.vec = rel_diff(rhs.values, Eigen::Map<const Vector>(lhs.data(), lhs.size()));

  // (A (x) B) .* (C (x) D) = (A .* C) (x) (B .* D)
  Matrix A2 = gaussian(rng, p, q), C2 = gaussian(rng, p, q), B2 = gaussian(rng, r, s), D2 = gaussian(rng, r, s);
  t.hadamard = rel_diff(kron2(left(A2), B2).cwiseProduct(kron2(C2, D2)),
                        kron2(A2.cwiseProduct(C2), B2.cwiseProduct(D2)));
  return t;
}

void kron_suite(VerifyReport& report, Rng& rng, bool perturb) {
  constexpr std::size_t kTrials = 100;
  constexpr double kTol = 1e-10;
  KronTrial worst;
  for (std::size_t i = 0; i < kTrials; ++i) {
    KronTrial t = kron_trial(rng, perturb);
    worst.mixed = std::max(worst.mixed, t.mixed);
    worst.inverse = std::max(worst.inverse, t.inverse);
    worst.transpose = std::max(worst.transpose, t.transpose);
    worst.trace = std::max(worst.trace, t.trace);
    worst.det = std::max(worst.det, t.det);
    worst.vec = std::max(worst.vec, t.vec);
    worst.hadamard = std::max(worst.hadamard, t.hadamard);
  }
  report.instances = kTrials;
  const std::pair<const char*, double> rows[] = {
      {"mixed product", worst.mixed}, {"inverse", worst.inverse}, {"transpose", worst.transpose},
      {"trace", worst.trace},         {"determinant", worst.det}, {"vec", worst.vec},
      {"hadamard", worst.hadamard}};
  for (const auto& [name, value] : rows)
    report.checks.push_back({std::string(name) + " (worst of 100 trials)", 0, value, kTol, Relation::at_most});
}

// -------------------------------------------------------------- oracle suite

void oracle_suite(VerifyReport& report, Rng& rng, bool perturb) {
  constexpr std::size_t kInstances = 20;
  constexpr double kTol = 1e-8;
  for (std::size_t i = 0; i < kInstances; ++i) {
    const KernelFamily family = i % 2 ? KernelFamily::matern52 : KernelFamily::squared_exponential;
    const bool networks = (i / 2) % 2 == 1;
    const std::size_t n_param = pick(rng, 2, 4), param_dim = pick(rng, 1, 2);
    std::vector<std::size_t> spatial{pick(rng, 3, 6)};
    if (i % 3 == 0) spatial.push_back(pick(rng, 2, 4));
    const std::size_t n_time = i % 4 == 3 ? 0 : pick(rng, 2, 5);
    ProductGrid grid = random_grid(rng, n_param, param_dim, spatial, n_time);
    if (grid.size() > 500) throw_numerical("oracle instance exceeds 500 points");
    ProductKernelSpec spec = random_spec(rng, grid, family, networks);
    const double sigma2 = std::exp(std::uniform_real_distribution<double>(std::log(1e-3), std::log(0.5))(rng));
    FieldTensor y(grid.shape(), gaussian(rng, static_cast<Eigen::Index>(grid.size()), 1));
    std::vector<std::size_t> test_spatial;
    for (auto m : spatial) test_spatial.push_back(std::max<std::size_t>(2, m - 1));
    ProductGrid test = random_grid(rng, 2, param_dim, test_spatial, n_time ? 2 : 0);

    KronOperator cov = training_covariance(spec, grid);
    if (perturb) perturb_entry(cov.factors[0]);
    EigFactors eig = eig_factors(cov);
    FittedModel model = fit_from_eig(spec, grid, cov, eig, y, sigma2, 0.0);
    const double nlml = nlml_terms_from_eig(eig, y, sigma2).total();
    FieldTensor mean = predict_mean(model, test);
    FieldTensor var = predict_var(model, test).variance;

    DenseGP gp(grid.lattice_points(), y.values, spec, sigma2);
    const double dense = dense_nlml(gp);
    DensePrediction dp = dense_predict(gp, test.lattice_points());

    report.checks.push_back({"nlml relative error", i, std::abs(nlml - dense) / std::abs(dense), kTol, Relation::at_most});
    report.checks.push_back({"mean relative error", i, rel_to_ref(mean.values, dp.mean), kTol, Relation::at_most});
    report.checks.push_back({"variance relative error", i, rel_to_ref(var.values, dp.variance), kTol, Relation::at_most});
    report.metrics.push_back({"lattice points", i, static_cast<double>(grid.size())});
  }
  report.instances = kInstances;
}

// ------------------------------------------------------------- gappy suites

struct GappyInstance {
  ProductGrid grid;
  ProductKernelSpec spec;
  GappyMask mask;
  LiftedMask lifted;
  Vector y_r;
  double sigma2 = 0.0;
  double fraction = 0.0;
};

constexpr std::size_t kGappyInstances = 12;
const CgOptions kVerifyCg{1e-8, 5000};

GappyInstance gappy_instance(Rng& rng, std::size_t i) {
  static const double fractions[] = {0.1, 0.3, 0.5};
  GappyInstance in;
  in.fraction = fractions[i % 3];
  const KernelFamily family = (i / 3) % 2 ? KernelFamily::squared_exponential : KernelFamily::matern52;
  const bool networks = i >= 6 && i % 2 == 1;
  in.grid = random_grid(rng, pick(rng, 2, 3), pick(rng, 1, 2), {pick(rng, 4, 6), pick(rng, 3, 5)}, pick(rng, 2, 3));
  if (in.grid.size() > 400) throw_numerical("gappy instance exceeds 400 points");
  in.spec = random_spec(rng, in.grid, family, networks);
  in.mask = random_mask(rng, in.grid.spatial_shape(), in.fraction);
  in.lifted = lift_mask(in.mask, in.grid.parameter_count(), in.grid.time_count());
  in.y_r = gaussian(rng, static_cast<Eigen::Index>(in.lifted.regular.size()), 1);
  in.sigma2 = std::exp(std::uniform_real_distribution<double>(std::log(1e-2), std::log(0.2))(rng));
  return in;
}

/// Structured solve with the perturbation hooks applied.
struct GappySolve {
  KronOperator cov;
  EigFactors eig;
  PseudoValueSolution pseudo;
  Vector full;
  FieldTensor alpha;
};

std::vector<GappyInstance> gappy_instances(std::uint64_t seed) {
  Rng rng(seed * 1000003ULL + 3);
  std::vector<GappyInstance> out;
  for (std::size_t i = 0; i < kGappyInstances; ++i) out.push_back(gappy_instance(rng, i));
  return out;
}

GappySolve gappy_solve(const GappyInstance& in, Perturbation perturbation) {
  GappySolve s;
  s.cov = training_covariance(in.spec, in.grid);
  if (perturbation == Perturbation::factor) perturb_entry(s.cov.factors[0]);
  s.eig = eig_factors(s.cov);
  s.pseudo = solve_pseudovalues(s.eig, in.sigma2, in.lifted, in.y_r, kVerifyCg);
  if (perturbation == Perturbation::pseudovalues) s.pseudo.y_g.array() += kPerturbationSize;
  s.full = reconstruct(in.lifted, in.y_r, s.pseudo.y_g);
  s.alpha = inverse_apply(s.eig, in.sigma2, FieldTensor(in.grid.shape(), s.full));
  return s;
}

DenseGP regular_oracle(const GappyInstance& in) {
  return DenseGP(select_rows(in.grid.lattice_points(), in.lifted.regular), in.y_r, in.spec, in.sigma2);
}

void lemma1_suite(VerifyReport& report, Rng&, Perturbation perturbation) {
  const std::vector<GappyInstance> instances = gappy_instances(report.seed);
  for (std::size_t i = 0; i < kGappyInstances; ++i) {
    const GappyInstance& in = instances[i];
    GappySolve s = gappy_solve(in, perturbation);
    Vector ref = dense_alpha(regular_oracle(in));
    Vector alpha_r = gather(s.alpha.values, in.lifted.regular);
    Vector alpha_g = gather(s.alpha.values, in.lifted.gaps);
    const double scale = std::max(1.0, ref.cwiseAbs().maxCoeff());
    report.checks.push_back({"W alpha vs dense restricted solve (scaled)", i,
                             (alpha_r - ref).cwiseAbs().maxCoeff() / scale, 10.0 * kVerifyCg.tolerance,
                             Relation::at_most});
    report.checks.push_back({"max |V alpha|", i, alpha_g.cwiseAbs().maxCoeff(), 1e-6, Relation::at_most});
    report.metrics.push_back({"gap fraction", i, in.fraction});
    report.metrics.push_back({"cg iterations", i, static_cast<double>(s.pseudo.iterations)});
  }
  report.instances = kGappyInstances;
}

void lemma2_suite(VerifyReport& report, Rng& rng, Perturbation perturbation) {
  const std::vector<GappyInstance> instances = gappy_instances(report.seed);
  for (std::size_t i = 0; i < kGappyInstances; ++i) {
    const GappyInstance& in = instances[i];
    GappySolve s = gappy_solve(in, perturbation);
    GappyModel gm;
    gm.model = fit_from_eig(in.spec, in.grid, s.cov, s.eig, FieldTensor(in.grid.shape(), s.full), in.sigma2, 0.0);
    gm.mask = in.mask;
    gm.pseudo = s.pseudo;

    std::vector<std::size_t> test_spatial;
    for (auto m : in.grid.spatial_shape()) test_spatial.push_back(std::max<std::size_t>(2, m - 1));
    ProductGrid test = random_grid(rng, 2, in.grid.axes[0].dim(), test_spatial, in.grid.time_count());
    GappyMask test_mask = random_mask(rng, test.spatial_shape(), 0.3);
    LiftedMask tl = lift_mask(test_mask, test.parameter_count(), test.time_count());
    DensePrediction dp = dense_predict(regular_oracle(in), select_rows(test.lattice_points(), tl.regular));

    Vector mean = gappy_predict_mean(gm, test, test_mask);
    VarianceBounds b = gappy_predict_var_bounds(gm, test, test_mask);
    report.checks.push_back({"mean vs dense (scaled)", i,
                             (mean - dp.mean).cwiseAbs().maxCoeff() / std::max(1.0, dp.mean.cwiseAbs().maxCoeff()),
                             1e-6, Relation::at_most});
    report.checks.push_back({"min(dense - lower)", i, (dp.variance - b.lower).minCoeff(), -1e-8, Relation::at_least});
    report.checks.push_back({"min(upper - dense)", i, (b.upper - dp.variance).minCoeff(), -1e-8, Relation::at_least});
    report.checks.push_back({"min(upper - lower)", i, (b.upper - b.lower).minCoeff(), 0.0, Relation::at_least});
    report.metrics.push_back({"regular test points", i, static_cast<double>(tl.regular.size())});
    report.metrics.push_back({"mean bound width", i, (b.upper - b.lower).mean()});
  }
  report.instances = kGappyInstances;
}

void logdet_suite(VerifyReport& report, Rng&, Perturbation perturbation) {
  const std::vector<GappyInstance> instances = gappy_instances(report.seed);
  for (std::size_t i = 0; i < kGappyInstances; ++i) {
    const GappyInstance& in = instances[i];
    GappySolve s = gappy_solve(in, perturbation);
    const std::size_t n_r = in.lifted.regular.size();
    const auto ng = static_cast<Eigen::Index>(in.lifted.gaps.size());

    // Dense references use the unperturbed kernel; the structured side
    // carries any perturbation.
    DenseGP full_gp(in.grid.lattice_points(), Vector::Zero(static_cast<Eigen::Index>(in.grid.size())), in.spec,
                    in.sigma2);
    Matrix kz = full_gp.training_covariance();
    Matrix kr = select_block(kz, in.lifted.regular);
    Vector lam = s.eig.eigenvalue_tensor().values;
    std::sort(lam.data(), lam.data() + lam.size(), std::greater<double>());
    Vector sub = descending_eigenvalues(kr);
    double above = -std::numeric_limits<double>::infinity(), below = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < sub.size(); ++k) {
      above = std::max(above, sub[k] - lam[k]);
      below = std::max(below, lam[k + ng] - sub[k]);
    }
    report.checks.push_back({"max(lambda_sub_i - lambda_i)", i, above, 1e-8, Relation::at_most});
    report.checks.push_back({"max(lambda_{i+n_g} - lambda_sub_i)", i, below, 1e-8, Relation::at_most});

    Matrix kzy = kz;
    kzy.diagonal().array() += in.sigma2;
    Eigen::LLT<Matrix> full_llt(kzy);
    const double dense_full = 2.0 * Matrix(full_llt.matrixL()).diagonal().array().log().sum();
    const double structured_full = logdet_from_eigs(s.eig, in.sigma2);
    report.checks.push_back({"full log-det relative error", i,
                             std::abs(structured_full - dense_full) / std::max(1.0, std::abs(dense_full)), 1e-8,
                             Relation::at_most});

    Matrix kry = kr;
    kry.diagonal().array() += in.sigma2;
    Eigen::LLT<Matrix> llt(kry);
    if (llt.info() != Eigen::Success) throw_numerical("dense restricted covariance is not positive definite");
    const double exact = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
    const LogdetBounds bounds = interlacing_logdet_bounds(s.eig, in.sigma2, n_r);
    const double nys = nystrom_logdet(s.eig, in.sigma2, n_r);
    report.checks.push_back({"bounds.lower - nystrom", i, bounds.lower - nys, 1e-8, Relation::at_most});
    report.checks.push_back({"nystrom - bounds.upper", i, nys - bounds.upper, 1e-8, Relation::at_most});
    report.checks.push_back({"bounds.lower - exact", i, bounds.lower - exact, 1e-8, Relation::at_most});
    report.checks.push_back({"exact - bounds.upper", i, exact - bounds.upper, 1e-8, Relation::at_most});

    // Quadratic term through the pseudovalues: y_r^T W alpha = y_r^T K_r^-1 y_r.
    const double quad = 0.5 * in.y_r.dot(gather(s.alpha.values, in.lifted.regular));
    const double quad_ref = 0.5 * in.y_r.dot(llt.solve(in.y_r));
    report.checks.push_back({"quadratic term relative error", i,
                             std::abs(quad - quad_ref) / std::max(1.0, std::abs(quad_ref)), 1e-6, Relation::at_most});
    report.metrics.push_back({"nystrom absolute error", i, std::abs(nys - exact)});
    report.metrics.push_back({"exact log-det", i, exact});
    report.metrics.push_back({"gap fraction", i, in.fraction});
  }
  report.instances = kGappyInstances;
}

}  // namespace

VerifyReport run_verify(VerifySuite suite, std::uint64_t seed, Perturbation perturbation) {
  if (perturbation == Perturbation::pseudovalues && (suite == VerifySuite::kron || suite == VerifySuite::oracle))
    throw UsageError("the pseudovalues perturbation applies only to lemma1, lemma2 and logdet");
  VerifyReport report;
  report.suite = suite;
  report.seed = seed;
  report.perturbation = perturbation;
  // Each suite draws from its own stream. The gappy suites share their
  // instances, which come from a separate stream.
  const auto stream = static_cast<std::uint64_t>(suite) + 11;
  Rng rng(seed * 1000003ULL + stream);
  const auto start = std::chrono::steady_clock::now();
  switch (suite) {
    case VerifySuite::kron: kron_suite(report, rng, perturbation == Perturbation::factor); break;
    case VerifySuite::oracle: oracle_suite(report, rng, perturbation == Perturbation::factor); break;
    case VerifySuite::lemma1: lemma1_suite(report, rng, perturbation); break;
    case VerifySuite::lemma2: lemma2_suite(report, rng, perturbation); break;
    case VerifySuite::logdet: logdet_suite(report, rng, perturbation); break;
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace kgp
