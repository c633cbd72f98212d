/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/kernels.hpp"

#include <cmath>
#include <random>

#include "kgp/error.hpp"

namespace kgp {

namespace {

// Top 53 bits of a 64-bit draw scaled to [0, 1). Written out so the stream
// does not depend on the standard library's distribution implementation.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::identity: return x;
  }
  return x;
}

}  // namespace

std::string to_string(KernelFamily family) {
  return family == KernelFamily::matern52 ? "matern52" : "se";
}

std::string to_string(Activation activation) {
  switch (activation) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "identity";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "se" || name == "squared_exponential") return KernelFamily::squared_exponential;
  if (name == "matern52") return KernelFamily::matern52;
  throw_validation("unknown kernel family '" + name + "'");
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw_validation("unknown activation '" + name + "'");
}

double BaseKernel::outputscale() const { return std::exp(log_outputscale); }

double BaseKernel::from_sq_distance(double r2) const {
  const double s = outputscale();
  if (family == KernelFamily::squared_exponential) return s * std::exp(-r2);
  const double r = std::sqrt(r2);
  const double sr = std::sqrt(5.0) * r;
  return s * (1.0 + sr + 5.0 * r2 / 3.0) * std::exp(-sr);
}

FeatureMap FeatureMap::identity(std::size_t dim) {
  FeatureMap m;
  m.input_dim = dim;
  m.activation = Activation::identity;
  return m;
}

FeatureMap FeatureMap::network(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                               std::size_t output_dim, Activation activation, std::uint64_t seed) {
  if (input_dim == 0 || output_dim == 0) throw_validation("feature map sizes must be positive");
  FeatureMap m;
  m.input_dim = input_dim;
  m.activation = activation;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> sizes{input_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(output_dim);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l + 1] == 0) throw_validation("feature map layer width must be positive");
    const auto in = static_cast<Eigen::Index>(sizes[l]);
    const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix w(out, in);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) w(r, c) = bound * (2.0 * unit_uniform(rng) - 1.0);
    m.weights.push_back(std::move(w));
    m.biases.push_back(Vector::Zero(out));
  }
  return m;
}

std::size_t FeatureMap::output_dim() const {
  return weights.empty() ? input_dim : static_cast<std::size_t>(weights.back().rows());
}

std::vector<std::size_t> FeatureMap::layer_sizes() const {
  std::vector<std::size_t> s{input_dim};
  for (const auto& w : weights) s.push_back(static_cast<std::size_t>(w.rows()));
  return s;
}

std::size_t FeatureMap::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

void FeatureMap::get_parameters(double* out) const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index r = 0; r < weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < weights[l].cols(); ++c) *out++ = weights[l](r, c);
    for (Eigen::Index r = 0; r < biases[l].size(); ++r) *out++ = biases[l][r];
  }
}

void FeatureMap::set_parameters(const double* in) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index r = 0; r < weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < weights[l].cols(); ++c) weights[l](r, c) = *in++;
    for (Eigen::Index r = 0; r < biases[l].size(); ++r) biases[l][r] = *in++;
  }
}

void FeatureMap::fit_input_normalization(const Matrix& points) {
  if (static_cast<std::size_t>(points.cols()) != input_dim)
    throw_dimension("feature map expects " + std::to_string(input_dim) + " input columns, got " +
                    std::to_string(points.cols()));
  Vector lo = points.colwise().minCoeff();
  Vector hi = points.colwise().maxCoeff();
  input_shift = 0.5 * (lo + hi);
  input_scale.resize(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    double range = hi[i] - lo[i];
    input_scale[i] = range > 0.0 ? 2.0 / range : 1.0;
  }
}

Matrix FeatureMap::forward(const Matrix& points) const {
  if (static_cast<std::size_t>(points.cols()) != input_dim)
    throw_dimension("feature map expects " + std::to_string(input_dim) + " input columns, got " +
                    std::to_string(points.cols()));
  if (weights.empty()) return points;
  // Rows are samples, so each layer is h <- act(h W^T + b^T).
  Matrix h = points;
  if (input_shift.size() == points.cols()) {
    h.rowwise() -= input_shift.transpose();
    h.array().rowwise() *= input_scale.transpose().array();
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].cols() != h.cols())
      throw_dimension("feature map layer " + std::to_string(l) + " expects " +
                      std::to_string(weights[l].cols()) + " inputs, got " + std::to_string(h.cols()));
    Matrix next = h * weights[l].transpose();
    next.rowwise() += biases[l].transpose();
    if (l + 1 < weights.size()) next = next.unaryExpr([this](double x) { return activate(activation, x); });
    h = std::move(next);
  }
  if (!h.allFinite()) throw_numerical("feature map produced non-finite output (weights diverged)");
  return h;
}

void FactorKernel::validate() const {
  if (map.output_dim() != base.dim())
    throw_validation("feature map output dimension " + std::to_string(map.output_dim()) +
                     " does not match " + std::to_string(base.dim()) + " lengthscales");
  if (!base.log_lengthscales.allFinite() || !std::isfinite(base.log_outputscale))
    throw_validation("kernel hyperparameters must be finite");
  for (std::size_t l = 0; l < map.weights.size(); ++l) {
    if (map.biases.size() != map.weights.size() || map.biases[l].size() != map.weights[l].rows())
      throw_validation("feature map layer " + std::to_string(l) + " has mismatched bias");
    if (!map.weights[l].allFinite() || !map.biases[l].allFinite())
      throw_validation("feature map layer " + std::to_string(l) + " has non-finite weights");
  }
}

Matrix FactorKernel::gram_latent(const Matrix& la, const Matrix& lb) const {
  if (static_cast<std::size_t>(la.cols()) != base.dim() || static_cast<std::size_t>(lb.cols()) != base.dim())
    throw_dimension("gram: latent points do not match lengthscale count");
  const Vector inv_l = (-base.log_lengthscales).array().exp();
  Matrix sa = la * inv_l.asDiagonal();
  Matrix sb = lb * inv_l.asDiagonal();
  Matrix g(la.rows(), lb.rows());
  for (Eigen::Index j = 0; j < sb.rows(); ++j)
    for (Eigen::Index i = 0; i < sa.rows(); ++i)
      g(i, j) = base.from_sq_distance((sa.row(i) - sb.row(j)).squaredNorm());
  return g;
}

Matrix FactorKernel::gram(const Matrix& a, const Matrix& b) const {
  if (&a == &b) {
    Matrix la = latent(a);
    return gram_latent(la, la);
  }
  return gram_latent(latent(a), latent(b));
}

void ProductKernelSpec::validate() const {
  if (factors.empty()) throw_validation("product kernel has no factors");
  for (const auto& f : factors) f.validate();
  for (std::size_t i = 1; i < factors.size(); ++i)
    if (factors[i].base.log_outputscale != 0.0)
      throw_validation("only the parameter factor may carry an outputscale (factor " +
                       std::to_string(i) + ")");
  if (!(relative_jitter >= 0.0)) throw_validation("relative jitter must be non-negative");
}

std::vector<double> ProductKernelSpec::factor_jitter() const {
  std::vector<double> j;
  for (const auto& f : factors) j.push_back(relative_jitter * f.base.outputscale());
  return j;
}

namespace {

template <bool Training>
double evaluate_impl(const ProductKernelSpec& spec, const Eigen::Ref<const Vector>& z1,
                     const Eigen::Ref<const Vector>& z2) {
  double k = 1.0;
  Eigen::Index col = 0;
  for (const auto& f : spec.factors) {
    const auto d = static_cast<Eigen::Index>(f.map.input_dim);
    if (col + d > z1.size() || col + d > z2.size())
      throw_dimension("kernel input shorter than the factor layout");
    Matrix a = z1.segment(col, d).transpose();
    Matrix b = z2.segment(col, d).transpose();
    double kf = f.gram(a, b)(0, 0);
    if constexpr (Training) {
      if (a == b) kf += spec.relative_jitter * f.base.outputscale();
    }
    k *= kf;
    col += d;
  }
  if (col != z1.size() || col != z2.size()) throw_dimension("kernel input longer than the factor layout");
  return k;
}

}  // namespace

double ProductKernelSpec::evaluate(const Eigen::Ref<const Vector>& z1,
                                   const Eigen::Ref<const Vector>& z2) const {
  return evaluate_impl<false>(*this, z1, z2);
}

double ProductKernelSpec::evaluate_training(const Eigen::Ref<const Vector>& z1,
                                            const Eigen::Ref<const Vector>& z2) const {
  return evaluate_impl<true>(*this, z1, z2);
}

namespace {

void check_layout(const ProductKernelSpec& spec, const ProductGrid& grid) {
  if (spec.factors.size() != grid.axes.size())
    throw_validation("kernel has " + std::to_string(spec.factors.size()) + " factors but grid has " +
                     std::to_string(grid.axes.size()) + " axes");
  for (std::size_t i = 0; i < grid.axes.size(); ++i)
    if (spec.factors[i].map.input_dim != grid.axes[i].dim())
      throw_dimension("factor " + std::to_string(i) + " expects " +
                      std::to_string(spec.factors[i].map.input_dim) + " input columns, axis has " +
                      std::to_string(grid.axes[i].dim()));
}

}  // namespace

KronOperator product_covariance(const ProductKernelSpec& spec, const ProductGrid& grid) {
  check_layout(spec, grid);
  KronOperator op;
  for (std::size_t i = 0; i < grid.axes.size(); ++i)
    op.factors.push_back(spec.factors[i].gram(grid.axes[i].points, grid.axes[i].points));
  return op;
}

Matrix training_factor(const ProductKernelSpec& spec, const ProductGrid& grid, std::size_t k) {
  check_layout(spec, grid);
  Matrix g = spec.factors.at(k).gram(grid.axes[k].points, grid.axes[k].points);
  g.diagonal().array() += spec.relative_jitter * spec.factors[k].base.outputscale();
  return g;
}

KronOperator training_covariance(const ProductKernelSpec& spec, const ProductGrid& grid) {
  check_layout(spec, grid);
  KronOperator op;
  for (std::size_t i = 0; i < grid.axes.size(); ++i) op.factors.push_back(training_factor(spec, grid, i));
  return op;
}

KronOperator cross_covariance(const ProductKernelSpec& spec, const ProductGrid& train,
                              const ProductGrid& test) {
  check_layout(spec, train);
  check_layout(spec, test);
  KronOperator op;
  for (std::size_t i = 0; i < train.axes.size(); ++i)
    op.factors.push_back(spec.factors[i].gram(test.axes[i].points, train.axes[i].points));
  return op;
}

ProductKernelSpec stationary_spec(const ProductGrid& grid, KernelFamily family) {
  ProductKernelSpec spec;
  for (const auto& axis : grid.axes) {
    FactorKernel f;
    f.map = FeatureMap::identity(axis.dim());
    f.base.family = family;
    f.base.log_lengthscales = Vector::Zero(static_cast<Eigen::Index>(axis.dim()));
    spec.factors.push_back(std::move(f));
  }
  return spec;
}

ProductKernelSpec deep_spec(const ProductGrid& grid, KernelFamily family,
                            const DeepKernelLayout& layout, std::uint64_t seed) {
  ProductKernelSpec spec;
  std::mt19937_64 seeder(seed);
  for (const auto& axis : grid.axes) {
    std::size_t out = axis.role == AxisRole::parameter ? axis.dim() : layout.axis_latent_dim;
    FactorKernel f;
    f.map = FeatureMap::network(axis.dim(), layout.hidden, out, layout.activation, seeder());
    f.map.fit_input_normalization(axis.points);
    f.base.family = family;
    f.base.log_lengthscales = Vector::Zero(static_cast<Eigen::Index>(out));
    spec.factors.push_back(std::move(f));
  }
  return spec;
}

}  // namespace kgp
