/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/training.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace kgp {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw_validation("learning_rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw_validation("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw_validation("beta2 must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw_validation("epsilon must be positive");
  if (!(weight_decay >= 0.0)) throw_validation("weight_decay must be non-negative");
  if (!(fd_step > 0.0)) throw_validation("fd_step must be positive");
  if (!(initial_noise > 0.0)) throw_validation("initial_noise must be positive");
  if (!(cg.tolerance > 0.0)) throw_validation("cg tolerance must be positive");
  if (cg.max_iterations == 0) throw_validation("cg max_iterations must be positive");
  if (step_decay) {
    if (step_decay->step == 0) throw_validation("step decay step must be positive");
    if (!(step_decay->factor > 0.0)) throw_validation("step decay factor must be positive");
  }
}

std::string TrainTrace::to_csv() const {
  std::ostringstream os;
  os << "iteration,nlml,grad_norm,seconds,cg_iters\n";
  os << std::setprecision(17);
  for (const auto& r : rows)
    os << r.iteration << ',' << r.nlml << ',' << r.grad_norm << ',' << r.seconds << ',' << r.cg_iters << '\n';
  return os.str();
}

void Objective::unpack_into(const Vector& theta, ProductKernelSpec& spec, double& sigma2) const {
  spec = shape_;
  unpack(schema_, theta, spec, sigma2);
}

namespace {

Vector outer_eigenvalues(const std::vector<Vector>& values) {
  EigFactors e;
  e.values = values;
  return e.eigenvalue_tensor().values;
}

double nlml_from_projection(const FieldTensor& p, const Vector& lambda, double sigma2) {
  Eigen::ArrayXd shifted = lambda.array() + sigma2;
  if (!(shifted.minCoeff() > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return 0.5 * (p.values.array().square() / shifted).sum() + 0.5 * shifted.log().sum() +
         nlml_constant(p.size());
}

void eig_one(const ProductKernelSpec& spec, const ProductGrid& grid, std::size_t k, Matrix& u, Vector& d) {
  KronOperator single;
  single.factors.push_back(training_factor(spec, grid, k));
  EigFactors e = eig_factors(single, 0.0);
  u = std::move(e.vectors[0]);
  d = std::move(e.values[0]);
}

template <typename Eval>
Vector central_differences(const ParamSchema& schema, const Vector& theta, double step, Eval&& eval) {
  if (!(step > 0.0)) throw_validation("finite-difference step must be positive");
  Vector g = Vector::Zero(theta.size());
  for (const auto& seg : schema.segments) {
    for (std::size_t j = 0; j < seg.length; ++j) {
      const auto i = static_cast<Eigen::Index>(seg.offset + j);
      Vector t = theta;
      t[i] = theta[i] + step;
      double fp = eval(seg, t);
      t[i] = theta[i] - step;
      double fm = eval(seg, t);
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw_numerical("non-finite objective while differentiating " + schema.label(static_cast<std::size_t>(i)));
      g[i] = (fp - fm) / (2.0 * step);
    }
  }
  return g;
}

}  // namespace

GridObjective::GridObjective(const ProductKernelSpec& shape, GridProblem problem)
    : Objective(shape, ParamSchema::for_spec(shape)), problem_(std::move(problem)) {
  problem_.grid.validate();
  if (problem_.y.shape != problem_.grid.shape()) throw_dimension("targets do not match the grid");
}

double GridObjective::value(const Vector& theta) {
  ProductKernelSpec spec;
  double sigma2 = 0.0;
  unpack_into(theta, spec, sigma2);
  try {
    return grid_nlml(spec, problem_.grid, problem_.y, sigma2);
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

Vector GridObjective::gradient(const Vector& theta, double step) {
  ProductKernelSpec spec;
  double sigma2 = 0.0;
  unpack_into(theta, spec, sigma2);
  const auto& grid = problem_.grid;
  const std::size_t nf = spec.factors.size();

  std::vector<Matrix> u(nf);
  std::vector<Vector> d(nf);
  for (std::size_t k = 0; k < nf; ++k) eig_one(spec, grid, k, u[k], d[k]);

  // partial[k] = y projected on every eigenbasis except factor k's.
  std::vector<FieldTensor> partial(nf);
  for (std::size_t k = 0; k < nf; ++k) {
    FieldTensor t = problem_.y;
    for (std::size_t j = 0; j < nf; ++j)
      if (j != k) t = mode_product(t, j, u[j], true);
    partial[k] = std::move(t);
  }
  const FieldTensor full = mode_product(partial[0], 0, u[0], true);
  const Vector base_lambda = outer_eigenvalues(d);

  auto eval = [&](const ParamSegment& seg, const Vector& t) -> double {
    ProductKernelSpec probe;
    double s2 = 0.0;
    unpack_into(t, probe, s2);
    if (seg.kind == ParamKind::log_noise) return nlml_from_projection(full, base_lambda, s2);
    const std::size_t k = seg.factor;
    Matrix uk;
    Vector dk;
    try {
      eig_one(probe, grid, k, uk, dk);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    std::vector<Vector> values = d;
    values[k] = dk;
    return nlml_from_projection(mode_product(partial[k], k, uk, true), outer_eigenvalues(values), s2);
  };
  return central_differences(schema_, theta, step, eval);
}

GappyObjective::GappyObjective(const ProductKernelSpec& shape, GappyProblem problem, CgOptions cg)
    : Objective(shape, ParamSchema::for_spec(shape)), problem_(std::move(problem)), cg_(cg) {
  problem_.grid.validate();
  if (problem_.grid.spatial_shape() != problem_.mask.spatial_shape)
    throw_dimension("mask does not match the grid");
  lifted_ = lift_mask(problem_.mask, problem_.grid.parameter_count(), problem_.grid.time_count());
  if (static_cast<std::size_t>(problem_.y_r.size()) != lifted_.regular.size())
    throw_dimension("regular targets do not match the mask");
}

double GappyObjective::value(const Vector& theta) {
  ProductKernelSpec spec;
  double sigma2 = 0.0;
  unpack_into(theta, spec, sigma2);
  try {
    EigFactors eig = eig_factors(training_covariance(spec, problem_.grid), 0.0);
    GappyNlml r = gappy_nlml_terms(eig, lifted_, problem_.y_r, sigma2, cg_, warm_.size() ? &warm_ : nullptr);
    warm_ = r.pseudo.y_g;
    last_cg_ = r.pseudo.iterations;
    return r.terms.total();
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

Vector GappyObjective::gradient(const Vector& theta, double step) {
  ProductKernelSpec spec;
  double sigma2 = 0.0;
  unpack_into(theta, spec, sigma2);
  EigFactors base = eig_factors(training_covariance(spec, problem_.grid), 0.0);
  const Vector warm = warm_;
  auto eval = [&](const ParamSegment& seg, const Vector& t) -> double {
    ProductKernelSpec probe;
    double s2 = 0.0;
    unpack_into(t, probe, s2);
    try {
      EigFactors eig = base;
      if (seg.kind != ParamKind::log_noise)
        eig_one(probe, problem_.grid, seg.factor, eig.vectors[seg.factor], eig.values[seg.factor]);
      return gappy_nlml_terms(eig, lifted_, problem_.y_r, s2, cg_, warm.size() ? &warm : nullptr).terms.total();
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  return central_differences(schema_, theta, step, eval);
}

std::unique_ptr<Objective> make_objective(const ProductKernelSpec& shape, const TrainProblem& problem,
                                          const CgOptions& cg) {
  if (const auto* g = std::get_if<GridProblem>(&problem)) return std::make_unique<GridObjective>(shape, *g);
  return std::make_unique<GappyObjective>(shape, std::get<GappyProblem>(problem), cg);
}

double scheduled_learning_rate(const TrainConfig& config, std::size_t iteration) {
  if (!config.step_decay) return config.learning_rate;
  const auto drops = static_cast<double>(iteration / config.step_decay->step);
  return config.learning_rate * std::pow(config.step_decay->factor, drops);
}

Vector adam_step(AdamState& state, const Vector& theta, const Vector& grad, const TrainConfig& config,
                 const ParamSchema& schema, double learning_rate) {
  if (grad.size() != theta.size()) throw_dimension("gradient and parameters differ in length");
  if (state.m.size() != theta.size()) {
    state.m = Vector::Zero(theta.size());
    state.v = Vector::Zero(theta.size());
    state.t = 0;
  }
  Vector g = grad;
  for (const auto& seg : schema.segments)
    if (seg.kind == ParamKind::feature_weights)
      g.segment(static_cast<Eigen::Index>(seg.offset), static_cast<Eigen::Index>(seg.length)) +=
          config.weight_decay *
          theta.segment(static_cast<Eigen::Index>(seg.offset), static_cast<Eigen::Index>(seg.length));
  ++state.t;
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * g;
  state.v = config.beta2 * state.v + (1.0 - config.beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  Vector m_hat = state.m / c1;
  Vector v_hat = state.v / c2;
  return theta - learning_rate * (m_hat.array() / (v_hat.array().sqrt() + config.epsilon)).matrix();
}

TrainResult train(const TrainProblem& problem, const ProductKernelSpec& init, double init_sigma2,
                  const TrainConfig& config) {
  config.validate();
  init.validate();
  auto objective = make_objective(init, problem, config.cg);
  const ParamSchema& schema = objective->schema();
  if (schema.size > config.fd_budget)
    throw_validation("model has " + std::to_string(schema.size) + " parameters, above the finite-difference budget " +
                     std::to_string(config.fd_budget));
  auto* gappy = dynamic_cast<GappyObjective*>(objective.get());

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  TrainResult result;
  Vector theta = pack(schema, init, init_sigma2);
  double f = objective->value(theta);
  if (!std::isfinite(f)) throw_numerical("objective is not finite at the initial parameters");
  std::size_t cg_iters = objective->last_cg_iterations();
  result.initial_nlml = f;
  result.best_nlml = f;
  result.theta = theta;
  if (gappy) result.pseudovalues = gappy->pseudovalues();

  AdamState adam;
  std::size_t bad = 0;
  auto fail = [&](const std::string& why) {
    if (++bad >= 3) {
      throw TrainingAborted("training aborted after three consecutive non-finite objectives (" + why + ")",
                            result.trace);
    }
  };

  for (std::size_t k = 0; k < config.max_iters; ++k) {
    Vector g;
    try {
      g = objective->gradient(theta, config.fd_step);
    } catch (const NumericalError& e) {
      // Retreat toward the best point and try again.
      fail(e.what());
      theta = 0.5 * (theta + result.theta);
      f = objective->value(theta);
      if (!std::isfinite(f)) {
        fail("objective at retreat point");
        theta = result.theta;
        f = objective->value(theta);
      }
      continue;
    }
    result.trace.rows.push_back({k, f, g.norm(), elapsed(), cg_iters});

    Vector next = adam_step(adam, theta, g, config, schema, scheduled_learning_rate(config, k));
    double f_next = objective->value(next);
    while (!std::isfinite(f_next)) {
      fail("objective after update");
      next = 0.5 * (next + theta);
      f_next = objective->value(next);
    }
    bad = 0;
    theta = std::move(next);
    f = f_next;
    cg_iters = objective->last_cg_iterations();
    if (f < result.best_nlml - 1e-12 * std::max(1.0, std::abs(result.best_nlml))) {
      result.best_nlml = f;
      result.theta = theta;
      result.best_iteration = k + 1;
      if (gappy) result.pseudovalues = gappy->pseudovalues();
    }
  }

  result.spec = init;
  unpack(schema, result.theta, result.spec, result.sigma2);
  return result;
}

void initialize_hyperparameters(ProductKernelSpec& spec, const ProductGrid& grid, double target_variance) {
  if (spec.factors.size() != grid.axes.size()) throw_validation("kernel factors do not match grid axes");
  for (std::size_t k = 0; k < spec.factors.size(); ++k) {
    Matrix latent = spec.factors[k].latent(grid.axes[k].points);
    Vector ll(latent.cols());
    for (Eigen::Index c = 0; c < latent.cols(); ++c) {
      double range = latent.col(c).maxCoeff() - latent.col(c).minCoeff();
      ll[c] = std::log(range > 0.0 ? 0.5 * range : 1.0);
    }
    spec.factors[k].base.log_lengthscales = ll;
    spec.factors[k].base.log_outputscale = 0.0;
  }
  spec.factors.front().base.log_outputscale = std::log(target_variance > 0.0 ? target_variance : 1.0);
}

std::pair<double, double> target_moments(const Vector& y) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) continue;
    sum += y[i];
    ++n;
  }
  if (n == 0) throw_validation("no finite targets");
  const double mean = sum / static_cast<double>(n);
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (std::isfinite(y[i])) sq += (y[i] - mean) * (y[i] - mean);
  return {mean, sq / static_cast<double>(n)};
}

}  // namespace kgp
