/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_TRAINING_HPP
#define KGP_TRAINING_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kgp/gappy_gp.hpp"
#include "kgp/grid_gp.hpp"
#include "kgp/params.hpp"

namespace kgp {

struct StepDecay {
  std::size_t step = 100;
  double factor = 0.8;
};

struct TrainConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double epsilon = 1e-8;
  double weight_decay = 2.5e-5;  // feature-map weights only
  std::size_t max_iters = 100;
  double fd_step = 1e-5;
  std::size_t fd_budget = 2000;  // maximum parameter count
  std::uint64_t seed = 0;
  double initial_noise = 5e-3;
  CgOptions cg;
  std::optional<StepDecay> step_decay;

  void validate() const;
};

struct TraceRow {
  std::size_t iteration = 0;
  double nlml = 0.0;
  double grad_norm = 0.0;
  double seconds = 0.0;
  std::size_t cg_iters = 0;
};

struct TrainTrace {
  std::vector<TraceRow> rows;

  std::string to_csv() const;
};

/// Targets on a full lattice, already centered.
struct GridProblem {
  ProductGrid grid;
  FieldTensor y;
};

/// Regular targets (lifted order) on a gappy lattice, already centered.
struct GappyProblem {
  ProductGrid grid;
  GappyMask mask;
  Vector y_r;
};

using TrainProblem = std::variant<GridProblem, GappyProblem>;

/// NLML as a function of the packed parameter vector.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual double value(const Vector& theta) = 0;
  /// Central-difference gradient; same formula as grad_fd.
  virtual Vector gradient(const Vector& theta, double step) = 0;
  /// CG iterations spent by the most recent value() call.
  virtual std::size_t last_cg_iterations() const { return 0; }
  const ParamSchema& schema() const { return schema_; }

 protected:
  Objective(const ProductKernelSpec& shape, ParamSchema schema) : shape_(shape), schema_(std::move(schema)) {}
  void unpack_into(const Vector& theta, ProductKernelSpec& spec, double& sigma2) const;

  ProductKernelSpec shape_;
  ParamSchema schema_;
};

/// Rectilinear objective. The gradient reuses, for each factor k, the
/// projection of y onto every other factor's eigenbasis, so that a
/// perturbation confined to factor k costs one eigendecomposition and one
/// mode product.
class GridObjective : public Objective {
 public:
  GridObjective(const ProductKernelSpec& shape, GridProblem problem);
  double value(const Vector& theta) override;
  Vector gradient(const Vector& theta, double step) override;

 private:
  GridProblem problem_;
};

/// Gappy objective; pseudovalues of the last base evaluation seed every CG
/// solve, including the finite-difference perturbations.
class GappyObjective : public Objective {
 public:
  GappyObjective(const ProductKernelSpec& shape, GappyProblem problem, CgOptions cg);
  double value(const Vector& theta) override;
  Vector gradient(const Vector& theta, double step) override;
  std::size_t last_cg_iterations() const override { return last_cg_; }
  const Vector& pseudovalues() const { return warm_; }

 private:
  GappyProblem problem_;
  LiftedMask lifted_;
  CgOptions cg_;
  Vector warm_;
  std::size_t last_cg_ = 0;
};

std::unique_ptr<Objective> make_objective(const ProductKernelSpec& shape, const TrainProblem& problem,
                                          const CgOptions& cg);

struct AdamState {
  Vector m;
  Vector v;
  std::size_t t = 0;
};

double scheduled_learning_rate(const TrainConfig& config, std::size_t iteration);

/// One Adam update with bias correction. Weight decay is added to the
/// gradient of feature-weight coordinates only.
Vector adam_step(AdamState& state, const Vector& theta, const Vector& grad, const TrainConfig& config,
                 const ParamSchema& schema, double learning_rate);

struct TrainResult {
  ProductKernelSpec spec;
  double sigma2 = 0.0;
  Vector theta;
  double initial_nlml = 0.0;
  double best_nlml = 0.0;
  std::size_t best_iteration = 0;
  TrainTrace trace;
  /// Pseudovalues at the best iterate (gappy problems).
  Vector pseudovalues;
};

class TrainingAborted : public NumericalError {
 public:
  TrainingAborted(const std::string& what, TrainTrace trace) : NumericalError(what), trace_(std::move(trace)) {}
  const TrainTrace& trace() const noexcept { return trace_; }

 private:
  TrainTrace trace_;
};

/// Minimizes the NLML from `init`; returns the best iterate seen (earliest
/// among ties within 1e-12).
TrainResult train(const TrainProblem& problem, const ProductKernelSpec& init, double init_sigma2,
                  const TrainConfig& config);

/// Sets log-lengthscales to log(0.5 * latent range) per dimension and the
/// outputscale to var(y). Feature maps are left as given.
void initialize_hyperparameters(ProductKernelSpec& spec, const ProductGrid& grid, double target_variance);

/// Mean and variance of the finite targets.
std::pair<double, double> target_moments(const Vector& y);

}  // namespace kgp

#endif  // KGP_TRAINING_HPP
