/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_WORKFLOW_HPP
#define KGP_WORKFLOW_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kgp/bench.hpp"
#include "kgp/run_config.hpp"
#include "kgp/verify.hpp"

namespace kgp {

/// Snapshots on a shared lattice. Each snapshot has shape
/// (spatial..., [time]) and NaN at gaps.
struct Dataset {
  DatasetKind kind = DatasetKind::burgers;
  std::uint64_t seed = 0;
  Matrix train_parameters;  // one row per snapshot
  Matrix test_parameters;
  std::vector<Vector> spatial;
  std::optional<Vector> times;
  std::vector<FieldTensor> train;
  std::vector<FieldTensor> test;
  /// Spatial regular flags, absent when every node carries data.
  std::optional<std::vector<std::uint8_t>> mask;

  std::vector<std::size_t> spatial_shape() const;
};

/// Builds the dataset described by the config in memory.
Dataset generate_dataset(const RunConfig& config);
/// Writes manifest.json and one tensor file per snapshot into `dir`.
Json write_dataset(const Dataset& data, const std::string& dir);
Dataset read_dataset(const std::string& dir);

/// Everything needed to rebuild a fitted model. The eigendecompositions are
/// not stored; they are recomputed when the model is loaded.
struct ModelBundle {
  ProductKernelSpec spec;
  ProductGrid grid;
  double sigma2 = 0.0;
  double y_offset = 0.0;
  std::optional<GappyMask> mask;
  CgOptions cg;
  /// Raw targets on the training lattice, NaN at gaps.
  FieldTensor targets;
  std::size_t spatial_stride = 1;
  std::size_t time_stride = 1;
  double initial_nlml = 0.0;
  double best_nlml = 0.0;
  std::size_t best_iteration = 0;
  /// Optimizer trace of the run that produced the model; not serialized.
  TrainTrace trace;

  bool gappy() const { return mask.has_value() && !mask->gaps.empty(); }
};

/// model.json plus targets.kgpt in the same directory.
void write_model(const ModelBundle& model, const std::string& path);
ModelBundle read_model(const std::string& path);

/// A model with its decomposition in place.
struct FittedBundle {
  ModelBundle bundle;
  std::variant<FittedModel, GappyModel> fitted;
};

FittedBundle refit(const ModelBundle& model);

struct Prediction {
  ProductGrid grid;
  FieldTensor mean;  // NaN at test gaps
  std::optional<FieldTensor> variance;
  std::optional<FieldTensor> variance_lower;
  std::optional<FieldTensor> variance_upper;
  std::optional<std::vector<std::uint8_t>> mask;  // over the full test lattice
};

/// Predicts on parameters x (training spatial and time axes).
Prediction predict_parameters(const FittedBundle& model, const Matrix& parameters);

/// Relative error of one predicted snapshot (index j of the prediction)
/// against a truth snapshot at full dataset resolution, over regular points.
double snapshot_error(const FittedBundle& model, const Prediction& pred, std::size_t j, const FieldTensor& truth);
/// Same, pooled over all snapshots.
double pooled_error(const FittedBundle& model, const Prediction& pred, const std::vector<FieldTensor>& truth);

/// Trains on the first `n_use` training snapshots (all when 0).
ModelBundle train_model(const RunConfig& config, const Dataset& data, std::size_t n_use = 0);

Json cmd_generate(const RunConfig& config);
ModelBundle cmd_train(const RunConfig& config);
/// Returns the pooled relative test error when truth is available.
std::optional<double> cmd_predict(const RunConfig& config);
VerifyReport cmd_verify(VerifySuite suite, std::uint64_t seed, Perturbation perturbation, const std::string& out_dir);
std::vector<BenchRow> cmd_bench(const BenchOptions& options, const std::string& out_dir);

struct StudyRow {
  std::size_t n_train = 0;
  std::string model;
  double initial_nlml = 0.0;
  double best_nlml = 0.0;
  std::size_t best_iteration = 0;
  double test_error = 0.0;
  double seconds = 0.0;
};

/// Convergence-with-N comparison of stationary and deep product kernels on
/// nested Sobol prefixes of one dataset. Writes study.csv.
std::vector<StudyRow> cmd_study(const RunConfig& config);

}  // namespace kgp

#endif  // KGP_WORKFLOW_HPP
