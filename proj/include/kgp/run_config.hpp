/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_RUN_CONFIG_HPP
#define KGP_RUN_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kgp/json_io.hpp"
#include "kgp/training.hpp"

namespace kgp {

enum class DatasetKind { burgers, annulus };

std::string to_string(DatasetKind kind);

struct BurgersDataset {
  Vector mu_lo;  // defaults to the benchmark box
  Vector mu_hi;
  std::size_t M = 128;
  std::size_t Nt = 100;
  double T_final = 35.0;
  double x_max = 100.0;
  double dt = 0.02;
};

/// Steady field on an annulus, sampled at scattered points and embedded on a
/// square lattice (or on the reference rectangle when `reference_map` is set).
struct AnnulusDataset {
  Vector mu_lo;
  Vector mu_hi;
  double r_in = 0.5;
  double r_out = 1.0;
  std::size_t n_points = 4000;
  std::size_t lattice = 24;  // nodes per axis
  double radius = 0.1;
  std::size_t neighbors = 4;
  bool reference_map = false;
};

struct DatasetConfig {
  DatasetKind kind = DatasetKind::burgers;
  std::size_t n_train = 20;
  /// Held-out parameters, one per row. Empty selects the kind's defaults.
  Matrix test_parameters;
  BurgersDataset burgers;
  AnnulusDataset annulus;
  /// Dataset directory; empty means <output.dir>/data.
  std::string path;
};

/// Training-lattice subsampling.
struct GridConfig {
  std::size_t spatial_stride = 1;
  std::size_t time_stride = 1;
};

enum class FeatureMapKind { identity, deep };

struct FactorOverride {
  std::optional<KernelFamily> family;
  std::optional<FeatureMapKind> feature_map;
};

struct KernelConfig {
  KernelFamily family = KernelFamily::matern52;
  FeatureMapKind feature_map = FeatureMapKind::identity;
  std::vector<std::size_t> hidden{8};
  Activation activation = Activation::tanh;
  std::size_t latent_dim = 2;
  double relative_jitter = 1e-8;
  /// Per-axis overrides in grid order; may be shorter than the axis count.
  std::vector<FactorOverride> factors;
};

enum class MaskSource { dataset, random, none };

struct GappyConfig {
  MaskSource mask_source = MaskSource::dataset;
  double gap_fraction = 0.2;  // used by the random source
  CgOptions cg;
};

struct PredictConfig {
  /// Model file; empty means <output.dir>/model.json.
  std::string model;
  /// Parameters to predict at; empty uses the dataset's test parameters.
  Matrix parameters;
};

struct StudyConfig {
  std::vector<std::size_t> n_values{5, 10, 20};
  std::vector<std::string> models{"stationary", "deep"};
};

struct RunConfig {
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  GridConfig grid;
  KernelConfig kernel;
  TrainConfig training;
  GappyConfig gappy;
  std::string output_dir = "kgp_out";
  PredictConfig predict;
  StudyConfig study;

  /// Fills kind-dependent defaults and checks ranges.
  void resolve();
  std::string dataset_dir() const;
  std::string model_path() const;
};

RunConfig run_config_from_json(const Json& j);
RunConfig load_run_config(const std::string& path);
/// Fully resolved form; parsing it again yields the same configuration.
Json to_json(const RunConfig& config);

/// Writes <dir>/resolved_config.json.
void write_resolved_config(const RunConfig& config, const std::string& dir);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);
void write_text_file(const std::string& path, const std::string& text);
void ensure_directory(const std::string& dir);

}  // namespace kgp

#endif  // KGP_RUN_CONFIG_HPP
