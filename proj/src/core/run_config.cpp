/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/run_config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kgp/burgers.hpp"
#include "kgp/error.hpp"

namespace kgp {

namespace fs = std::filesystem;

std::string to_string(DatasetKind kind) { return kind == DatasetKind::burgers ? "burgers" : "annulus"; }

namespace {

DatasetKind dataset_kind_from_string(const std::string& s) {
  if (s == "burgers") return DatasetKind::burgers;
  if (s == "annulus") return DatasetKind::annulus;
  throw_validation("unknown dataset kind '" + s + "' (expected burgers or annulus)");
}

std::string to_string(FeatureMapKind k) { return k == FeatureMapKind::identity ? "identity" : "deep"; }

FeatureMapKind feature_map_kind_from_string(const std::string& s) {
  if (s == "identity") return FeatureMapKind::identity;
  if (s == "deep") return FeatureMapKind::deep;
  throw_validation("unknown feature map '" + s + "' (expected identity or deep)");
}

std::string to_string(MaskSource m) {
  switch (m) {
    case MaskSource::dataset: return "dataset";
    case MaskSource::random: return "random";
    case MaskSource::none: return "none";
  }
  return "dataset";
}

MaskSource mask_source_from_string(const std::string& s) {
  if (s == "dataset") return MaskSource::dataset;
  if (s == "random") return MaskSource::random;
  if (s == "none") return MaskSource::none;
  throw_validation("unknown mask source '" + s + "' (expected dataset, random or none)");
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_vector(const Json& j, const char* key, Vector& out) {
  if (j.contains(key)) out = vector_from_json(j.at(key), key);
}

void read_matrix(const Json& j, const char* key, Matrix& out) {
  if (j.contains(key)) out = matrix_from_json(j.at(key), key);
}

void parse_burgers(const Json& j, BurgersDataset& b) {
  require_known_keys(j, {"mu_lo", "mu_hi", "M", "Nt", "T_final", "x_max", "dt"}, "dataset.burgers");
  read_vector(j, "mu_lo", b.mu_lo);
  read_vector(j, "mu_hi", b.mu_hi);
  read(j, "M", b.M);
  read(j, "Nt", b.Nt);
  read(j, "T_final", b.T_final);
  read(j, "x_max", b.x_max);
  read(j, "dt", b.dt);
}

void parse_annulus(const Json& j, AnnulusDataset& a) {
  require_known_keys(j, {"mu_lo", "mu_hi", "r_in", "r_out", "n_points", "lattice", "radius", "neighbors",
                         "reference_map"},
                     "dataset.annulus");
  read_vector(j, "mu_lo", a.mu_lo);
  read_vector(j, "mu_hi", a.mu_hi);
  read(j, "r_in", a.r_in);
  read(j, "r_out", a.r_out);
  read(j, "n_points", a.n_points);
  read(j, "lattice", a.lattice);
  read(j, "radius", a.radius);
  read(j, "neighbors", a.neighbors);
  read(j, "reference_map", a.reference_map);
}

void parse_dataset(const Json& j, DatasetConfig& d) {
  require_known_keys(j, {"kind", "n_train", "test_parameters", "burgers", "annulus", "path"}, "dataset");
  if (j.contains("kind")) d.kind = dataset_kind_from_string(j.at("kind").get<std::string>());
  read(j, "n_train", d.n_train);
  read_matrix(j, "test_parameters", d.test_parameters);
  if (j.contains("burgers")) parse_burgers(j.at("burgers"), d.burgers);
  if (j.contains("annulus")) parse_annulus(j.at("annulus"), d.annulus);
  read(j, "path", d.path);
}

void parse_kernel(const Json& j, KernelConfig& k) {
  require_known_keys(j, {"family", "feature_maps", "hidden", "activation", "latent_dim", "relative_jitter",
                         "factors"},
                     "kernel");
  if (j.contains("family")) k.family = kernel_family_from_string(j.at("family").get<std::string>());
  if (j.contains("feature_maps"))
    k.feature_map = feature_map_kind_from_string(j.at("feature_maps").get<std::string>());
  read(j, "hidden", k.hidden);
  if (j.contains("activation")) k.activation = activation_from_string(j.at("activation").get<std::string>());
  read(j, "latent_dim", k.latent_dim);
  read(j, "relative_jitter", k.relative_jitter);
  if (j.contains("factors")) {
    k.factors.clear();
    for (const auto& f : j.at("factors")) {
      require_known_keys(f, {"family", "feature_map"}, "kernel.factors[]");
      FactorOverride o;
      if (f.contains("family")) o.family = kernel_family_from_string(f.at("family").get<std::string>());
      if (f.contains("feature_map"))
        o.feature_map = feature_map_kind_from_string(f.at("feature_map").get<std::string>());
      k.factors.push_back(o);
    }
  }
}

void parse_training(const Json& j, TrainConfig& t) {
  require_known_keys(j, {"learning_rate", "beta1", "beta2", "epsilon", "weight_decay", "max_iters", "fd_step",
                         "fd_budget", "initial_noise", "step_decay"},
                     "training");
  read(j, "learning_rate", t.learning_rate);
  read(j, "beta1", t.beta1);
  read(j, "beta2", t.beta2);
  read(j, "epsilon", t.epsilon);
  read(j, "weight_decay", t.weight_decay);
  read(j, "max_iters", t.max_iters);
  read(j, "fd_step", t.fd_step);
  read(j, "fd_budget", t.fd_budget);
  read(j, "initial_noise", t.initial_noise);
  if (j.contains("step_decay")) {
    const Json& s = j.at("step_decay");
    if (s.is_null()) {
      t.step_decay.reset();
    } else {
      require_known_keys(s, {"step", "factor"}, "training.step_decay");
      StepDecay d;
      read(s, "step", d.step);
      read(s, "factor", d.factor);
      t.step_decay = d;
    }
  }
}

void parse_gappy(const Json& j, GappyConfig& g) {
  require_known_keys(j, {"mask_source", "gap_fraction", "cg_tolerance", "cg_max_iterations"}, "gappy");
  if (j.contains("mask_source")) g.mask_source = mask_source_from_string(j.at("mask_source").get<std::string>());
  read(j, "gap_fraction", g.gap_fraction);
  read(j, "cg_tolerance", g.cg.tolerance);
  read(j, "cg_max_iterations", g.cg.max_iterations);
}

}  // namespace

void RunConfig::resolve() {
  training.seed = seed;
  if (dataset.kind == DatasetKind::burgers) {
    auto& b = dataset.burgers;
    if (b.mu_lo.size() == 0) b.mu_lo = (Vector(2) << kBurgersMu1Min, kBurgersMu2Min).finished();
    if (b.mu_hi.size() == 0) b.mu_hi = (Vector(2) << kBurgersMu1Max, kBurgersMu2Max).finished();
    if (b.mu_lo.size() != 2 || b.mu_hi.size() != 2) throw_validation("dataset.burgers box must be 2-dimensional");
    check_burgers_box(b.mu_lo[0], b.mu_lo[1]);
    check_burgers_box(b.mu_hi[0], b.mu_hi[1]);
    if (dataset.test_parameters.size() == 0) {
      dataset.test_parameters.resize(2, 2);
      dataset.test_parameters << 4.3, 0.021, 5.15, 0.0285;
    }
    if (dataset.test_parameters.cols() != 2) throw_validation("burgers test parameters need 2 columns");
    for (Eigen::Index r = 0; r < dataset.test_parameters.rows(); ++r)
      check_burgers_box(dataset.test_parameters(r, 0), dataset.test_parameters(r, 1));
    BurgersConfig probe;
    probe.M = b.M;
    probe.Nt = b.Nt;
    probe.T_final = b.T_final;
    probe.x_max = b.x_max;
    probe.dt = b.dt;
    probe.validate();
  } else {
    auto& a = dataset.annulus;
    if (a.mu_lo.size() == 0) a.mu_lo = (Vector(2) << 1.0, 0.0).finished();
    if (a.mu_hi.size() == 0) a.mu_hi = (Vector(2) << 3.0, 1.0).finished();
    if (a.mu_lo.size() != a.mu_hi.size()) throw_validation("dataset.annulus box bounds differ in dimension");
    if (!(a.r_in > 0.0 && a.r_out > a.r_in)) throw_validation("dataset.annulus needs 0 < r_in < r_out");
    if (a.lattice < 2 || a.n_points == 0 || !(a.radius > 0.0) || a.neighbors == 0)
      throw_validation("dataset.annulus lattice, n_points, radius and neighbors must be positive");
    if (dataset.test_parameters.size() == 0) {
      dataset.test_parameters.resize(1, a.mu_lo.size());
      dataset.test_parameters.row(0) = (0.5 * (a.mu_lo + a.mu_hi)).transpose();
    }
    if (dataset.test_parameters.cols() != a.mu_lo.size())
      throw_validation("annulus test parameters do not match the parameter box");
  }
  for (Eigen::Index i = 0; i < (dataset.kind == DatasetKind::burgers ? 2 : dataset.annulus.mu_lo.size()); ++i) {
    const Vector& lo = dataset.kind == DatasetKind::burgers ? dataset.burgers.mu_lo : dataset.annulus.mu_lo;
    const Vector& hi = dataset.kind == DatasetKind::burgers ? dataset.burgers.mu_hi : dataset.annulus.mu_hi;
    if (!(hi[i] > lo[i])) throw_validation("parameter box needs mu_hi > mu_lo in every coordinate");
  }
  if (dataset.n_train < 1) throw_validation("dataset.n_train must be at least 1");
  if (grid.spatial_stride < 1 || grid.time_stride < 1) throw_validation("grid strides must be at least 1");
  if (kernel.latent_dim < 1) throw_validation("kernel.latent_dim must be at least 1");
  for (std::size_t h : kernel.hidden)
    if (h == 0) throw_validation("kernel.hidden widths must be positive");
  if (!(kernel.relative_jitter >= 0.0)) throw_validation("kernel.relative_jitter must be non-negative");
  training.cg = gappy.cg;
  training.validate();
  if (!(gappy.gap_fraction >= 0.0 && gappy.gap_fraction < 1.0))
    throw_validation("gappy.gap_fraction must lie in [0, 1)");
  if (!(gappy.cg.tolerance > 0.0) || gappy.cg.max_iterations == 0)
    throw_validation("gappy CG tolerance and iteration cap must be positive");
  if (output_dir.empty()) throw_validation("output.dir must not be empty");
  for (const auto& m : study.models)
    if (m != "stationary" && m != "deep") throw_validation("study.models entries must be stationary or deep");
  for (std::size_t n : study.n_values)
    if (n == 0) throw_validation("study.n_values must be positive");
}

std::string RunConfig::dataset_dir() const {
  return dataset.path.empty() ? (fs::path(output_dir) / "data").string() : dataset.path;
}

std::string RunConfig::model_path() const {
  return predict.model.empty() ? (fs::path(output_dir) / "model.json").string() : predict.model;
}

RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  try {
    require_known_keys(j, {"seed", "dataset", "grid", "kernel", "training", "gappy", "output", "predict", "study"},
                       "run config");
    read(j, "seed", c.seed);
    if (j.contains("dataset")) parse_dataset(j.at("dataset"), c.dataset);
    if (j.contains("grid")) {
      require_known_keys(j.at("grid"), {"spatial_stride", "time_stride"}, "grid");
      read(j.at("grid"), "spatial_stride", c.grid.spatial_stride);
      read(j.at("grid"), "time_stride", c.grid.time_stride);
    }
    if (j.contains("kernel")) parse_kernel(j.at("kernel"), c.kernel);
    if (j.contains("training")) parse_training(j.at("training"), c.training);
    if (j.contains("gappy")) parse_gappy(j.at("gappy"), c.gappy);
    if (j.contains("output")) {
      require_known_keys(j.at("output"), {"dir"}, "output");
      read(j.at("output"), "dir", c.output_dir);
    }
    if (j.contains("predict")) {
      require_known_keys(j.at("predict"), {"model", "parameters"}, "predict");
      read(j.at("predict"), "model", c.predict.model);
      read_matrix(j.at("predict"), "parameters", c.predict.parameters);
    }
    if (j.contains("study")) {
      require_known_keys(j.at("study"), {"n_values", "models"}, "study");
      read(j.at("study"), "n_values", c.study.n_values);
      read(j.at("study"), "models", c.study.models);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("run config: ") + e.what());
  }
  c.resolve();
  return c;
}

RunConfig load_run_config(const std::string& path) { return run_config_from_json(read_json_file(path)); }

Json to_json(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed;
  const auto& b = c.dataset.burgers;
  const auto& a = c.dataset.annulus;
  j["dataset"] = {
      {"kind", to_string(c.dataset.kind)},
      {"n_train", c.dataset.n_train},
      {"test_parameters", matrix_to_json(c.dataset.test_parameters)},
      {"burgers",
       {{"mu_lo", vector_to_json(b.mu_lo)},
        {"mu_hi", vector_to_json(b.mu_hi)},
        {"M", b.M},
        {"Nt", b.Nt},
        {"T_final", b.T_final},
        {"x_max", b.x_max},
        {"dt", b.dt}}},
      {"annulus",
       {{"mu_lo", vector_to_json(a.mu_lo)},
        {"mu_hi", vector_to_json(a.mu_hi)},
        {"r_in", a.r_in},
        {"r_out", a.r_out},
        {"n_points", a.n_points},
        {"lattice", a.lattice},
        {"radius", a.radius},
        {"neighbors", a.neighbors},
        {"reference_map", a.reference_map}}},
      {"path", c.dataset.path}};
  j["grid"] = {{"spatial_stride", c.grid.spatial_stride}, {"time_stride", c.grid.time_stride}};
  Json factors = Json::array();
  for (const auto& f : c.kernel.factors) {
    Json o = Json::object();
    if (f.family) o["family"] = to_string(*f.family);
    if (f.feature_map) o["feature_map"] = to_string(*f.feature_map);
    factors.push_back(o);
  }
  j["kernel"] = {{"family", to_string(c.kernel.family)},
                 {"feature_maps", to_string(c.kernel.feature_map)},
                 {"hidden", c.kernel.hidden},
                 {"activation", to_string(c.kernel.activation)},
                 {"latent_dim", c.kernel.latent_dim},
                 {"relative_jitter", c.kernel.relative_jitter},
                 {"factors", factors}};
  const auto& t = c.training;
  j["training"] = {{"learning_rate", t.learning_rate}, {"beta1", t.beta1},
                   {"beta2", t.beta2},                 {"epsilon", t.epsilon},
                   {"weight_decay", t.weight_decay},   {"max_iters", t.max_iters},
                   {"fd_step", t.fd_step},             {"fd_budget", t.fd_budget},
                   {"initial_noise", t.initial_noise}};
  j["training"]["step_decay"] =
      t.step_decay ? Json{{"step", t.step_decay->step}, {"factor", t.step_decay->factor}} : Json(nullptr);
  j["gappy"] = {{"mask_source", to_string(c.gappy.mask_source)},
                {"gap_fraction", c.gappy.gap_fraction},
                {"cg_tolerance", c.gappy.cg.tolerance},
                {"cg_max_iterations", c.gappy.cg.max_iterations}};
  j["output"] = {{"dir", c.output_dir}};
  j["predict"] = {{"model", c.predict.model}, {"parameters", matrix_to_json(c.predict.parameters)}};
  j["study"] = {{"n_values", c.study.n_values}, {"models", c.study.models}};
  return j;
}

void write_resolved_config(const RunConfig& config, const std::string& dir) {
  ensure_directory(dir);
  write_json_file((fs::path(dir) / "resolved_config.json").string(), to_json(config));
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": invalid JSON (" + e.what() + ")");
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

void write_json_file(const std::string& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

}  // namespace kgp
