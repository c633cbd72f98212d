/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/workflow.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include "kgp/burgers.hpp"
#include "kgp/datagen.hpp"
#include "kgp/error.hpp"
#include "kgp/parallel.hpp"
#include "kgp/tensor_file.hpp"

namespace kgp {

namespace fs = std::filesystem;

namespace {

constexpr const char* kDatasetFormat = "kgp-dataset-1";
constexpr const char* kModelFormat = "kgp-model-1";
const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03zu.kgpt", prefix, i);
  return buf;
}

std::vector<std::size_t> strided(std::size_t n, std::size_t stride) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; i += stride) out.push_back(i);
  return out;
}

/// Values of `t` on the sub-lattice idx[0] x idx[1] x ..., row-major.
Vector extract(const FieldTensor& t, const std::vector<std::vector<std::size_t>>& idx) {
  const std::size_t rank = t.shape.size();
  if (idx.size() != rank) throw_dimension("sub-lattice rank does not match the tensor");
  std::vector<std::size_t> step(rank, 1), counter(rank, 0);
  std::size_t total = 1;
  for (std::size_t k = rank; k-- > 0;) {
    if (k + 1 < rank) step[k] = step[k + 1] * t.shape[k + 1];
    total *= idx[k].size();
  }
  Vector out(static_cast<Eigen::Index>(total));
  for (std::size_t n = 0; n < total; ++n) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < rank; ++k) off += idx[k][counter[k]] * step[k];
    out[static_cast<Eigen::Index>(n)] = t.values[static_cast<Eigen::Index>(off)];
    for (std::size_t k = rank; k-- > 0;) {
      if (++counter[k] < idx[k].size()) break;
      counter[k] = 0;
    }
  }
  return out;
}

Vector select(const Vector& v, const std::vector<std::size_t>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(idx[i])];
  return out;
}

std::vector<std::string> snapshot_roles(std::size_t n_spatial, bool has_time) {
  std::vector<std::string> roles(n_spatial, "spatial");
  if (has_time) roles.push_back("temporal");
  return roles;
}

/// Per-axis index lists of the training sub-lattice within a snapshot.
std::vector<std::vector<std::size_t>> snapshot_index(const std::vector<std::size_t>& shape, bool has_time,
                                                     std::size_t spatial_stride, std::size_t time_stride) {
  std::vector<std::vector<std::size_t>> idx;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    const bool time_axis = has_time && k + 1 == shape.size();
    idx.push_back(strided(shape[k], time_axis ? time_stride : spatial_stride));
  }
  return idx;
}

std::vector<std::uint8_t> spread_flags(const std::vector<std::uint8_t>& spatial, std::size_t n_times) {
  std::vector<std::uint8_t> out;
  out.reserve(spatial.size() * n_times);
  for (auto f : spatial) out.insert(out.end(), n_times, f);
  return out;
}

std::vector<std::uint8_t> lifted_flags(const LiftedMask& lifted) {
  std::vector<std::uint8_t> flags(lifted.full_size, 1);
  for (auto g : lifted.gaps) flags[g] = 0;
  return flags;
}

Json parameters_to_json(const Matrix& p, std::size_t row) { return vector_to_json(p.row(static_cast<Eigen::Index>(row)).transpose()); }

ProductKernelSpec build_spec(const KernelConfig& k, const ProductGrid& grid, std::uint64_t seed) {
  ProductKernelSpec spec;
  spec.relative_jitter = k.relative_jitter;
  std::mt19937_64 seeder(seed);
  for (std::size_t i = 0; i < grid.axes.size(); ++i) {
    const auto& axis = grid.axes[i];
    const FactorOverride o = i < k.factors.size() ? k.factors[i] : FactorOverride{};
    const FeatureMapKind map = o.feature_map.value_or(k.feature_map);
    const std::uint64_t map_seed = seeder();
    FactorKernel f;
    if (map == FeatureMapKind::deep) {
      const std::size_t out = axis.role == AxisRole::parameter ? axis.dim() : k.latent_dim;
      f.map = FeatureMap::network(axis.dim(), k.hidden, out, k.activation, map_seed);
      f.map.fit_input_normalization(axis.points);
    } else {
      f.map = FeatureMap::identity(axis.dim());
    }
    f.base.family = o.family.value_or(k.family);
    f.base.log_lengthscales = Vector::Zero(static_cast<Eigen::Index>(f.map.output_dim()));
    spec.factors.push_back(std::move(f));
  }
  spec.validate();
  return spec;
}

std::vector<std::uint8_t> random_flags(std::size_t n, double fraction, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5bd1e9955bd1e995ULL);
  std::size_t ng = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
  ng = std::min(ng, n - 1);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint8_t> flags(n, 1);
  for (std::size_t i = 0; i < ng; ++i) flags[order[i]] = 0;
  return flags;
}

}  // namespace

std::vector<std::size_t> Dataset::spatial_shape() const {
  std::vector<std::size_t> s;
  for (const auto& a : spatial) s.push_back(static_cast<std::size_t>(a.size()));
  return s;
}

// ------------------------------------------------------------------ datasets

Dataset generate_dataset(const RunConfig& config) {
  Dataset d;
  d.kind = config.dataset.kind;
  d.seed = config.seed;
  d.test_parameters = config.dataset.test_parameters;
  if (d.kind == DatasetKind::burgers) {
    const auto& b = config.dataset.burgers;
    d.train_parameters = sobol_points(config.dataset.n_train, b.mu_lo, b.mu_hi);
    auto solve_all = [&](const Matrix& params, std::vector<FieldTensor>& out) {
      out.assign(static_cast<std::size_t>(params.rows()), FieldTensor{});
      parallel_for(out.size(), [&](std::size_t i) {
        BurgersConfig c;
        c.mu1 = params(static_cast<Eigen::Index>(i), 0);
        c.mu2 = params(static_cast<Eigen::Index>(i), 1);
        c.M = b.M;
        c.Nt = b.Nt;
        c.T_final = b.T_final;
        c.x_max = b.x_max;
        c.dt = b.dt;
        check_burgers_box(c.mu1, c.mu2);
        out[i] = burgers_solve(c).field;
      });
    };
    solve_all(d.train_parameters, d.train);
    solve_all(d.test_parameters, d.test);
    d.spatial = {Vector::LinSpaced(static_cast<Eigen::Index>(b.M), 0.0, b.x_max)};
    d.times = b.Nt > 1 ? Vector(Vector::LinSpaced(static_cast<Eigen::Index>(b.Nt), 0.0, b.T_final)) : Vector(Vector::Zero(1));
    return d;
  }

  const auto& a = config.dataset.annulus;
  d.train_parameters = sobol_points(config.dataset.n_train, a.mu_lo, a.mu_hi);
  const auto L = static_cast<Eigen::Index>(a.lattice);
  const Vector axis = a.reference_map ? Vector(Vector::LinSpaced(L, 0.0, 1.0)) : Vector(Vector::LinSpaced(L, -a.r_out, a.r_out));
  d.spatial = {axis, axis};
  std::vector<std::uint8_t> mask;
  auto embed_all = [&](const Matrix& params, std::vector<FieldTensor>& out) {
    out.clear();
    for (Eigen::Index i = 0; i < params.rows(); ++i) {
      ScatteredSnapshot snap = annulus_snapshot(params.row(i).transpose(), a.r_in, a.r_out, a.n_points, config.seed);
      if (a.reference_map) snap = apply_map(AnalyticMap::annulus(a.r_in, a.r_out), snap, MapDirection::forward);
      Embedding e = embed_to_lattice(snap, d.spatial, a.radius, a.neighbors);
      std::vector<std::uint8_t> flags = e.mask.flags();
      if (mask.empty()) mask = flags;
      if (flags != mask) throw_numerical("annulus snapshots produced different gap masks");
      out.push_back(std::move(e.field));
    }
  };
  embed_all(d.train_parameters, d.train);
  embed_all(d.test_parameters, d.test);
  if (std::find(mask.begin(), mask.end(), 0) != mask.end()) d.mask = mask;
  return d;
}

Json write_dataset(const Dataset& d, const std::string& dir) {
  ensure_directory(dir);
  const bool has_time = d.times.has_value();
  const std::size_t n_times = has_time ? static_cast<std::size_t>(d.times->size()) : 1;
  const auto roles = snapshot_roles(d.spatial.size(), has_time);
  std::optional<std::vector<std::uint8_t>> mask;
  if (d.mask) mask = spread_flags(*d.mask, n_times);

  auto write_set = [&](const char* prefix, const Matrix& params, const std::vector<FieldTensor>& snaps) {
    Json list = Json::array();
    for (std::size_t i = 0; i < snaps.size(); ++i) {
      const std::string name = numbered(prefix, i);
      write_tensor_file((fs::path(dir) / name).string(), TensorFileData{snaps[i], roles, mask});
      list.push_back({{"parameters", parameters_to_json(params, i)}, {"file", name}});
    }
    return list;
  };
  Json spatial = Json::array();
  for (const auto& a : d.spatial) spatial.push_back(vector_to_json(a));
  Json manifest = {{"format", kDatasetFormat},
                   {"kind", to_string(d.kind)},
                   {"seed", d.seed},
                   {"parameter_dim", d.train_parameters.cols()},
                   {"spatial_axes", spatial},
                   {"time_axis", has_time ? vector_to_json(*d.times) : Json(nullptr)},
                   {"gappy", d.mask.has_value()},
                   {"train", write_set("train", d.train_parameters, d.train)},
                   {"test", write_set("test", d.test_parameters, d.test)}};
  write_json_file((fs::path(dir) / "manifest.json").string(), manifest);
  return manifest;
}

Dataset read_dataset(const std::string& dir) {
  const Json m = read_json_file((fs::path(dir) / "manifest.json").string());
  Dataset d;
  try {
    if (m.value("format", "") != kDatasetFormat) throw IoError(dir + ": not a kgp dataset manifest");
    const std::string kind = m.at("kind").get<std::string>();
    d.kind = kind == "burgers" ? DatasetKind::burgers : DatasetKind::annulus;
    d.seed = m.at("seed").get<std::uint64_t>();
    for (const auto& a : m.at("spatial_axes")) d.spatial.push_back(vector_from_json(a, "spatial axis"));
    if (!m.at("time_axis").is_null()) d.times = vector_from_json(m.at("time_axis"), "time axis");
    const auto dim = m.at("parameter_dim").get<Eigen::Index>();
    auto read_set = [&](const Json& list, Matrix& params, std::vector<FieldTensor>& snaps) {
      params.resize(static_cast<Eigen::Index>(list.size()), dim);
      for (std::size_t i = 0; i < list.size(); ++i) {
        Vector p = vector_from_json(list[i].at("parameters"), "snapshot parameters");
        if (p.size() != dim) throw IoError(dir + ": snapshot parameter dimension mismatch");
        params.row(static_cast<Eigen::Index>(i)) = p.transpose();
        TensorFileData t = read_tensor_file((fs::path(dir) / list[i].at("file").get<std::string>()).string());
        if (t.mask) {
          const std::size_t n_times = d.times ? static_cast<std::size_t>(d.times->size()) : 1;
          std::vector<std::uint8_t> spatial;
          for (std::size_t s = 0; s < t.mask->size(); s += n_times) spatial.push_back((*t.mask)[s]);
          if (spread_flags(spatial, n_times) != *t.mask) throw IoError(dir + ": mask varies in time");
          if (!d.mask) d.mask = spatial;
          if (*d.mask != spatial) throw IoError(dir + ": snapshots disagree on the gap mask");
        }
        snaps.push_back(std::move(t.tensor));
      }
    };
    read_set(m.at("train"), d.train_parameters, d.train);
    read_set(m.at("test"), d.test_parameters, d.test);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(dir + ": malformed manifest (" + e.what() + ")");
  }
  std::vector<std::size_t> shape = d.spatial_shape();
  if (d.times) shape.push_back(static_cast<std::size_t>(d.times->size()));
  for (const auto* set : {&d.train, &d.test})
    for (const auto& t : *set)
      if (t.shape != shape) throw IoError(dir + ": snapshot shape does not match the manifest axes");
  if (d.train.empty()) throw IoError(dir + ": dataset has no training snapshots");
  return d;
}

// -------------------------------------------------------------------- models

ModelBundle train_model(const RunConfig& config, const Dataset& data, std::size_t n_use) {
  const std::size_t n = n_use ? n_use : data.train.size();
  if (n > data.train.size())
    throw_validation("requested " + std::to_string(n) + " training snapshots, dataset has " +
                     std::to_string(data.train.size()));
  const bool has_time = data.times.has_value();
  const auto idx = snapshot_index(data.train.front().shape, has_time, config.grid.spatial_stride,
                                  config.grid.time_stride);
  std::vector<Vector> spatial;
  for (std::size_t k = 0; k < data.spatial.size(); ++k) spatial.push_back(select(data.spatial[k], idx[k]));
  Vector times;
  if (has_time) times = select(*data.times, idx.back());
  ProductGrid grid = make_grid(data.train_parameters.topRows(static_cast<Eigen::Index>(n)), spatial,
                               has_time ? &times : nullptr);
  const std::size_t per = grid.size() / n;
  Vector y(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t j = 0; j < n; ++j)
    y.segment(static_cast<Eigen::Index>(j * per), static_cast<Eigen::Index>(per)) = extract(data.train[j], idx);

  // Spatial regular flags on the training sub-lattice.
  const std::vector<std::size_t> spatial_shape = grid.spatial_shape();
  std::vector<std::uint8_t> flags(shape_product(spatial_shape), 1);
  if (data.mask) {
    FieldTensor full_flags(data.spatial_shape(), Vector(static_cast<Eigen::Index>(data.mask->size())));
    for (std::size_t s = 0; s < data.mask->size(); ++s) full_flags.values[static_cast<Eigen::Index>(s)] = (*data.mask)[s];
    Vector sub = extract(full_flags, std::vector<std::vector<std::size_t>>(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(data.spatial.size())));
    for (std::size_t s = 0; s < flags.size(); ++s) flags[s] = sub[static_cast<Eigen::Index>(s)] != 0.0;
  }
  switch (config.gappy.mask_source) {
    case MaskSource::dataset: break;
    case MaskSource::none:
      if (std::find(flags.begin(), flags.end(), 0) != flags.end())
        throw_validation("dataset has gaps; gappy.mask_source 'none' needs gap-free data");
      break;
    case MaskSource::random: {
      const auto extra = random_flags(flags.size(), config.gappy.gap_fraction, config.seed);
      for (std::size_t s = 0; s < flags.size(); ++s) flags[s] = flags[s] && extra[s];
      break;
    }
  }
  GappyMask mask = GappyMask::from_flags(spatial_shape, flags);
  LiftedMask lifted = lift_mask(mask, grid.parameter_count(), grid.time_count());
  for (auto g : lifted.gaps) y[static_cast<Eigen::Index>(g)] = kNaN;
  const Vector y_r = select(y, lifted.regular);
  if (!y_r.allFinite()) throw_validation("training targets contain non-finite values at regular points");
  const auto [mean, var] = target_moments(y_r);

  ProductKernelSpec spec = build_spec(config.kernel, grid, config.seed);
  initialize_hyperparameters(spec, grid, var);
  TrainProblem problem;
  if (mask.gaps.empty()) {
    problem = GridProblem{grid, FieldTensor(grid.shape(), (y.array() - mean).matrix())};
  } else {
    problem = GappyProblem{grid, mask, (y_r.array() - mean).matrix()};
  }
  TrainResult r = train(problem, spec, config.training.initial_noise, config.training);

  ModelBundle m;
  m.spec = r.spec;
  m.grid = grid;
  m.sigma2 = r.sigma2;
  m.y_offset = mean;
  if (!mask.gaps.empty()) m.mask = mask;
  m.cg = config.gappy.cg;
  m.targets = FieldTensor(grid.shape(), y);
  m.spatial_stride = config.grid.spatial_stride;
  m.time_stride = config.grid.time_stride;
  m.initial_nlml = r.initial_nlml;
  m.best_nlml = r.best_nlml;
  m.best_iteration = r.best_iteration;
  m.trace = std::move(r.trace);
  return m;
}

void write_model(const ModelBundle& m, const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) ensure_directory(p.parent_path().string());
  const std::string targets_name = p.stem().string() + ".targets.kgpt";
  std::vector<std::string> roles;
  for (const auto& a : m.grid.axes) roles.push_back(to_string(a.role));
  std::optional<std::vector<std::uint8_t>> flags;
  Json mask = nullptr;
  if (m.gappy()) {
    flags = lifted_flags(lift_mask(*m.mask, m.grid.parameter_count(), m.grid.time_count()));
    mask = m.mask->flags();
  }
  write_tensor_file((p.parent_path() / targets_name).string(), TensorFileData{m.targets, roles, flags});
  Json j = {{"format", kModelFormat},
            {"kind", m.gappy() ? "gappy" : "grid"},
            {"spec", to_json(m.spec)},
            {"grid", to_json(m.grid)},
            {"sigma2", m.sigma2},
            {"y_offset", m.y_offset},
            {"mask", mask},
            {"cg", {{"tolerance", m.cg.tolerance}, {"max_iterations", m.cg.max_iterations}}},
            {"targets", targets_name},
            {"spatial_stride", m.spatial_stride},
            {"time_stride", m.time_stride},
            {"training",
             {{"initial_nlml", m.initial_nlml}, {"best_nlml", m.best_nlml}, {"best_iteration", m.best_iteration}}}};
  write_json_file(path, j);
}

ModelBundle read_model(const std::string& path) {
  const Json j = read_json_file(path);
  ModelBundle m;
  try {
    require_known_keys(j, {"format", "kind", "spec", "grid", "sigma2", "y_offset", "mask", "cg", "targets",
                           "spatial_stride", "time_stride", "training"},
                       "model file");
    if (j.value("format", "") != kModelFormat) throw IoError(path + ": not a kgp model file");
    m.spec = kernel_spec_from_json(j.at("spec"));
    m.grid = grid_from_json(j.at("grid"));
    m.sigma2 = j.at("sigma2").get<double>();
    m.y_offset = j.at("y_offset").get<double>();
    if (!j.at("mask").is_null())
      m.mask = GappyMask::from_flags(m.grid.spatial_shape(), j.at("mask").get<std::vector<std::uint8_t>>());
    m.cg.tolerance = j.at("cg").at("tolerance").get<double>();
    m.cg.max_iterations = j.at("cg").at("max_iterations").get<std::size_t>();
    m.spatial_stride = j.at("spatial_stride").get<std::size_t>();
    m.time_stride = j.at("time_stride").get<std::size_t>();
    m.initial_nlml = j.at("training").at("initial_nlml").get<double>();
    m.best_nlml = j.at("training").at("best_nlml").get<double>();
    m.best_iteration = j.at("training").at("best_iteration").get<std::size_t>();
    const fs::path targets = fs::path(path).parent_path() / j.at("targets").get<std::string>();
    m.targets = read_tensor_file(targets.string()).tensor;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": malformed model file (" + e.what() + ")");
  }
  if (m.spec.factors.size() != m.grid.axes.size()) throw IoError(path + ": kernel factors do not match the grid");
  if (m.targets.shape != m.grid.shape()) throw IoError(path + ": targets do not match the grid");
  if (!(m.sigma2 > 0.0)) throw IoError(path + ": noise variance must be positive");
  return m;
}

FittedBundle refit(const ModelBundle& m) {
  if (m.gappy()) {
    LiftedMask lifted = lift_mask(*m.mask, m.grid.parameter_count(), m.grid.time_count());
    Vector y_r = (select(m.targets.values, lifted.regular).array() - m.y_offset).matrix();
    return {m, fit_gappy(m.spec, m.grid, *m.mask, y_r, m.sigma2, m.cg, m.y_offset)};
  }
  FieldTensor y(m.grid.shape(), (m.targets.values.array() - m.y_offset).matrix());
  if (!y.values.allFinite()) throw_validation("rectilinear model targets must be finite");
  return {m, fit(m.spec, m.grid, y, m.sigma2, m.y_offset)};
}

Prediction predict_parameters(const FittedBundle& model, const Matrix& parameters) {
  const ModelBundle& m = model.bundle;
  if (parameters.cols() != static_cast<Eigen::Index>(m.grid.axes[0].dim()))
    throw_dimension("prediction parameters have " + std::to_string(parameters.cols()) + " columns, model expects " +
                    std::to_string(m.grid.axes[0].dim()));
  Prediction p;
  p.grid = m.grid;
  p.grid.axes[0].points = parameters;
  p.grid.validate();
  if (const auto* fm = std::get_if<FittedModel>(&model.fitted)) {
    p.mean = predict_mean(*fm, p.grid);
    p.variance = predict_var(*fm, p.grid).variance;
    return p;
  }
  const auto& gm = std::get<GappyModel>(model.fitted);
  LiftedMask lifted = lift_mask(*m.mask, p.grid.parameter_count(), p.grid.time_count());
  auto full = [&](const Vector& part) {
    Vector v = Vector::Constant(static_cast<Eigen::Index>(lifted.full_size), kNaN);
    scatter(part, lifted.regular, v);
    return FieldTensor(p.grid.shape(), v);
  };
  p.mean = full(gappy_predict_mean(gm, p.grid, *m.mask));
  VarianceBounds b = gappy_predict_var_bounds(gm, p.grid, *m.mask);
  p.variance_lower = full(b.lower);
  p.variance_upper = full(b.upper);
  p.mask = lifted_flags(lifted);
  return p;
}

namespace {

/// Truth and prediction entries at regular points of snapshot j.
std::pair<Vector, Vector> paired(const FittedBundle& model, const Prediction& pred, std::size_t j,
                                 const FieldTensor& truth) {
  const ModelBundle& m = model.bundle;
  const auto idx = snapshot_index(truth.shape, m.grid.has_time(), m.spatial_stride, m.time_stride);
  Vector t = extract(truth, idx);
  const std::size_t per = pred.grid.size() / pred.grid.parameter_count();
  if (static_cast<std::size_t>(t.size()) != per) throw_dimension("truth snapshot does not match the model lattice");
  if (j >= pred.grid.parameter_count()) throw_dimension("snapshot index out of range");
  Vector p = pred.mean.values.segment(static_cast<Eigen::Index>(j * per), static_cast<Eigen::Index>(per));
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < per; ++i) {
    const bool regular = !pred.mask || (*pred.mask)[j * per + i];
    if (regular && std::isfinite(t[static_cast<Eigen::Index>(i)])) keep.push_back(i);
  }
  return {select(t, keep), select(p, keep)};
}

}  // namespace

double snapshot_error(const FittedBundle& model, const Prediction& pred, std::size_t j, const FieldTensor& truth) {
  auto [t, p] = paired(model, pred, j, truth);
  return relative_error(t, p);
}

double pooled_error(const FittedBundle& model, const Prediction& pred, const std::vector<FieldTensor>& truth) {
  std::vector<double> ts, ps;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    auto [t, p] = paired(model, pred, j, truth[j]);
    ts.insert(ts.end(), t.data(), t.data() + t.size());
    ps.insert(ps.end(), p.data(), p.data() + p.size());
  }
  return relative_error(Eigen::Map<Vector>(ts.data(), static_cast<Eigen::Index>(ts.size())),
                        Eigen::Map<Vector>(ps.data(), static_cast<Eigen::Index>(ps.size())));
}

// ------------------------------------------------------------------ commands

Json cmd_generate(const RunConfig& config) {
  const std::string dir = config.dataset_dir();
  Json manifest = write_dataset(generate_dataset(config), dir);
  write_resolved_config(config, dir);
  return manifest;
}

ModelBundle cmd_train(const RunConfig& config) {
  Dataset data = read_dataset(config.dataset_dir());
  ensure_directory(config.output_dir);
  write_resolved_config(config, config.output_dir);
  const std::string trace_path = (fs::path(config.output_dir) / "trace.csv").string();
  try {
    ModelBundle m = train_model(config, data);
    write_model(m, (fs::path(config.output_dir) / "model.json").string());
    write_text_file(trace_path, m.trace.to_csv());
    return m;
  } catch (const TrainingAborted& e) {
    write_text_file(trace_path, e.trace().to_csv());
    throw;
  }
}

std::optional<double> cmd_predict(const RunConfig& config) {
  FittedBundle model = refit(read_model(config.model_path()));
  const std::string out = (fs::path(config.output_dir) / "predictions").string();
  ensure_directory(out);
  write_resolved_config(config, out);

  std::optional<Dataset> data;
  Matrix params = config.predict.parameters;
  if (params.size() == 0) {
    data = read_dataset(config.dataset_dir());
    params = data->test_parameters;
  }
  if (params.rows() == 0) throw_validation("no parameters to predict at");
  Prediction p = predict_parameters(model, params);
  std::vector<std::string> roles;
  for (const auto& a : p.grid.axes) roles.push_back(to_string(a.role));
  auto write = [&](const char* name, const FieldTensor& t) {
    write_tensor_file((fs::path(out) / name).string(), TensorFileData{t, roles, p.mask});
  };
  write("mean.kgpt", p.mean);
  if (p.variance) write("variance.kgpt", *p.variance);
  if (p.variance_lower) write("variance_lower.kgpt", *p.variance_lower);
  if (p.variance_upper) write("variance_upper.kgpt", *p.variance_upper);
  write_json_file((fs::path(out) / "parameters.json").string(), {{"parameters", matrix_to_json(params)}});
  if (!data) return std::nullopt;

  std::ostringstream csv;
  csv.precision(10);
  csv << "index";
  for (Eigen::Index c = 0; c < params.cols(); ++c) csv << ",mu" << c + 1;
  csv << ",relative_error\n";
  for (std::size_t j = 0; j < data->test.size(); ++j) {
    csv << j;
    for (Eigen::Index c = 0; c < params.cols(); ++c) csv << ',' << params(static_cast<Eigen::Index>(j), c);
    csv << ',' << snapshot_error(model, p, j, data->test[j]) << '\n';
  }
  const double pooled = pooled_error(model, p, data->test);
  csv << "all";
  for (Eigen::Index c = 0; c < params.cols(); ++c) csv << ',';
  csv << ',' << pooled << '\n';
  write_text_file((fs::path(out) / "errors.csv").string(), csv.str());
  return pooled;
}

VerifyReport cmd_verify(VerifySuite suite, std::uint64_t seed, Perturbation perturbation, const std::string& out_dir) {
  VerifyReport r = run_verify(suite, seed, perturbation);
  if (!out_dir.empty()) {
    ensure_directory(out_dir);
    write_json_file((fs::path(out_dir) / ("verify_" + to_string(suite) + ".json")).string(), r.to_json());
  }
  return r;
}

std::vector<BenchRow> cmd_bench(const BenchOptions& options, const std::string& out_dir) {
  std::vector<BenchRow> rows = run_bench(options);
  if (!out_dir.empty()) {
    ensure_directory(out_dir);
    write_text_file((fs::path(out_dir) / "bench.csv").string(), bench_csv(rows));
  }
  return rows;
}

std::vector<StudyRow> cmd_study(const RunConfig& config) {
  if (config.study.n_values.empty() || config.study.models.empty()) throw_validation("study needs sizes and models");
  RunConfig gen = config;
  gen.dataset.n_train = *std::max_element(config.study.n_values.begin(), config.study.n_values.end());
  const fs::path out = fs::path(config.output_dir) / "study";
  ensure_directory(out.string());
  write_resolved_config(config, out.string());
  Dataset data = generate_dataset(gen);
  write_dataset(data, (out / "data").string());

  std::vector<StudyRow> rows;
  auto write_csv = [&] {
    std::ostringstream csv;
    csv.precision(10);
    csv << "n_train,model,initial_nlml,best_nlml,best_iteration,test_error,seconds\n";
    for (const auto& r : rows)
      csv << r.n_train << ',' << r.model << ',' << r.initial_nlml << ',' << r.best_nlml << ',' << r.best_iteration
          << ',' << r.test_error << ',' << r.seconds << '\n';
    write_text_file((out / "study.csv").string(), csv.str());
  };
  for (std::size_t n : config.study.n_values) {
    for (const auto& name : config.study.models) {
      RunConfig c = config;
      c.kernel.feature_map = name == "deep" ? FeatureMapKind::deep : FeatureMapKind::identity;
      if (name == "stationary")
        for (auto& f : c.kernel.factors) f.feature_map.reset();
      const auto start = std::chrono::steady_clock::now();
      ModelBundle m = train_model(c, data, n);
      FittedBundle fb = refit(m);
      Prediction p = predict_parameters(fb, data.test_parameters);
      StudyRow row;
      row.n_train = n;
      row.model = name;
      row.initial_nlml = m.initial_nlml;
      row.best_nlml = m.best_nlml;
      row.best_iteration = m.best_iteration;
      row.test_error = pooled_error(fb, p, data.test);
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const std::string stem = "model_n" + std::to_string(n) + "_" + name;
      write_model(m, (out / (stem + ".json")).string());
      write_text_file((out / (stem + "_trace.csv")).string(), m.trace.to_csv());
      rows.push_back(row);
      write_csv();
    }
  }
  return rows;
}

}  // namespace kgp
