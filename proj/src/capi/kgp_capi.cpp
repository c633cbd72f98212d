/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/kgp.h"

#include <cmath>
#include <exception>
#include <limits>
#include <new>
#include <string>

#include "kgp/error.hpp"
#include "kgp/workflow.hpp"

struct kgp_config {
  kgp::RunConfig config;
  std::string json;
};

struct kgp_model {
  kgp::FittedBundle model;
};

namespace {

thread_local std::string last_error;

kgp_status fail(kgp_status status, const std::string& what) {
  last_error = what;
  return status;
}

template <typename F>
kgp_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return KGP_OK;
  } catch (const kgp::Error& e) {
    return fail(static_cast<kgp_status>(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(KGP_ERR_NUMERICAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(KGP_ERR_NUMERICAL, std::string("internal error: ") + e.what());
  }
}

kgp_status null_argument(const char* name) { return fail(KGP_ERR_USAGE, std::string(name) + " must not be NULL"); }

}  // namespace

extern "C" {

const char* kgp_last_error(void) { return last_error.c_str(); }

const char* kgp_version(void) { return "0.1.0"; }

kgp_status kgp_config_load(const char* path, kgp_config** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] { *out = new kgp_config{kgp::load_run_config(path), {}}; });
}

kgp_status kgp_config_parse(const char* json, kgp_config** out) {
  if (!json) return null_argument("json");
  if (!out) return null_argument("out");
  return guarded([&] {
    kgp::Json j;
    try {
      j = kgp::Json::parse(json);
    } catch (const nlohmann::json::exception& e) {
      throw kgp::ValidationError(std::string("run config: invalid JSON (") + e.what() + ")");
    }
    *out = new kgp_config{kgp::run_config_from_json(j), {}};
  });
}

kgp_status kgp_config_new(kgp_config** out) {
  if (!out) return null_argument("out");
  return guarded([&] {
    kgp::RunConfig c;
    c.resolve();
    *out = new kgp_config{c, {}};
  });
}

kgp_status kgp_config_set_seed(kgp_config* config, uint64_t seed) {
  if (!config) return null_argument("config");
  return guarded([&] {
    config->config.seed = seed;
    config->config.resolve();
  });
}

kgp_status kgp_config_set_output_dir(kgp_config* config, const char* dir) {
  if (!config) return null_argument("config");
  if (!dir) return null_argument("dir");
  return guarded([&] {
    config->config.output_dir = dir;
    config->config.resolve();
  });
}

const char* kgp_config_json(kgp_config* config) {
  if (!config) return "";
  config->json = kgp::to_json(config->config).dump(2);
  return config->json.c_str();
}

const char* kgp_config_output_dir(const kgp_config* config) {
  return config ? config->config.output_dir.c_str() : "";
}

void kgp_config_free(kgp_config* config) { delete config; }

kgp_status kgp_generate(const kgp_config* config) {
  if (!config) return null_argument("config");
  return guarded([&] { kgp::cmd_generate(config->config); });
}

kgp_status kgp_train(const kgp_config* config) {
  if (!config) return null_argument("config");
  return guarded([&] { kgp::cmd_train(config->config); });
}

kgp_status kgp_predict(const kgp_config* config, double* test_error) {
  if (!config) return null_argument("config");
  return guarded([&] {
    auto err = kgp::cmd_predict(config->config);
    if (test_error) *test_error = err ? *err : std::numeric_limits<double>::quiet_NaN();
  });
}

kgp_status kgp_study(const kgp_config* config) {
  if (!config) return null_argument("config");
  return guarded([&] { kgp::cmd_study(config->config); });
}

kgp_status kgp_verify(const char* suite, uint64_t seed, const char* perturb, const char* out_dir, int* passed) {
  if (!suite) return null_argument("suite");
  return guarded([&] {
    auto s = kgp::verify_suite_from_string(suite);
    auto p = perturb ? kgp::perturbation_from_string(perturb) : kgp::Perturbation::none;
    kgp::VerifyReport r = kgp::cmd_verify(s, seed, p, out_dir ? out_dir : "");
    if (passed) *passed = r.all_passed() ? 1 : 0;
  });
}

kgp_status kgp_bench(const size_t* sizes, size_t n_sizes, uint64_t seed, const char* out_dir) {
  if (!sizes && n_sizes) return null_argument("sizes");
  return guarded([&] {
    kgp::BenchOptions o;
    o.sizes.assign(sizes, sizes + n_sizes);
    o.seed = seed;
    kgp::cmd_bench(o, out_dir ? out_dir : "");
  });
}

kgp_status kgp_model_load(const char* path, kgp_model** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] { *out = new kgp_model{kgp::refit(kgp::read_model(path))}; });
}

void kgp_model_free(kgp_model* model) { delete model; }

int kgp_model_is_gappy(const kgp_model* model) { return model && model->model.bundle.gappy() ? 1 : 0; }

size_t kgp_model_parameter_dim(const kgp_model* model) {
  return model ? model->model.bundle.grid.axes[0].dim() : 0;
}

size_t kgp_model_snapshot_size(const kgp_model* model) {
  if (!model) return 0;
  const auto& g = model->model.bundle.grid;
  return g.size() / g.parameter_count();
}

kgp_status kgp_model_predict(const kgp_model* model, const double* parameters, size_t n, double* mean,
                             double* var_lower, double* var_upper) {
  if (!model) return null_argument("model");
  if (!parameters) return null_argument("parameters");
  if (n == 0) return fail(KGP_ERR_USAGE, "at least one parameter row is required");
  return guarded([&] {
    const auto dim = static_cast<Eigen::Index>(kgp_model_parameter_dim(model));
    kgp::Matrix p = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        parameters, static_cast<Eigen::Index>(n), dim);
    kgp::Prediction pred = kgp::predict_parameters(model->model, p);
    const auto& lo = pred.variance ? *pred.variance : *pred.variance_lower;
    const auto& hi = pred.variance ? *pred.variance : *pred.variance_upper;
    const auto count = static_cast<std::size_t>(pred.mean.values.size());
    for (std::size_t i = 0; i < count; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (mean) mean[i] = pred.mean.values[k];
      if (var_lower) var_lower[i] = lo.values[k];
      if (var_upper) var_upper[i] = hi.values[k];
    }
  });
}

}  // extern "C"
