/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/json_io.hpp"

#include <algorithm>

#include "kgp/error.hpp"

namespace kgp {

Json vector_to_json(const Vector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Vector vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw_validation(what + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw_validation(what + " must be an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Json matrix_to_json(const Matrix& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) j.push_back(vector_to_json(m.row(r).transpose()));
  return j;
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw_validation(what + " must be an array of rows");
  if (j.empty()) return Matrix(0, 0);
  // A flat array is read as a single column.
  if (j[0].is_number()) return vector_from_json(j, what);
  const auto cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    Vector row = vector_from_json(j[r], what);
    if (static_cast<std::size_t>(row.size()) != cols) throw_validation(what + " has ragged rows");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

void require_known_keys(const Json& j, const std::vector<std::string>& allowed,
                        const std::string& section) {
  if (!j.is_object()) throw_validation(section + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw_validation("unknown key '" + it.key() + "' in " + section);
}

Json to_json(const FeatureMap& map) {
  Json j;
  j["input_dim"] = map.input_dim;
  j["activation"] = to_string(map.activation);
  Json layers = Json::array();
  for (std::size_t l = 0; l < map.weights.size(); ++l)
    layers.push_back({{"weights", matrix_to_json(map.weights[l])}, {"bias", vector_to_json(map.biases[l])}});
  j["layers"] = layers;
  if (map.input_shift.size() > 0) {
    j["input_shift"] = vector_to_json(map.input_shift);
    j["input_scale"] = vector_to_json(map.input_scale);
  }
  return j;
}

FeatureMap feature_map_from_json(const Json& j) {
  require_known_keys(j, {"input_dim", "activation", "layers", "input_shift", "input_scale"}, "feature map");
  FeatureMap m;
  m.input_dim = j.at("input_dim").get<std::size_t>();
  m.activation = activation_from_string(j.value("activation", std::string("identity")));
  if (j.contains("layers")) {
    for (const auto& layer : j.at("layers")) {
      require_known_keys(layer, {"weights", "bias"}, "feature map layer");
      Matrix w = matrix_from_json(layer.at("weights"), "layer weights");
      Vector b = vector_from_json(layer.at("bias"), "layer bias");
      m.weights.push_back(std::move(w));
      m.biases.push_back(std::move(b));
    }
  }
  if (j.contains("input_shift")) {
    m.input_shift = vector_from_json(j.at("input_shift"), "input_shift");
    m.input_scale = vector_from_json(j.at("input_scale"), "input_scale");
  }
  return m;
}

Json to_json(const FactorKernel& factor) {
  return {{"family", to_string(factor.base.family)},
          {"log_lengthscales", vector_to_json(factor.base.log_lengthscales)},
          {"log_outputscale", factor.base.log_outputscale},
          {"map", to_json(factor.map)}};
}

FactorKernel factor_kernel_from_json(const Json& j) {
  require_known_keys(j, {"family", "log_lengthscales", "log_outputscale", "map"}, "kernel factor");
  FactorKernel f;
  f.base.family = kernel_family_from_string(j.at("family").get<std::string>());
  f.base.log_lengthscales = vector_from_json(j.at("log_lengthscales"), "log_lengthscales");
  f.base.log_outputscale = j.value("log_outputscale", 0.0);
  f.map = feature_map_from_json(j.at("map"));
  return f;
}

Json to_json(const ProductKernelSpec& spec) {
  Json factors = Json::array();
  for (const auto& f : spec.factors) factors.push_back(to_json(f));
  return {{"relative_jitter", spec.relative_jitter}, {"factors", factors}};
}

ProductKernelSpec kernel_spec_from_json(const Json& j) {
  require_known_keys(j, {"relative_jitter", "factors"}, "kernel spec");
  ProductKernelSpec spec;
  spec.relative_jitter = j.value("relative_jitter", 1e-8);
  for (const auto& f : j.at("factors")) spec.factors.push_back(factor_kernel_from_json(f));
  spec.validate();
  return spec;
}

Json to_json(const ProductGrid& grid) {
  Json axes = Json::array();
  for (const auto& a : grid.axes) axes.push_back({{"role", to_string(a.role)}, {"points", matrix_to_json(a.points)}});
  return {{"axes", axes}};
}

ProductGrid grid_from_json(const Json& j) {
  require_known_keys(j, {"axes"}, "grid");
  ProductGrid g;
  for (const auto& a : j.at("axes")) {
    require_known_keys(a, {"role", "points"}, "grid axis");
    g.axes.push_back({axis_role_from_string(a.at("role").get<std::string>()),
                      matrix_from_json(a.at("points"), "axis points")});
  }
  g.validate();
  return g;
}

}  // namespace kgp
