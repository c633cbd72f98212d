/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/params.hpp"

#include <cmath>

#include "kgp/error.hpp"

namespace kgp {

std::string to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::log_lengthscale: return "log_lengthscale";
    case ParamKind::log_outputscale: return "log_outputscale";
    case ParamKind::log_noise: return "log_noise";
    case ParamKind::feature_weights: return "feature_weights";
  }
  return "unknown";
}

ParamSchema ParamSchema::for_spec(const ProductKernelSpec& spec) {
  ParamSchema s;
  auto add = [&s](std::size_t factor, ParamKind kind, std::size_t length) {
    if (length == 0) return;
    s.segments.push_back({factor, kind, s.size, length});
    s.size += length;
  };
  for (std::size_t f = 0; f < spec.factors.size(); ++f) {
    add(f, ParamKind::log_lengthscale, spec.factors[f].base.dim());
    if (f == 0) add(f, ParamKind::log_outputscale, 1);
    add(f, ParamKind::feature_weights, spec.factors[f].map.parameter_count());
  }
  add(0, ParamKind::log_noise, 1);
  return s;
}

const ParamSegment& ParamSchema::segment_of(std::size_t i) const {
  for (const auto& seg : segments)
    if (i >= seg.offset && i < seg.offset + seg.length) return seg;
  throw_dimension("parameter index " + std::to_string(i) + " out of range " + std::to_string(size));
}

std::string ParamSchema::label(std::size_t i) const {
  const auto& seg = segment_of(i);
  if (seg.kind == ParamKind::log_noise) return "log_noise";
  return "factor " + std::to_string(seg.factor) + " " + to_string(seg.kind) + "[" +
         std::to_string(i - seg.offset) + "]";
}

Vector pack(const ParamSchema& schema, const ProductKernelSpec& spec, double sigma2) {
  Vector theta(static_cast<Eigen::Index>(schema.size));
  for (const auto& seg : schema.segments) {
    const auto off = static_cast<Eigen::Index>(seg.offset);
    const auto len = static_cast<Eigen::Index>(seg.length);
    switch (seg.kind) {
      case ParamKind::log_lengthscale:
        theta.segment(off, len) = spec.factors.at(seg.factor).base.log_lengthscales;
        break;
      case ParamKind::log_outputscale:
        theta[off] = spec.factors.at(seg.factor).base.log_outputscale;
        break;
      case ParamKind::feature_weights:
        spec.factors.at(seg.factor).map.get_parameters(theta.data() + off);
        break;
      case ParamKind::log_noise:
        theta[off] = std::log(sigma2);
        break;
    }
  }
  return theta;
}

void unpack(const ParamSchema& schema, const Vector& theta, ProductKernelSpec& spec, double& sigma2) {
  if (static_cast<std::size_t>(theta.size()) != schema.size)
    throw_dimension("parameter vector has " + std::to_string(theta.size()) + " entries, schema " +
                    std::to_string(schema.size));
  for (const auto& seg : schema.segments) {
    const auto off = static_cast<Eigen::Index>(seg.offset);
    const auto len = static_cast<Eigen::Index>(seg.length);
    switch (seg.kind) {
      case ParamKind::log_lengthscale: {
        auto& ll = spec.factors.at(seg.factor).base.log_lengthscales;
        if (ll.size() != len) throw_dimension("lengthscale segment does not match the kernel");
        ll = theta.segment(off, len);
        break;
      }
      case ParamKind::log_outputscale:
        spec.factors.at(seg.factor).base.log_outputscale = theta[off];
        break;
      case ParamKind::feature_weights: {
        auto& map = spec.factors.at(seg.factor).map;
        if (map.parameter_count() != seg.length) throw_dimension("weight segment does not match the feature map");
        map.set_parameters(theta.data() + off);
        break;
      }
      case ParamKind::log_noise:
        sigma2 = std::exp(theta[off]);
        break;
    }
  }
}

Vector grad_fd(const ScalarObjective& f, const Vector& theta, double step,
               const std::vector<bool>* frozen,
               const std::function<std::string(std::size_t)>& label) {
  if (!(step > 0.0)) throw_validation("finite-difference step must be positive");
  Vector g = Vector::Zero(theta.size());
  Vector t = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (frozen && (*frozen)[static_cast<std::size_t>(i)]) continue;
    t[i] = theta[i] + step;
    double fp = f(t);
    t[i] = theta[i] - step;
    double fm = f(t);
    t[i] = theta[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      std::string name = label ? label(static_cast<std::size_t>(i)) : "component " + std::to_string(i);
      throw_numerical("non-finite objective while differentiating " + name);
    }
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

}  // namespace kgp
