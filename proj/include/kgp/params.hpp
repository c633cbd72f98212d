/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_PARAMS_HPP
#define KGP_PARAMS_HPP

#include <functional>
#include <string>
#include <vector>

#include "kgp/kernels.hpp"

namespace kgp {

enum class ParamKind { log_lengthscale, log_outputscale, log_noise, feature_weights };

std::string to_string(ParamKind kind);

struct ParamSegment {
  std::size_t factor = 0;  // unused for log_noise
  ParamKind kind = ParamKind::log_lengthscale;
  std::size_t offset = 0;
  std::size_t length = 0;
};

/// Flat layout of every trainable quantity. Per factor: log-lengthscales,
/// the log-outputscale (parameter factor only), then feature-map weights
/// layer by layer (row-major weights, then bias). The log-noise comes last.
struct ParamSchema {
  std::vector<ParamSegment> segments;
  std::size_t size = 0;

  static ParamSchema for_spec(const ProductKernelSpec& spec);

  /// Segment owning coordinate i.
  const ParamSegment& segment_of(std::size_t i) const;
  /// Human-readable coordinate label, e.g. "factor 2 log_lengthscale[1]".
  std::string label(std::size_t i) const;
};

Vector pack(const ParamSchema& schema, const ProductKernelSpec& spec, double sigma2);
/// Writes theta into `spec` (which must have the schema's shape) and sigma2.
void unpack(const ParamSchema& schema, const Vector& theta, ProductKernelSpec& spec, double& sigma2);

using ScalarObjective = std::function<double(const Vector&)>;

/// Central differences (f(t + h e_i) - f(t - h e_i)) / 2h. Coordinates with
/// frozen[i] set get 0 without evaluation.
Vector grad_fd(const ScalarObjective& f, const Vector& theta, double step,
               const std::vector<bool>* frozen = nullptr,
               const std::function<std::string(std::size_t)>& label = {});

}  // namespace kgp

#endif  // KGP_PARAMS_HPP
