/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_TENSOR_FILE_HPP
#define KGP_TENSOR_FILE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kgp/kronalg.hpp"

namespace kgp {

/// Binary tensor container:
///   line 1: {"magic":"KGP1","dtype":"f64le","shape":[...],"axis_roles":[...],"mask_present":b}\n
///   then 8 * prod(shape) bytes of little-endian doubles in row-major order,
///   then, if mask_present, prod(shape) bytes with 1 = regular, 0 = gap.
/// Gap entries hold NaN; the mask is authoritative.
struct TensorFileData {
  FieldTensor tensor;
  std::vector<std::string> axis_roles;
  std::optional<std::vector<std::uint8_t>> mask;
};

void write_tensor_file(const std::string& path, const TensorFileData& data);
TensorFileData read_tensor_file(const std::string& path);

std::string encode_tensor(const TensorFileData& data);
TensorFileData decode_tensor(const std::string& bytes, const std::string& origin = "tensor");

}  // namespace kgp

#endif  // KGP_TENSOR_FILE_HPP
