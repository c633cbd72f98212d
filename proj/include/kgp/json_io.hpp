/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_JSON_IO_HPP
#define KGP_JSON_IO_HPP

#include <json.hpp>

#include "kgp/grid.hpp"
#include "kgp/kernels.hpp"

namespace kgp {

using Json = nlohmann::json;

Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& what);
/// Matrices are arrays of rows.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& what);

Json to_json(const FeatureMap& map);
FeatureMap feature_map_from_json(const Json& j);
Json to_json(const FactorKernel& factor);
FactorKernel factor_kernel_from_json(const Json& j);
Json to_json(const ProductKernelSpec& spec);
ProductKernelSpec kernel_spec_from_json(const Json& j);
Json to_json(const ProductGrid& grid);
ProductGrid grid_from_json(const Json& j);

/// Rejects keys outside `allowed` with a ValidationError naming the section.
void require_known_keys(const Json& j, const std::vector<std::string>& allowed,
                        const std::string& section);

}  // namespace kgp

#endif  // KGP_JSON_IO_HPP
