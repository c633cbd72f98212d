/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/error.hpp"

namespace kgp {

void throw_dimension(const std::string& what) { throw DimensionError(what); }
void throw_validation(const std::string& what) { throw ValidationError(what); }
void throw_numerical(const std::string& what) { throw NumericalError(what); }

}  // namespace kgp
