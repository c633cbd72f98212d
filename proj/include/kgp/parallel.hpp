/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_PARALLEL_HPP
#define KGP_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace kgp {

/// Worker count for internal data parallelism. Honors KGP_THREADS when set,
/// otherwise the hardware concurrency (at least 1).
std::size_t thread_budget();

/// Runs body(i) for i in [0, n) on up to thread_budget() threads. The first
/// exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace kgp

#endif  // KGP_PARALLEL_HPP
