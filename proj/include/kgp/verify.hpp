/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_VERIFY_HPP
#define KGP_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "kgp/json_io.hpp"

namespace kgp {

/// Property suites run at fixed seeds against dense references.
///   kron    Kronecker identities on random factors
///   oracle  rectilinear NLML, mean and variance against the dense GP
///   lemma1  pseudovalue solve against the dense regular-points solve
///   lemma2  gappy mean and the variance sandwich against the dense GP
///   logdet  eigenvalue interlacing, Nystrom estimate inside its bounds
enum class VerifySuite { kron, oracle, lemma1, lemma2, logdet };

/// Test hooks that corrupt one step by 1e-3 so that a suite must fail.
enum class Perturbation { none, factor, pseudovalues };

std::string to_string(VerifySuite suite);
VerifySuite verify_suite_from_string(const std::string& name);
std::string to_string(Perturbation p);
Perturbation perturbation_from_string(const std::string& name);

inline constexpr double kPerturbationSize = 1e-3;

enum class Relation { at_most, at_least };

struct VerifyCheck {
  std::string name;
  std::size_t instance = 0;
  double value = 0.0;
  double tolerance = 0.0;
  Relation relation = Relation::at_most;

  bool passed() const;
  /// Distance to the tolerance, non-negative iff the check passes.
  double margin() const;
};

/// Reported quantity without a tolerance.
struct VerifyMetric {
  std::string name;
  std::size_t instance = 0;
  double value = 0.0;
};

struct VerifyReport {
  VerifySuite suite = VerifySuite::kron;
  std::uint64_t seed = 0;
  Perturbation perturbation = Perturbation::none;
  std::size_t instances = 0;
  std::vector<VerifyCheck> checks;
  std::vector<VerifyMetric> metrics;
  double seconds = 0.0;

  bool all_passed() const;
  Json to_json() const;
};

/// Throws UsageError when the perturbation does not touch the suite
/// (pseudovalues on kron or oracle).
VerifyReport run_verify(VerifySuite suite, std::uint64_t seed, Perturbation perturbation = Perturbation::none);

}  // namespace kgp

#endif  // KGP_VERIFY_HPP
