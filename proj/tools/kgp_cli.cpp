/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kgp/kgp.h"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int report(kgp_status status) {
  if (status != KGP_OK) std::cerr << "kgp: error: " << kgp_last_error() << "\n";
  return static_cast<int>(status);
}

/// Loads --config (or defaults) and applies --seed and --out.
kgp_status open_config(const Common& c, kgp_config** cfg) {
  kgp_status s = c.config.empty() ? kgp_config_new(cfg) : kgp_config_load(c.config.c_str(), cfg);
  if (s != KGP_OK) return s;
  if (c.seed) s = kgp_config_set_seed(*cfg, *c.seed);
  if (s == KGP_OK && !c.out.empty()) s = kgp_config_set_output_dir(*cfg, c.out.c_str());
  return s;
}

void print_file(const std::string& path) {
  std::ifstream in(path);
  if (in) std::cout << in.rdbuf();
}

using Command = kgp_status (*)(const kgp_config*);

/// Runs the command, then prints `summary` (relative to the output
/// directory) when it succeeds.
int run_with_config(const Common& c, Command command, const char* summary = nullptr) {
  kgp_config* cfg = nullptr;
  kgp_status s = open_config(c, &cfg);
  if (s == KGP_OK) s = command(cfg);
  if (s == KGP_OK && summary) print_file(std::string(kgp_config_output_dir(cfg)) + "/" + summary);
  kgp_config_free(cfg);
  return report(s);
}

void add_common(CLI::App* app, Common& c, bool with_config) {
  if (with_config) app->add_option("--config", c.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Seed overriding the configuration");
  app->add_option("--out", c.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kgp: Kronecker-structured Gaussian process regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kgp_version()));

  Common common;
  auto* generate = app.add_subcommand("generate", "Generate a dataset and its manifest");
  auto* train = app.add_subcommand("train", "Train a model on a generated dataset");
  auto* predict = app.add_subcommand("predict", "Predict mean and variance at held-out parameters");
  auto* study = app.add_subcommand("study", "Stationary vs deep product kernels across training sizes");
  for (auto* sub : {generate, train, predict, study}) add_common(sub, common, true);

  auto* verify = app.add_subcommand("verify", "Run a property suite against dense references");
  std::string suite, perturb = "none";
  verify->add_option("--suite", suite, "kron, oracle, lemma1, lemma2 or logdet")->required();
  verify->add_option("--perturb", perturb, "Test hook: none, factor or pseudovalues");
  add_common(verify, common, false);

  auto* bench = app.add_subcommand("bench", "Time grid NLML and prediction across lattice sizes");
  std::vector<std::size_t> sizes{64, 128, 256, 512, 1024, 2048, 4096};
  bench->add_option("--sizes", sizes, "Comma-separated spatial sizes")->delimiter(',');
  add_common(bench, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(KGP_ERR_USAGE);
  }

  if (generate->parsed()) return run_with_config(common, kgp_generate);
  if (train->parsed()) return run_with_config(common, kgp_train);
  if (study->parsed()) return run_with_config(common, kgp_study, "study/study.csv");
  if (predict->parsed()) {
    kgp_config* cfg = nullptr;
    double err = NAN;
    kgp_status s = open_config(common, &cfg);
    if (s == KGP_OK) s = kgp_predict(cfg, &err);
    kgp_config_free(cfg);
    if (s == KGP_OK && std::isfinite(err)) std::printf("pooled relative test error %.6g\n", err);
    return report(s);
  }
  const std::string out = common.out.empty() ? "kgp_out" : common.out;
  const std::uint64_t seed = common.seed.value_or(0);
  if (verify->parsed()) {
    int passed = 0;
    kgp_status s = kgp_verify(suite.c_str(), seed, perturb.c_str(), out.c_str(), &passed);
    if (s != KGP_OK) return report(s);
    std::printf("verify %s: %s (report %s/verify_%s.json)\n", suite.c_str(), passed ? "passed" : "FAILED",
                out.c_str(), suite.c_str());
    return passed ? 0 : static_cast<int>(KGP_ERR_NUMERICAL);
  }
  if (bench->parsed()) {
    kgp_status s = kgp_bench(sizes.data(), sizes.size(), seed, out.c_str());
    if (s == KGP_OK) print_file(out + "/bench.csv");
    return report(s);
  }
  return static_cast<int>(KGP_ERR_USAGE);
}
