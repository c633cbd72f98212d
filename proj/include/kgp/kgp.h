/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_H
#define KGP_H

#include <stddef.h>
#include <stdint.h>

#if defined(KGP_BUILDING_LIBRARY)
#define KGP_API __attribute__((visibility("default")))
#else
#define KGP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Nonzero values double as CLI exit codes. */
typedef enum kgp_status {
  KGP_OK = 0,
  KGP_ERR_USAGE = 1,
  KGP_ERR_VALIDATION = 2,
  KGP_ERR_NUMERICAL = 3
} kgp_status;

typedef struct kgp_config kgp_config;
typedef struct kgp_model kgp_model;

/* Message of the last failed call on this thread; "" when none. The pointer
 * stays valid until the next call into the library on the same thread. */
KGP_API const char* kgp_last_error(void);
KGP_API const char* kgp_version(void);

/* Run configuration (JSON, unknown keys rejected). */
KGP_API kgp_status kgp_config_load(const char* path, kgp_config** out);
KGP_API kgp_status kgp_config_parse(const char* json, kgp_config** out);
/* Default configuration. */
KGP_API kgp_status kgp_config_new(kgp_config** out);
KGP_API kgp_status kgp_config_set_seed(kgp_config* config, uint64_t seed);
KGP_API kgp_status kgp_config_set_output_dir(kgp_config* config, const char* dir);
/* Resolved configuration as JSON. The string is owned by the handle and
 * valid until the next call on it. */
KGP_API const char* kgp_config_json(kgp_config* config);
/* Output directory of the configuration; owned by the handle. */
KGP_API const char* kgp_config_output_dir(const kgp_config* config);
KGP_API void kgp_config_free(kgp_config* config);

/* Commands. Each writes its resolved configuration beside its outputs. */
KGP_API kgp_status kgp_generate(const kgp_config* config);
KGP_API kgp_status kgp_train(const kgp_config* config);
/* Writes predictions; *test_error (may be NULL) receives the pooled relative
 * error when the dataset provides held-out truth, otherwise NaN. */
KGP_API kgp_status kgp_predict(const kgp_config* config, double* test_error);
KGP_API kgp_status kgp_study(const kgp_config* config);

/* suite: kron, oracle, lemma1, lemma2 or logdet. perturb: NULL, "none",
 * "factor" or "pseudovalues". *passed receives 1 iff every check passed. The
 * report is written to <out_dir>/verify_<suite>.json unless out_dir is NULL. */
KGP_API kgp_status kgp_verify(const char* suite, uint64_t seed, const char* perturb, const char* out_dir,
                              int* passed);

/* Timing sweep over 1D lattices of the given sizes; writes
 * <out_dir>/bench.csv unless out_dir is NULL. */
KGP_API kgp_status kgp_bench(const size_t* sizes, size_t n_sizes, uint64_t seed, const char* out_dir);

/* Trained models. Loading recomputes the eigendecompositions. */
KGP_API kgp_status kgp_model_load(const char* path, kgp_model** out);
KGP_API void kgp_model_free(kgp_model* model);
KGP_API int kgp_model_is_gappy(const kgp_model* model);
KGP_API size_t kgp_model_parameter_dim(const kgp_model* model);
/* Lattice points per parameter (spatial points times time points). */
KGP_API size_t kgp_model_snapshot_size(const kgp_model* model);

/* Predicts at n parameter rows (row-major, n x parameter_dim). Each output
 * buffer holds n * snapshot_size values in lattice order; gap entries are
 * NaN. Rectilinear models write the exact variance to both var_lower and
 * var_upper. Any output pointer may be NULL. */
KGP_API kgp_status kgp_model_predict(const kgp_model* model, const double* parameters, size_t n, double* mean,
                                     double* var_lower, double* var_upper);

#ifdef __cplusplus
}
#endif

#endif /* KGP_H */
