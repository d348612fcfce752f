#ifndef LOA_LOA_H
#define LOA_LOA_H

/* C interface to the learned quasi-Newton library. Every function returns a
 * loa_status; on failure the message is available from loa_last_error() on
 * the calling thread. Handles are opaque and released with their _free
 * function. Strings returned through char** are released with
 * loa_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(LOA_BUILDING_LIBRARY)
#define LOA_API __attribute__((visibility("default")))
#else
#define LOA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum loa_status {
  LOA_OK = 0,
  LOA_ERR_USAGE = 1,
  LOA_ERR_IO = 2,
  LOA_ERR_FORMAT = 3,
  LOA_ERR_PARSE = 4,
  LOA_ERR_SHAPE = 5,
  LOA_ERR_CAPABILITY = 6,
  LOA_ERR_DIVERGENCE = 7,
  LOA_ERR_TRAINING_DIVERGED = 8,
  LOA_ERR_NUMERIC = 9,
  LOA_ERR_INTERNAL = 10
} loa_status;

typedef struct loa_problems loa_problems;
typedef struct loa_weights loa_weights;
typedef struct loa_trajectory loa_trajectory;
typedef struct loa_train_result loa_train_result;
typedef struct loa_table1 loa_table1;

LOA_API const char* loa_version(void);
LOA_API const char* loa_last_error(void);
LOA_API void loa_string_free(char* s);

/* Problem sets */
LOA_API loa_status loa_suite_manifest(size_t n, size_t count, uint64_t seed, size_t inits_per_function,
                                      char** out_json);
LOA_API loa_status loa_problems_from_manifest(const char* json_text, const char* base_dir, loa_problems** out);
LOA_API loa_status loa_problems_from_manifest_file(const char* path, loa_problems** out);
LOA_API void loa_problems_free(loa_problems* p);
LOA_API size_t loa_problems_count(const loa_problems* p);
LOA_API const char* loa_problems_label(const loa_problems* p, size_t i);
LOA_API size_t loa_problems_dim(const loa_problems* p, size_t i);
/* Normalized manifest text of the set. */
LOA_API const char* loa_problems_manifest(const loa_problems* p);

/* Model weights */
typedef enum loa_weights_init {
  LOA_INIT_COINCIDENT = 0, /* reproduces BFGS exactly */
  LOA_INIT_NEAR_COINCIDENT = 1,
  LOA_INIT_RANDOM = 2
} loa_weights_init;

LOA_API loa_status loa_weights_create(loa_weights_init kind, uint64_t seed, loa_weights** out);
LOA_API loa_status loa_weights_load(const char* path, loa_weights** out);
LOA_API loa_status loa_weights_save(const loa_weights* w, const char* path);
LOA_API void loa_weights_free(loa_weights* w);
LOA_API size_t loa_weights_parameter_count(const loa_weights* w);

/* Runs. Algorithm names: gd, hb, newton, adam, bfgs, loa-bfgs (needs weights).
 * gamma ≤ 0 selects the algorithm's default step size: 1/L for gd and hb,
 * 0.1 for adam, 1 for the quasi-Newton methods. */
typedef struct loa_run_options {
  int k;
  double gamma;
  int line_search;
} loa_run_options;

LOA_API void loa_run_options_default(loa_run_options* o);
LOA_API int loa_algorithm_known(const char* name);
/* A divergence still produces a trajectory (flagged, truncated). */
LOA_API loa_status loa_run(const loa_problems* p, size_t index, const char* algorithm, const loa_weights* w,
                           const loa_run_options* o, loa_trajectory** out);
LOA_API void loa_trajectory_free(loa_trajectory* t);
LOA_API int loa_trajectory_diverged(const loa_trajectory* t);
/* Number of recorded iterates (K + 1 unless diverged). */
LOA_API size_t loa_trajectory_length(const loa_trajectory* t);
LOA_API double loa_trajectory_f(const loa_trajectory* t, size_t k);
LOA_API double loa_trajectory_grad_norm(const loa_trajectory* t, size_t k);
/* NaN when the problem has no known minimum. */
LOA_API double loa_trajectory_f_star(const loa_trajectory* t);
LOA_API double loa_trajectory_wall_time(const loa_trajectory* t);
LOA_API size_t loa_trajectory_warning_count(const loa_trajectory* t);
LOA_API const char* loa_trajectory_warning(const loa_trajectory* t, size_t i);
LOA_API loa_status loa_trajectory_write_csv(const loa_trajectory* t, const char* path);

/* Training */
typedef struct loa_train_config {
  int k_unroll;
  int segment;
  int batch_size;
  double lr_fc;
  double lr_skip;
  double clip_norm;
  int epochs;
  uint64_t seed;
  double gamma;
  int coincident_init;
  int parallel;
} loa_train_config;

LOA_API void loa_train_config_default(loa_train_config* c);
/* test may be NULL. start may be NULL (weights from the seed). On
 * LOA_ERR_TRAINING_DIVERGED *out still holds a result whose best weights
 * are the last finite checkpoint. */
LOA_API loa_status loa_train(const loa_train_config* c, const loa_weights* start, const loa_problems* train,
                             const loa_problems* test, loa_train_result** out);
LOA_API void loa_train_result_free(loa_train_result* r);
LOA_API int loa_train_result_best_epoch(const loa_train_result* r);
LOA_API double loa_train_result_best_loss(const loa_train_result* r);
LOA_API size_t loa_train_result_epochs(const loa_train_result* r);
LOA_API double loa_train_result_train_loss(const loa_train_result* r, size_t epoch);
LOA_API double loa_train_result_test_loss(const loa_train_result* r, size_t epoch);
LOA_API loa_status loa_train_result_best_weights(const loa_train_result* r, loa_weights** out);
LOA_API loa_status loa_train_result_last_weights(const loa_train_result* r, loa_weights** out);
LOA_API loa_status loa_train_result_write_history(const loa_train_result* r, const char* path);
LOA_API size_t loa_train_result_warning_count(const loa_train_result* r);
LOA_API const char* loa_train_result_warning(const loa_train_result* r, size_t i);

/* Mean unrolled loss of the weights on a set (BFGS reference ratio; log 2
 * for coincident weights). *valid receives the number of problems used. */
LOA_API loa_status loa_mean_loss(const loa_weights* w, const loa_problems* p, const loa_train_config* c,
                                 double* loss, size_t* valid);

/* Equivariance table */
typedef struct loa_table1_options {
  uint64_t seed;
  size_t dim;
  int k;
  int problem_count;
  double pass_tol;
  double fail_tol;
  double lambda_small;
  double lambda_large;
  int corrupt_adam;
  const loa_weights* weights; /* NULL: seeded near-coincident weights */
} loa_table1_options;

LOA_API void loa_table1_options_default(loa_table1_options* o);
LOA_API loa_status loa_table1_build(const loa_table1_options* o, loa_table1** out);
LOA_API void loa_table1_free(loa_table1* t);
LOA_API int loa_table1_matches(const loa_table1* t);
LOA_API loa_status loa_table1_markdown(const loa_table1* t, char** out);
LOA_API loa_status loa_table1_json(const loa_table1* t, char** out);

#ifdef __cplusplus
}
#endif

#endif
