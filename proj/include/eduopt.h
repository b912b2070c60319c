/* C interface to the eduopt library. All functions return an eduopt_status;
 * on failure eduopt_last_error() describes the problem (per thread). */
#ifndef EDUOPT_H
#define EDUOPT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EDUOPT_API __declspec(dllexport)
#else
#define EDUOPT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  EDUOPT_OK = 0,
  EDUOPT_ERR_CONFIG = 2,  /* bad input: configuration, arguments, files */
  EDUOPT_ERR_NUMERIC = 3  /* solver or numerical failure */
} eduopt_status;

typedef struct eduopt_context eduopt_context;
typedef struct eduopt_params eduopt_params;
typedef struct eduopt_table eduopt_table;
typedef struct eduopt_panel eduopt_panel;

EDUOPT_API const char* eduopt_version(void);
EDUOPT_API const char* eduopt_last_error(void);

/* Run configuration. config_path may be NULL for the defaults. */
EDUOPT_API eduopt_status eduopt_context_create(const char* config_path, eduopt_context** out);
EDUOPT_API void eduopt_context_destroy(eduopt_context* ctx);

/* Overrides: "seed", "scenario", "out", "cohort" (repeatable), "panel",
 * "shutoff" ("0"/"1"), "zero-shock" ("0"/"1"), "base", "alt". */
EDUOPT_API eduopt_status eduopt_context_set(eduopt_context* ctx, const char* key, const char* value);

/* Runs a subcommand; its console summary is available afterwards. */
EDUOPT_API eduopt_status eduopt_run(eduopt_context* ctx, const char* command);
EDUOPT_API const char* eduopt_context_report(const eduopt_context* ctx);

/* Parameters. path NULL loads the shipped estimates. */
EDUOPT_API eduopt_status eduopt_params_load(const char* path, eduopt_params** out);
EDUOPT_API void eduopt_params_destroy(eduopt_params* p);
/* name like "medium.wage.beta1", or "wage.beta1" for every ability group;
 * "last_age" sets the horizon. */
EDUOPT_API eduopt_status eduopt_params_get(const eduopt_params* p, const char* name, double* value);
EDUOPT_API eduopt_status eduopt_params_set(eduopt_params* p, const char* name, double value);
EDUOPT_API eduopt_status eduopt_params_save(const eduopt_params* p, const char* path);

/* Value table for one ability group ("low", "medium", "high") and a named
 * scenario. cache_dir may be NULL. */
EDUOPT_API eduopt_status eduopt_table_solve(const eduopt_params* p, const char* ability, const char* scenario,
                                            int n_draws, uint64_t seed, const char* cache_dir, eduopt_table** out);
EDUOPT_API void eduopt_table_destroy(eduopt_table* t);
EDUOPT_API eduopt_status eduopt_table_states(const eduopt_table* t, size_t* n_states);
/* lag: 0 work, 1 academic, 2 vocational, 3 home. */
EDUOPT_API eduopt_status eduopt_table_emax(const eduopt_table* t, int age, int k, int nA, int nV, int lag, int jtype,
                                           int hsprox, double* value);

/* Simulates every ability group in p with default initial conditions. */
EDUOPT_API eduopt_status eduopt_panel_simulate(const eduopt_params* p, const char* scenario, int n_individuals,
                                               uint64_t seed, int n_draws, uint64_t integration_seed,
                                               const char* cache_dir, eduopt_panel** out);
EDUOPT_API eduopt_status eduopt_panel_read(const char* path, eduopt_panel** out);
EDUOPT_API void eduopt_panel_destroy(eduopt_panel* panel);
EDUOPT_API eduopt_status eduopt_panel_size(const eduopt_panel* panel, size_t* n_individuals, size_t* n_rows);
EDUOPT_API eduopt_status eduopt_panel_final_schooling(const eduopt_panel* panel, size_t individual, int* years);
EDUOPT_API eduopt_status eduopt_panel_write(const eduopt_panel* panel, const char* path);

#ifdef __cplusplus
}
#endif

#endif
