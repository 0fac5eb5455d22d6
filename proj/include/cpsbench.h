/* C interface to the cell benchmarking core. All functions return
 * CPSB_OK (0) on success, CPSB_ERR_USAGE (2) for invalid user input and
 * CPSB_ERR_INTERNAL (1) for everything else; cpsb_last_error() holds the
 * diagnostic, cpsb_last_output() a human-readable summary of the last
 * successful call. A context is single-threaded. */
#ifndef CPSBENCH_H
#define CPSBENCH_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define CPSB_OK 0
#define CPSB_ERR_INTERNAL 1
#define CPSB_ERR_USAGE 2

typedef struct cpsb_ctx cpsb_ctx;

cpsb_ctx* cpsb_ctx_new(void);
void cpsb_ctx_free(cpsb_ctx* ctx);

/* Valid until the next call on the same context. Never NULL. */
const char* cpsb_last_error(const cpsb_ctx* ctx);
const char* cpsb_last_output(const cpsb_ctx* ctx);

/* Executes the experiments of a manifest file. out_dir may be NULL to
 * use the manifest's [output] dir; has_seed=0 keeps the manifest seed. */
int cpsb_run_manifest(cpsb_ctx* ctx, const char* manifest_path,
                      const char* out_dir, uint64_t seed, int has_seed);

/* task: "app" or "micro". Value lists are comma-separated numbers or
 * NULL/empty for the task's defaults. rounds <= 0 uses the default. */
int cpsb_sweep(cpsb_ctx* ctx, const char* task, int one_factor,
               const char* velocity, const char* acceleration,
               const char* belt, const char* payload, int rounds,
               const char* out_dir, uint64_t seed);

int cpsb_analyze(cpsb_ctx* ctx, const char* data_dir);

/* task: "power_state", "round_energy" or "round_duration". */
int cpsb_train(cpsb_ctx* ctx, const char* data_dir, const char* task,
               int folds, uint64_t seed);

int cpsb_report(cpsb_ctx* ctx, const char* run_dir);

#ifdef __cplusplus
}
#endif

#endif /* CPSBENCH_H */
