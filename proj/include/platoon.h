/* C interface to the platoon simulation library.
 *
 * All entry points return a status code; on failure platoon_last_error()
 * holds a thread-local message describing what went wrong. Strings returned
 * through char** outputs are heap-allocated and must be released with
 * platoon_string_free().
 */
#ifndef PLATOON_H
#define PLATOON_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum platoon_status {
  PLATOON_OK = 0,
  PLATOON_ERR_INVALID_ARGUMENT = 1,
  PLATOON_ERR_PARSE = 2,
  PLATOON_ERR_NUMERIC = 3,
  PLATOON_ERR_RUNTIME = 4,
  PLATOON_ERR_IO = 5
} platoon_status;

/* Opaque simulation handle: one parsed scenario plus, after platoon_sim_run,
 * its latest result. */
typedef struct platoon_sim platoon_sim;

const char* platoon_version(void);

/* Thread-local message for the most recent failure on this thread. */
const char* platoon_last_error(void);

void platoon_string_free(char* text);

/* Full JSON document of a named preset ("paper-iv"). */
platoon_status platoon_preset_config(const char* name, char** json_out);

int platoon_is_preset(const char* name);

platoon_status platoon_sim_create(const char* config_json, platoon_sim** sim_out);

void platoon_sim_destroy(platoon_sim* sim);

platoon_status platoon_sim_run(platoon_sim* sim, uint64_t seed);

/* Measures of effectiveness of the last run, in the order max position
 * error, max velocity error, average position error, average velocity
 * error. */
platoon_status platoon_sim_moe(const platoon_sim* sim, double* mpe, double* mve, double* ape,
                               double* ave);

/* JSON report of the last run: measures, per-vehicle peaks, string-stability
 * ratios and verdicts, collision flag, diagnostics. */
platoon_status platoon_sim_report_json(const platoon_sim* sim, char** json_out);

/* Writes run.csv, modes.csv, and summary.txt into the directory. */
platoon_status platoon_sim_export(const platoon_sim* sim, const char* directory);

/* Invariant distribution of an n x n transition-rate matrix (row-major).
 * pi_out must hold n doubles. */
platoon_status platoon_invariant_distribution(const double* mu, int n, double* pi_out);

/* Stabilizing solution of A' P + P A - 2 P^2 + Q = 0 for n x n row-major A
 * and Q. p_out receives P (row-major, n*n doubles); residual_out the
 * Frobenius residual; p_eigenvalues_out (optional, n doubles, ascending) the
 * spectrum of P. */
platoon_status platoon_solve_care(const double* a, const double* q, int n, double* p_out,
                                  double* residual_out, double* p_eigenvalues_out);

/* Runs a named verification suite ("markov", "riccati", "observer", "qp",
 * "all"). report_out receives one line per property; n_failed_out the number
 * of failed properties. */
platoon_status platoon_verify(const char* suite, int* n_failed_out, char** report_out);

#ifdef __cplusplus
}
#endif

#endif /* PLATOON_H */
