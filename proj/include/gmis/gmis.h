/*
 * gmis — adaptive Gaussian-mixture independence sampling for function-space
 * Bayesian inverse problems.
 *
 * C API over the core library: opaque handles, integer status codes, and
 * JSON strings for structured data. Every char* returned through an out
 * parameter is heap-allocated and must be released with gmis_string_free().
 * On any non-GMIS_OK status, gmis_last_error() returns a message describing
 * the failure (thread-local, valid until the next failing call on the same
 * thread).
 */

#ifndef GMIS_H
#define GMIS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GMIS_API __declspec(dllexport)
#else
#define GMIS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gmis_status {
  GMIS_OK = 0,
  GMIS_ERR_INVALID = 1, /* null pointer, bad handle or argument */
  GMIS_ERR_CONFIG = 2,  /* unparseable or inconsistent configuration */
  GMIS_ERR_RUNTIME = 3  /* numerical or I/O failure during execution */
} gmis_status;

GMIS_API const char* gmis_version(void);
GMIS_API const char* gmis_last_error(void);
GMIS_API void gmis_string_free(char* s);

/* ---- experiment driver --------------------------------------------------- */

/* Fully resolved config JSON for a named preset ("ode", "bimodal",
 * "bimodal-far", "heat", "linear-gaussian"); desk_scale != 0 divides the
 * sample counts by 10. */
GMIS_API gmis_status gmis_preset_config(const char* preset, int desk_scale,
                                        char** config_json_out);

/* Parses and validates a config document; returns the resolved config with
 * every default filled in. */
GMIS_API gmis_status gmis_config_resolve(const char* config_json,
                                         char** resolved_json_out);

/* Runs the configured experiment and writes the artifact files
 * (samples.csv, trace.csv, report.json, manifest.json, ...) into the
 * config's output_dir (overridden by output_dir when non-NULL). Returns the
 * diagnostics report as JSON. */
GMIS_API gmis_status gmis_run(const char* config_json, const char* output_dir,
                              char** report_json_out);

/* Side-by-side comparison of previously written run directories sharing a
 * preset. */
GMIS_API gmis_status gmis_compare(const char* const* run_dirs, size_t n_dirs,
                                  char** comparison_json_out);

/* CSV rendering of a comparison document. */
GMIS_API gmis_status gmis_comparison_csv(const char* comparison_json,
                                         char** csv_out);

/* ---- spectral basis handles ----------------------------------------------- */

typedef struct gmis_basis gmis_basis;

/* kernel_kind: "exponential" or "squared-exponential". points must be
 * strictly increasing; trapezoidal quadrature weights are attached. */
GMIS_API gmis_status gmis_basis_create(const char* kernel_kind,
                                       double length_scale,
                                       const double* points, size_t n_points,
                                       gmis_basis** basis_out);
GMIS_API void gmis_basis_free(gmis_basis* basis);

GMIS_API gmis_status gmis_basis_dim(const gmis_basis* basis, size_t* dim_out);

/* Copies the descending eigenvalues into alpha_out (capacity cap). */
GMIS_API gmis_status gmis_basis_eigenvalues(const gmis_basis* basis,
                                            double* alpha_out, size_t cap);

/* Smallest k with alpha_k/alpha_1 < epsilon (falls back to the full
 * dimension). */
GMIS_API gmis_status gmis_basis_truncation_dim(const gmis_basis* basis,
                                               double epsilon, size_t* k_out);

/* field (length = grid size) -> coefficients (length = dim). */
GMIS_API gmis_status gmis_basis_project(const gmis_basis* basis,
                                        const double* field, size_t n,
                                        double* coeffs_out);

/* coefficients (length <= dim) -> field (length = grid size). */
GMIS_API gmis_status gmis_basis_synthesize(const gmis_basis* basis,
                                           const double* coeffs, size_t n,
                                           double* field_out);

/* ---- mixture proposal handles ---------------------------------------------- */

typedef struct gmis_proposal gmis_proposal;

/* Parses the checkpoint JSON format {"K": k, "components": [{w,x,h}...]};
 * the proposal keeps the basis alive. */
GMIS_API gmis_status gmis_proposal_parse(const gmis_basis* basis,
                                         const char* json,
                                         gmis_proposal** proposal_out);
GMIS_API void gmis_proposal_free(gmis_proposal* proposal);

/* Serializes back to JSON; round trip is bit-faithful for finite doubles. */
GMIS_API gmis_status gmis_proposal_dump(const gmis_proposal* proposal,
                                        char** json_out);

/* JSON array of validity violations (empty array = valid). */
GMIS_API gmis_status gmis_proposal_validate(const gmis_proposal* proposal,
                                            char** violations_json_out);

/* log d(mixture)/d(prior) at a coefficient vector of length >= K. */
GMIS_API gmis_status gmis_proposal_log_density(const gmis_proposal* proposal,
                                               const double* coeffs, size_t n,
                                               double* log_density_out);

/* n_draws coefficient vectors (row-major n_draws x dim) drawn with the
 * pcg32 stream (seed, stream). */
GMIS_API gmis_status gmis_proposal_sample(const gmis_proposal* proposal,
                                          uint64_t seed, uint64_t stream,
                                          size_t n_draws, double* coeffs_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GMIS_H */
