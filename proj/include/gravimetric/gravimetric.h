#ifndef GRAVIMETRIC_H
#define GRAVIMETRIC_H

/* C interface to the gravimetric library. Every call returns a gm_status;
 * on failure the message and error kind of the last failing call on the
 * calling thread are available from gm_last_error() and gm_last_error_kind().
 * Strings returned through char** are owned by the caller and released
 * with gm_string_free(). */

#include <stddef.h>

#if defined(GM_BUILDING_LIBRARY)
#define GM_API __attribute__((visibility("default")))
#else
#define GM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as process exit codes. */
typedef enum gm_status {
  GM_OK = 0,
  GM_ERR_INPUT = 2,
  GM_ERR_CONVERGENCE = 3,
  GM_ERR_STRUCTURE = 4,
  GM_ERR_INTERNAL = 5
} gm_status;

typedef struct gm_bundle gm_bundle;
typedef struct gm_spec gm_spec;
typedef struct gm_estimate gm_estimate;
typedef struct gm_scenario gm_scenario;

GM_API const char* gm_version(void);
GM_API const char* gm_rng_algorithm(void);
GM_API const char* gm_last_error(void);
/* Error kind name such as "SchemaMismatch", or "" after success. */
GM_API const char* gm_last_error_kind(void);
GM_API void gm_string_free(char* s);

/* Input bundle. Each loader replaces the corresponding table. */
GM_API gm_status gm_bundle_new(gm_bundle** out);
GM_API void gm_bundle_free(gm_bundle* b);
GM_API gm_status gm_bundle_load_flows(gm_bundle* b, const char* path);
GM_API gm_status gm_bundle_load_attrs(gm_bundle* b, const char* path);
GM_API gm_status gm_bundle_load_bilateral(gm_bundle* b, const char* path);
GM_API gm_status gm_bundle_load_distances(gm_bundle* b, const char* path);
GM_API gm_status gm_bundle_load_tariffs(gm_bundle* b, const char* path);
GM_API gm_status gm_bundle_load_sectors(gm_bundle* b, const char* path);
/* Reads a country,year,r file and keeps the rows of `exporter`. */
GM_API gm_status gm_bundle_load_remoteness(gm_bundle* b, const char* path, const char* exporter);
/* Computes the exporter's yearly remoteness from the bilateral and distance tables. */
GM_API gm_status gm_bundle_compute_remoteness(gm_bundle* b, const char* exporter);
GM_API int gm_bundle_has_remoteness(const gm_bundle* b);
/* Merge report for the all-sector panel, as JSON. */
GM_API gm_status gm_bundle_merge_report(const gm_bundle* b, char** json_out);
/* Writes the exporter's remoteness series (country,year,r). */
GM_API gm_status gm_remoteness_write(const gm_bundle* b, const char* exporter, const char* path);

/* Model specification: file (.json/.toml) or preset "classical"/"remoteness". */
GM_API gm_status gm_spec_load(const char* path, gm_spec** out);
GM_API gm_status gm_spec_preset(const char* name, gm_spec** out);
GM_API void gm_spec_free(gm_spec* s);
GM_API gm_status gm_spec_to_json(const gm_spec* s, char** json_out);
GM_API int gm_spec_needs_remoteness(const gm_spec* s);

typedef struct gm_estimate_options {
  const char* estimator; /* "ols", "ppml", "nbpml" */
  const char* sector;    /* sector slug, or "all" for the eight sectors plus all-sectors */
  size_t workers;        /* 0 = hardware concurrency */
  int max_iterations;    /* <= 0 keeps the default */
} gm_estimate_options;

GM_API void gm_estimate_options_init(gm_estimate_options* o);

/* Fails only on bad arguments; per-sector fit failures are recorded in
 * the result and summarised by gm_estimate_exit_code(). */
GM_API gm_status gm_estimate_run(const gm_bundle* b, const gm_spec* s, const gm_estimate_options* o,
                                 gm_estimate** out);
GM_API void gm_estimate_free(gm_estimate* e);
GM_API int gm_estimate_exit_code(const gm_estimate* e);
GM_API size_t gm_estimate_sector_count(const gm_estimate* e);
/* Slug of the i-th sector. Pointer stays valid for the life of `e`. */
GM_API const char* gm_estimate_sector(const gm_estimate* e, size_t i);
GM_API gm_status gm_estimate_coefficient(const gm_estimate* e, const char* sector, const char* name,
                                         double* value);
/* One line per sector: slug, status, message. */
GM_API gm_status gm_estimate_summary(const gm_estimate* e, char** text_out);
/* coefficients_<sector>.csv and fit_<sector>.json into `dir` (created). */
GM_API gm_status gm_estimate_write(const gm_estimate* e, const char* dir);

typedef struct gm_scenario_options {
  const char* kind;      /* "soft", "regalign", "hard", "longterm" */
  const char* incidence; /* "multiplicative" (default) or "divisive" */
  gm_estimate_options estimate;
  int gni_enabled;
  double gni_star;
  int has_soft_total;
  double soft_total;
  int has_scenario_total;
  double scenario_total;
} gm_scenario_options;

GM_API void gm_scenario_options_init(gm_scenario_options* o);
/* Runs baseline, soft and the requested kind, then builds the impact report. */
GM_API gm_status gm_scenario_run(const gm_bundle* b, const gm_spec* s, const gm_scenario_options* o,
                                 gm_scenario** out);
GM_API void gm_scenario_free(gm_scenario* sc);
GM_API int gm_scenario_exit_code(const gm_scenario* sc);
GM_API gm_status gm_scenario_impact(const gm_scenario* sc, const char* sector, const char* metric, double* value);
GM_API gm_status gm_scenario_summary(const gm_scenario* sc, char** text_out);
/* baseline/, soft/, <kind>/ fits plus impact.csv, impact.md and, for
 * longterm, substitution.csv. */
GM_API gm_status gm_scenario_write(const gm_scenario* sc, const char* dir);

/* Formula helpers. */
GM_API gm_status gm_percent_effect(double beta, double* out);
GM_API gm_status gm_indicator_relative_impact(double beta_scenario, double beta_soft, double* out);
GM_API gm_status gm_continuous_relative_impact(double beta_scenario, double beta_soft, double* out);
GM_API gm_status gm_worst_case_two_se(double delta, double se, double* out);
GM_API gm_status gm_gni_adjustment(double gni_star, double soft_total, double scenario_total, double* adjusted,
                                   double* percent);

typedef struct gm_synth_options {
  unsigned long long seed;
  size_t n_countries;
  int first_year;
  int last_year;
  size_t n_goods;
  const char* family; /* "poisson", "nb2", "lognormal" */
  double alpha;
  double sigma;
} gm_synth_options;

GM_API void gm_synth_options_init(gm_synth_options* o);
GM_API gm_status gm_synth_write_bundle(const gm_synth_options* o, const char* dir);

/* Lowercase hex SHA-256 of a file. */
GM_API gm_status gm_file_sha256(const char* path, char** hex_out);

#ifdef __cplusplus
}
#endif

#endif
