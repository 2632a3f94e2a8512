#ifndef MMCRL_H
#define MMCRL_H

/* C interface to the multimodal causal representation learning library.
 * All entry points go through an opaque session that owns the last error
 * message and the last textual output; both stay valid until the next call
 * on the same session. Inputs and outputs are UTF-8 strings; structured
 * arguments are JSON documents. */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define MMCRL_API __declspec(dllexport)
#else
#define MMCRL_API __attribute__((visibility("default")))
#endif

typedef struct mmcrl_session mmcrl_session;

enum {
  MMCRL_OK = 0,
  MMCRL_EINVAL = 1,   /* bad argument (null pointer, malformed value) */
  MMCRL_EIO = 2,      /* filesystem read/write failure */
  MMCRL_ECONFIG = 3,  /* JSON config parse or validation failure */
  MMCRL_ENUMERIC = 4, /* non-finite values or numerical breakdown */
  MMCRL_EINTERNAL = 5 /* anything else */
};

MMCRL_API const char* mmcrl_version(void);

MMCRL_API mmcrl_session* mmcrl_session_create(void);
MMCRL_API void mmcrl_session_destroy(mmcrl_session* session);

/* Message for the most recent failing call; empty string when the last call
 * succeeded. Never null for a valid session. */
MMCRL_API const char* mmcrl_last_error(const mmcrl_session* session);

/* Textual result of the most recent successful call that produces output
 * (audit and report text, train summary). Never null for a valid session. */
MMCRL_API const char* mmcrl_last_output(const mmcrl_session* session);

/* Generates a synthetic ground-truth dataset into out_dir. spec_json may
 * name a built-in benchmark ({"benchmark": "mod2" | "mod3" | "mod4"}) and
 * any field overrides: num_latents, modality_sets, obs_dims, shared_budget,
 * samples, seed, mixer_depth, mixer_slope, edge_density, noise
 * ("gaussian" | "uniform" | "laplace"), noise_scale, linear_mechanisms,
 * enforce_non_overlap. Output: audit summary of the generated bundle. */
MMCRL_API int mmcrl_generate(mmcrl_session* session, const char* spec_json,
                             const char* out_dir);

/* Trains on a bundle directory written by mmcrl_generate. config_json keys
 * (all optional): alpha_alg, alpha_rec, alpha_spr, alpha_acy, alpha_nll,
 * epochs, batch, lr, lr_permutation, epsilon_initial, epsilon_decay,
 * epsilon_floor, tau, acyclicity_cst, seed, shared_budget, flow_hidden.
 * Run artifacts (config snapshot, loss curve, checkpoint, report, recovered
 * permutation and adjacency) are written into out_dir. Output: the
 * evaluation report text. */
MMCRL_API int mmcrl_train(mmcrl_session* session, const char* bundle_dir,
                          const char* config_json, const char* out_dir);

/* Re-runs the assumption audits (A1-A3, B1-B3) on a stored bundle.
 * Output: the audit report text. Returns MMCRL_OK even when an audited
 * assumption fails; *failures (optional) receives 1 in that case. */
MMCRL_API int mmcrl_audit(mmcrl_session* session, const char* bundle_dir,
                          int* failures);

/* Loads the report of a finished run directory. Output: report text. */
MMCRL_API int mmcrl_report(mmcrl_session* session, const char* run_dir);

/* Aggregates the reports of several finished runs of one benchmark.
 * run_dirs_json is a JSON array of run directory paths. Output: aligned
 * mean +/- sample-std table plus a CSV block for MCC, R2 and EnSHD.
 * Mixing benchmark ids is refused with MMCRL_EINVAL. */
MMCRL_API int mmcrl_aggregate(mmcrl_session* session,
                              const char* run_dirs_json);

#ifdef __cplusplus
}
#endif

#endif /* MMCRL_H */
