#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmcrl/mixing.hpp"
#include "mmcrl/pattern.hpp"
#include "mmcrl/scm.hpp"

namespace mmcrl {

/// Everything needed to generate one synthetic multimodal dataset.
struct GenerateSpec {
  std::string benchmark = "custom";
  int num_latents = 0;
  std::vector<std::vector<int>> modality_sets;
  std::vector<std::size_t> obs_dims;
  double shared_budget = 2.0;  // k
  std::size_t samples = 20000;
  std::uint64_t seed = 0;
  int mixer_depth = 2;
  double mixer_slope = 0.2;
  ScmConfig scm;
};

/// Ground truth: pattern, SCM, mixers, P*, latent samples and observations.
struct GroundTruthBundle {
  GenerateSpec spec;
  SharingPattern pattern;
  LatentScm scm;
  std::vector<Mixer> mixers;
  Tensor p_star;
  std::optional<Tensor> latents;            // n x J; absent when samples == 0
  std::vector<Tensor> observations;         // n x d_m

  /// True latents duplicated into the L-slot z_cat layout.
  Tensor latent_slots() const;
};

GroundTruthBundle generate_bundle(const GenerateSpec& spec);

/// Directory layout: meta.json (structured metadata, regeneration seeds) and
/// tensors.bin (latents, observations, P*, SCM and mixer weights).
void save_bundle(const GroundTruthBundle& bundle, const std::string& dir);
GroundTruthBundle load_bundle(const std::string& dir);

/// Built-in benchmark definitions (mod2 | mod3 | mod4).
GenerateSpec benchmark_spec(const std::string& id);

struct AuditEntry {
  std::string name;
  std::string status;  // pass | fail | heuristic-pass | heuristic-fail | n/a
  std::string detail;
};

struct AuditReport {
  std::vector<AuditEntry> entries;
  bool any_failure = false;

  std::string to_text() const;
  const AuditEntry* find(const std::string& name) const;
};

/// Runs the assumption audits (A1 rank probe, A2 properness, A3 structure,
/// B1 non-overlap, B2 mixing-density heuristic, B3 cross-block counts).
/// Reports; never throws on a failing assumption.
AuditReport audit_bundle(const GroundTruthBundle& bundle,
                         int probe_samples = 100, int density_trials = 100,
                         std::uint64_t seed = 7);

}  // namespace mmcrl
