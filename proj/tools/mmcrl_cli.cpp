// Command-line front end. Talks to the library exclusively through the C API.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmcrl.h"

using nlohmann::json;

namespace {

std::string out_root() {
  const char* env = std::getenv("MMCRL_OUT_ROOT");
  return env && *env ? env : "./mmcrl_out";
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream is(path);
  if (!is) throw CLI::ValidationError("--config", "cannot open " + path);
  json j;
  is >> j;
  return j;
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash != std::string::npos && dash > 0) {
      const std::uint64_t lo = std::stoull(item.substr(0, dash));
      const std::uint64_t hi = std::stoull(item.substr(dash + 1));
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(std::stoull(item));
    }
  }
  if (seeds.empty()) seeds.push_back(0);
  return seeds;
}

struct SessionHolder {
  mmcrl_session* s = mmcrl_session_create();
  ~SessionHolder() { mmcrl_session_destroy(s); }
};

int check(mmcrl_session* s, int rc, const char* what) {
  if (rc != MMCRL_OK) {
    std::cerr << what << " failed (code " << rc << "): " << mmcrl_last_error(s)
              << "\n";
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal causal representation learning toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string seeds_spec = "0";
  std::string benchmark;
  double tau = -1.0;
  double k = -1.0;
  int epochs = -1;

  // generate ---------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  gen->add_option("--benchmark", benchmark, "Built-in benchmark: mod2|mod3|mod4");
  gen->add_option("--config", config_path, "JSON spec overrides");
  gen->add_option("--out", out_dir, "Output directory (per seed subdirs)");
  gen->add_option("--seeds", seeds_spec, "Seed list, e.g. 0,1,2 or 0-4");
  gen->add_option("--k", k, "Shared-budget override");
  long long samples = -1;
  gen->add_option("--samples", samples,
                  "Sample-count override (0 = metadata-only bundle)");

  // train ------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train on a generated dataset");
  std::string bundle_dir;
  train->add_option("bundle", bundle_dir, "Bundle directory")->required();
  train->add_option("--config", config_path, "JSON training config");
  train->add_option("--out", out_dir, "Run output directory (per seed subdirs)");
  train->add_option("--seeds", seeds_spec, "Training seeds, e.g. 0,1,2");
  train->add_option("--epochs", epochs, "Epoch-count override");
  train->add_option("--tau", tau, "Adjacency binarization threshold");
  train->add_option("--k", k, "Shared-budget override");
  double a_alg = -1.0, a_rec = -1.0, a_spr = -1.0, a_acy = -1.0, a_nll = -1.0;
  train->add_option("--alpha-alg", a_alg, "Alignment-loss weight");
  train->add_option("--alpha-rec", a_rec, "Reconstruction-loss weight");
  train->add_option("--alpha-spr", a_spr, "Sparsity-loss weight");
  train->add_option("--alpha-acy", a_acy, "Acyclicity-loss weight");
  train->add_option("--alpha-nll", a_nll, "Likelihood-loss weight (0 disables)");

  // report -----------------------------------------------------------------
  auto* report = app.add_subcommand("report", "Print a finished run's report");
  std::vector<std::string> run_dirs;
  report->add_option("runs", run_dirs, "Run directories")->required();

  // audit ------------------------------------------------------------------
  auto* audit = app.add_subcommand("audit", "Re-run assumption audits");
  std::string audit_dir;
  audit->add_option("bundle", audit_dir, "Bundle directory")->required();

  CLI11_PARSE(app, argc, argv);

  SessionHolder session;
  if (!session.s) {
    std::cerr << "out of memory\n";
    return 1;
  }

  if (gen->parsed()) {
    json spec = load_config_file(config_path);
    if (!benchmark.empty()) spec["benchmark"] = benchmark;
    if (k >= 0.0) spec["shared_budget"] = k;
    if (samples >= 0) spec["samples"] = samples;
    const std::string base =
        out_dir.empty()
            ? out_root() + "/bundles/" +
                  (benchmark.empty() ? "custom" : benchmark)
            : out_dir;
    for (const std::uint64_t seed : parse_seeds(seeds_spec)) {
      spec["seed"] = seed;
      const std::string dir = base + "/seed" + std::to_string(seed);
      const int rc = check(
          session.s, mmcrl_generate(session.s, spec.dump().c_str(), dir.c_str()),
          "generate");
      if (rc != MMCRL_OK) return rc;
      std::cout << "wrote " << dir << "\n" << mmcrl_last_output(session.s);
    }
    return 0;
  }

  if (train->parsed()) {
    json cfg = load_config_file(config_path);
    if (epochs >= 0) cfg["epochs"] = epochs;
    if (tau >= 0.0) cfg["tau"] = tau;
    if (k >= 0.0) cfg["shared_budget"] = k;
    if (a_alg >= 0.0) cfg["alpha_alg"] = a_alg;
    if (a_rec >= 0.0) cfg["alpha_rec"] = a_rec;
    if (a_spr >= 0.0) cfg["alpha_spr"] = a_spr;
    if (a_acy >= 0.0) cfg["alpha_acy"] = a_acy;
    if (a_nll >= 0.0) cfg["alpha_nll"] = a_nll;
    const std::string base =
        out_dir.empty() ? out_root() + "/runs" : out_dir;
    for (const std::uint64_t seed : parse_seeds(seeds_spec)) {
      cfg["seed"] = seed;
      const std::string dir = base + "/seed" + std::to_string(seed);
      const int rc =
          check(session.s,
                mmcrl_train(session.s, bundle_dir.c_str(), cfg.dump().c_str(),
                            dir.c_str()),
                "train");
      if (rc != MMCRL_OK) return rc;
      std::cout << "run " << dir << "\n" << mmcrl_last_output(session.s);
    }
    return 0;
  }

  if (report->parsed()) {
    for (const std::string& dir : run_dirs) {
      const int rc =
          check(session.s, mmcrl_report(session.s, dir.c_str()), "report");
      if (rc != MMCRL_OK) return rc;
      std::cout << mmcrl_last_output(session.s);
    }
    const std::string dirs_json = json(run_dirs).dump();
    const int rc = check(
        session.s, mmcrl_aggregate(session.s, dirs_json.c_str()), "aggregate");
    if (rc != MMCRL_OK) return rc;
    std::cout << mmcrl_last_output(session.s);
    return 0;
  }

  if (audit->parsed()) {
    int failures = 0;
    const int rc = check(
        session.s, mmcrl_audit(session.s, audit_dir.c_str(), &failures),
        "audit");
    if (rc != MMCRL_OK) return rc;
    std::cout << mmcrl_last_output(session.s);
    return failures ? 2 : 0;
  }

  return 0;
}
