#include "mmcrl.h"

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <new>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmcrl/bundle.hpp"
#include "mmcrl/trainer.hpp"

using nlohmann::json;

struct mmcrl_session {
  std::string error;
  std::string output;
};

namespace {

constexpr const char* kVersion = "0.1.0";

mmcrl::NoiseLaw parse_noise(const std::string& name) {
  if (name == "gaussian") return mmcrl::NoiseLaw::Gaussian;
  if (name == "uniform") return mmcrl::NoiseLaw::Uniform;
  if (name == "laplace") return mmcrl::NoiseLaw::Laplace;
  throw std::invalid_argument("unknown noise law: " + name);
}

mmcrl::GenerateSpec parse_generate_spec(const std::string& text) {
  const json j = json::parse(text);
  mmcrl::GenerateSpec spec;
  if (j.contains("benchmark")) {
    const std::string id = j.at("benchmark").get<std::string>();
    if (id == "mod2" || id == "mod3" || id == "mod4")
      spec = mmcrl::benchmark_spec(id);
    else
      spec.benchmark = id;  // custom label
  }
  if (j.contains("num_latents")) spec.num_latents = j.at("num_latents");
  if (j.contains("modality_sets"))
    spec.modality_sets =
        j.at("modality_sets").get<std::vector<std::vector<int>>>();
  if (j.contains("obs_dims"))
    spec.obs_dims = j.at("obs_dims").get<std::vector<std::size_t>>();
  if (j.contains("shared_budget")) spec.shared_budget = j.at("shared_budget");
  if (j.contains("samples")) spec.samples = j.at("samples");
  if (j.contains("seed")) spec.seed = j.at("seed");
  if (j.contains("mixer_depth")) spec.mixer_depth = j.at("mixer_depth");
  if (j.contains("mixer_slope")) spec.mixer_slope = j.at("mixer_slope");
  if (j.contains("edge_density")) spec.scm.edge_density = j.at("edge_density");
  if (j.contains("noise"))
    spec.scm.noise = parse_noise(j.at("noise").get<std::string>());
  if (j.contains("noise_scale")) spec.scm.noise_scale = j.at("noise_scale");
  if (j.contains("linear_mechanisms"))
    spec.scm.linear_mechanisms = j.at("linear_mechanisms");
  if (j.contains("enforce_non_overlap"))
    spec.scm.enforce_non_overlap = j.at("enforce_non_overlap");
  if (!j.contains("benchmark")) spec.benchmark = "custom";
  return spec;
}

mmcrl::TrainConfig parse_train_config(const std::string& text) {
  const json j = text.empty() ? json::object() : json::parse(text);
  mmcrl::TrainConfig cfg;
  if (j.contains("alpha_alg")) cfg.alpha_alg = j.at("alpha_alg");
  if (j.contains("alpha_rec")) cfg.alpha_rec = j.at("alpha_rec");
  if (j.contains("alpha_spr")) cfg.alpha_spr = j.at("alpha_spr");
  if (j.contains("alpha_acy")) cfg.alpha_acy = j.at("alpha_acy");
  if (j.contains("alpha_nll")) cfg.alpha_nll = j.at("alpha_nll");
  if (j.contains("epochs")) cfg.epochs = j.at("epochs");
  if (j.contains("batch")) cfg.batch = j.at("batch");
  if (j.contains("lr")) cfg.lr = j.at("lr");
  if (j.contains("lr_permutation")) cfg.lr_permutation = j.at("lr_permutation");
  if (j.contains("epsilon_initial"))
    cfg.epsilon.initial = j.at("epsilon_initial");
  if (j.contains("epsilon_decay")) cfg.epsilon.decay = j.at("epsilon_decay");
  if (j.contains("epsilon_floor")) cfg.epsilon.floor = j.at("epsilon_floor");
  if (j.contains("tau")) cfg.tau = j.at("tau");
  if (j.contains("acyclicity_cst")) cfg.acyclicity_cst = j.at("acyclicity_cst");
  if (j.contains("seed")) cfg.seed = j.at("seed");
  if (j.contains("shared_budget"))
    cfg.shared_budget_override = j.at("shared_budget");
  if (j.contains("flow_hidden")) cfg.flow_hidden = j.at("flow_hidden");
  if (j.contains("projection_tol")) cfg.projection.tol = j.at("projection_tol");
  if (j.contains("projection_cycles"))
    cfg.projection.max_cycles = j.at("projection_cycles");
  return cfg;
}

/* Maps the exceptions thrown by the C++ core onto stable error codes. */
template <typename Fn>
int guarded(mmcrl_session* session, Fn&& fn) {
  if (!session) return MMCRL_EINVAL;
  session->error.clear();
  session->output.clear();
  try {
    return fn();
  } catch (const json::exception& e) {
    session->error = std::string("config: ") + e.what();
    return MMCRL_ECONFIG;
  } catch (const std::invalid_argument& e) {
    session->error = e.what();
    return MMCRL_EINVAL;
  } catch (const std::ios_base::failure& e) {
    session->error = e.what();
    return MMCRL_EIO;
  } catch (const std::filesystem::filesystem_error& e) {
    session->error = e.what();
    return MMCRL_EIO;
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    session->error = what;
    if (what.find("non-finite") != std::string::npos ||
        what.find("NaN") != std::string::npos)
      return MMCRL_ENUMERIC;
    if (what.find("read") != std::string::npos ||
        what.find("write") != std::string::npos ||
        what.find("open") != std::string::npos)
      return MMCRL_EIO;
    return MMCRL_EINTERNAL;
  } catch (const std::exception& e) {
    session->error = e.what();
    return MMCRL_EINTERNAL;
  } catch (...) {
    session->error = "unknown error";
    return MMCRL_EINTERNAL;
  }
}

}  // namespace

extern "C" {

const char* mmcrl_version(void) { return kVersion; }

mmcrl_session* mmcrl_session_create(void) {
  return new (std::nothrow) mmcrl_session();
}

void mmcrl_session_destroy(mmcrl_session* session) { delete session; }

const char* mmcrl_last_error(const mmcrl_session* session) {
  return session ? session->error.c_str() : "null session";
}

const char* mmcrl_last_output(const mmcrl_session* session) {
  return session ? session->output.c_str() : "";
}

int mmcrl_generate(mmcrl_session* session, const char* spec_json,
                   const char* out_dir) {
  return guarded(session, [&]() -> int {
    if (!spec_json || !out_dir) {
      session->error = "null argument";
      return MMCRL_EINVAL;
    }
    const mmcrl::GenerateSpec spec = parse_generate_spec(spec_json);
    const mmcrl::GroundTruthBundle bundle = mmcrl::generate_bundle(spec);
    mmcrl::save_bundle(bundle, out_dir);
    session->output = mmcrl::audit_bundle(bundle).to_text();
    return MMCRL_OK;
  });
}

int mmcrl_train(mmcrl_session* session, const char* bundle_dir,
                const char* config_json, const char* out_dir) {
  return guarded(session, [&]() -> int {
    if (!bundle_dir || !out_dir) {
      session->error = "null argument";
      return MMCRL_EINVAL;
    }
    const mmcrl::TrainConfig config =
        parse_train_config(config_json ? config_json : "");
    const mmcrl::GroundTruthBundle bundle = mmcrl::load_bundle(bundle_dir);
    const mmcrl::FitResult result = mmcrl::fit(config, bundle, out_dir);
    std::ostringstream os;
    os << result.report.to_text();
    os << "permutation_accuracy = " << result.permutation_accuracy << "\n";
    session->output = os.str();
    return MMCRL_OK;
  });
}

int mmcrl_audit(mmcrl_session* session, const char* bundle_dir,
                int* failures) {
  return guarded(session, [&]() -> int {
    if (!bundle_dir) {
      session->error = "null argument";
      return MMCRL_EINVAL;
    }
    const mmcrl::GroundTruthBundle bundle = mmcrl::load_bundle(bundle_dir);
    const mmcrl::AuditReport report = mmcrl::audit_bundle(bundle);
    session->output = report.to_text();
    if (failures) *failures = report.any_failure ? 1 : 0;
    return MMCRL_OK;
  });
}

int mmcrl_report(mmcrl_session* session, const char* run_dir) {
  return guarded(session, [&]() -> int {
    if (!run_dir) {
      session->error = "null argument";
      return MMCRL_EINVAL;
    }
    const std::filesystem::path path =
        std::filesystem::path(run_dir) / "report.txt";
    std::ifstream is(path);
    if (!is) {
      session->error = "cannot open " + path.string();
      return MMCRL_EIO;
    }
    std::string text((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
    session->output = std::move(text);
    return MMCRL_OK;
  });
}

int mmcrl_aggregate(mmcrl_session* session, const char* run_dirs_json) {
  return guarded(session, [&]() -> int {
    if (!run_dirs_json) {
      session->error = "null argument";
      return MMCRL_EINVAL;
    }
    const auto dirs = json::parse(run_dirs_json).get<std::vector<std::string>>();
    if (dirs.empty()) {
      session->error = "no run directories";
      return MMCRL_EINVAL;
    }
    std::vector<mmcrl::EvalReport> reports;
    for (const std::string& dir : dirs) {
      const std::filesystem::path path =
          std::filesystem::path(dir) / "report.txt";
      std::ifstream is(path);
      if (!is) {
        session->error = "cannot open " + path.string();
        return MMCRL_EIO;
      }
      std::string text((std::istreambuf_iterator<char>(is)),
                       std::istreambuf_iterator<char>());
      reports.push_back(mmcrl::parse_report_text(text));
      if (reports.back().benchmark != reports.front().benchmark) {
        session->error = "refusing to aggregate mixed benchmarks: " +
                         reports.front().benchmark + " vs " +
                         reports.back().benchmark;
        return MMCRL_EINVAL;
      }
    }
    auto stats = [&](auto&& get) {
      double mean = 0.0;
      for (const auto& r : reports) mean += get(r);
      mean /= static_cast<double>(reports.size());
      double var = 0.0;
      if (reports.size() > 1) {
        for (const auto& r : reports) {
          const double d = get(r) - mean;
          var += d * d;
        }
        var /= static_cast<double>(reports.size() - 1);
      }
      return std::pair<double, double>(mean, std::sqrt(var));
    };
    const auto mcc = stats([](const mmcrl::EvalReport& r) { return r.mcc; });
    const auto r2 = stats([](const mmcrl::EvalReport& r) { return r.r2; });
    const auto shd = stats(
        [](const mmcrl::EvalReport& r) { return double(r.enshd); });

    std::ostringstream os;
    os.precision(4);
    os << "benchmark: " << reports.front().benchmark << " (" << reports.size()
       << " runs)\n";
    os << "metric   mean +/- std\n";
    os << "MCC      " << mcc.first << " +/- " << mcc.second << "\n";
    os << "R2       " << r2.first << " +/- " << r2.second << "\n";
    os << "EnSHD    " << shd.first << " +/- " << shd.second << "\n";
    os << "csv\n";
    os << "benchmark,runs,mcc_mean,mcc_std,r2_mean,r2_std,enshd_mean,"
          "enshd_std\n";
    os << reports.front().benchmark << "," << reports.size() << ","
       << mcc.first << "," << mcc.second << "," << r2.first << ","
       << r2.second << "," << shd.first << "," << shd.second << "\n";
    session->output = os.str();
    return MMCRL_OK;
  });
}

}  // extern "C"
