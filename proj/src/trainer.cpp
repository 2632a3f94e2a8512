#include "mmcrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mmcrl/checkpoint.hpp"

namespace mmcrl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Tensor batch_rows(const Tensor& t, std::size_t first, std::size_t count) {
  Tensor out(count, t.cols());
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) out(i, j) = t(first + i, j);
  return out;
}

double resolve_epsilon_initial(const Tensor& z_cat) {
  // 90th percentile of the off-diagonal distances at epoch 0.
  const CostMatrix cost = cost_matrix(z_cat, 0.0);
  std::vector<double> off;
  const std::size_t L = cost.distances.rows();
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j)
      if (i != j) off.push_back(cost.distances(i, j));
  std::sort(off.begin(), off.end());
  if (off.empty()) return 1.0;
  return off[static_cast<std::size_t>(0.9 * (off.size() - 1))];
}

void collect_state(TrainState& state, std::vector<Tensor*>& params) {
  state.model.collect(params);
  state.flow.collect(params);
}

}  // namespace

double total_loss(const LossComponents& c, const TrainConfig& config) {
  const double values[] = {c.alg, c.rec, c.spr, c.acy, c.nll};
  for (double v : values)
    if (!std::isfinite(v))
      throw std::runtime_error("total_loss: non-finite loss component");
  double total = config.alpha_alg * c.alg + config.alpha_rec * c.rec +
                 config.alpha_spr * c.spr + config.alpha_acy * c.acy;
  if (config.alpha_nll != 0.0) total += config.alpha_nll * c.nll;
  return total;
}

TrainState init_state(const TrainConfig& config,
                      const GroundTruthBundle& bundle) {
  std::mt19937_64 rng(config.seed);
  TrainState state;
  state.model = make_autoencoder(bundle.pattern, bundle.spec.obs_dims,
                                 config.autoencoder, rng);
  const std::size_t L = bundle.pattern.total_slots();
  state.flow = make_flow(L, config.flow_hidden, config.flow_slope, rng);
  state.shared_budget = config.shared_budget_override >= 0.0
                            ? config.shared_budget_override
                            : bundle.pattern.shared_budget();
  state.acyclicity_cst = config.acyclicity_cst > 0.0
                             ? config.acyclicity_cst
                             : 1.0 / static_cast<double>(L);
  state.optimizer.config().lr = config.lr;
  state.epsilon_initial = config.epsilon.initial;

  Tensor uniform = Tensor::full(L, L, 1.0 / static_cast<double>(L));
  state.permutation =
      dykstra_project(uniform, bundle.pattern, state.shared_budget,
                      config.projection)
          .p;
  return state;
}

EpochLog train_epoch(TrainState& state, const GroundTruthBundle& bundle,
                     int epoch, const TrainConfig& config) {
  if (!bundle.latents)
    throw std::invalid_argument("train_epoch: bundle has no samples");
  const SharingPattern& pattern = bundle.pattern;
  const std::size_t n = bundle.latents->rows();
  const std::size_t batch = std::max<std::size_t>(2, config.batch);

  EpochLog log;
  log.epoch = epoch;
  int batches = 0;

  for (std::size_t first = 0; first + 2 <= n; first += batch) {
    const std::size_t count = std::min(batch, n - first);
    if (count < 2) break;

    Tape tape;
    BoundAutoencoder bound_model = bind_autoencoder(tape, state.model);
    BoundFlow bound_flow = bind_flow(tape, state.flow);
    std::vector<Value> x;
    for (const Tensor& obs : bundle.observations)
      x.push_back(tape.constant(batch_rows(obs, first, count)));

    Value z_cat = encode_all(tape, bound_model, x);
    std::vector<Value> x_hat = decode_all(tape, bound_model, z_cat, pattern);
    Value rec = reconstruction_loss(tape, x, x_hat);
    Value alg = alignment_loss(tape, z_cat, state.permutation);
    // The flow fits the density of the current latents; its NLL must not
    // reshape the encoder output, so the flow sees a detached copy.
    Value z_detached = tape.constant(tape.value(z_cat));
    FlowOutputs flow_out = flow_forward(tape, bound_flow, z_detached);
    Value nll = nll_loss(tape, flow_out);
    Value spr = sparsity_loss(tape, bound_flow);
    Value acy = acyclicity_loss(tape, bound_flow, state.acyclicity_cst);

    LossComponents components{tape.value(alg).item(), tape.value(rec).item(),
                              tape.value(spr).item(), tape.value(acy).item(),
                              tape.value(nll).item()};
    const double batch_total = total_loss(components, config);

    Value objective = tape.scale(rec, config.alpha_rec);
    objective = tape.add(objective, tape.scale(alg, config.alpha_alg));
    objective = tape.add(objective, tape.scale(spr, config.alpha_spr));
    objective = tape.add(objective, tape.scale(acy, config.alpha_acy));
    if (config.alpha_nll != 0.0)
      objective = tape.add(objective, tape.scale(nll, config.alpha_nll));
    tape.backward(objective);

    std::vector<Tensor*> params;
    collect_state(state, params);
    std::vector<Tensor> grads;
    for (const auto& ids : bound_model.encoders)
      collect_mlp_grads(tape, ids, grads);
    for (const auto& ids : bound_model.decoders)
      collect_mlp_grads(tape, ids, grads);
    for (const auto& ids : bound_flow.conditioners)
      collect_mlp_grads(tape, ids, grads);
    grads.push_back(tape.grad(bound_flow.adjacency));
    std::vector<const Tensor*> grad_ptrs;
    for (const Tensor& g : grads) grad_ptrs.push_back(&g);
    state.optimizer.step(params, grad_ptrs);
    state.flow.zero_diagonal();

    // Alternating update: one projected descent step on P with the freshly
    // encoded batch, networks held fixed.
    const Tensor& z_values = tape.value(z_cat);
    if (state.epsilon_initial < 0.0)
      state.epsilon_initial = resolve_epsilon_initial(z_values);
    EpsilonSchedule schedule = config.epsilon;
    schedule.initial = state.epsilon_initial;
    const double eps = schedule.at(epoch);
    double step_violation = 0.0;
    if (config.lr_permutation != 0.0) {
      const CostMatrix cost = cost_matrix(z_values, eps);
      const ProjectionResult proj =
          permutation_step(state.permutation, cost, config.lr_permutation,
                           pattern, state.shared_budget, config.projection);
      state.permutation = proj.p;
      step_violation = proj.max_violation;
    } else {
      step_violation =
          feasibility_violation(state.permutation, pattern,
                                state.shared_budget);
    }

    log.components.alg += components.alg;
    log.components.rec += components.rec;
    log.components.spr += components.spr;
    log.components.acy += components.acy;
    log.components.nll += components.nll;
    log.total += batch_total;
    log.epsilon = eps;
    log.projection_violation =
        std::max(log.projection_violation, step_violation);
    ++batches;
  }

  if (batches > 0) {
    const double inv = 1.0 / batches;
    log.components.alg *= inv;
    log.components.rec *= inv;
    log.components.spr *= inv;
    log.components.acy *= inv;
    log.components.nll *= inv;
    log.total *= inv;
  }
  state.history.push_back(log);
  return log;
}

FitResult evaluate(const TrainConfig& config, const GroundTruthBundle& bundle,
                   TrainState& state) {
  if (!bundle.latents)
    throw std::invalid_argument("evaluate: bundle has no samples");
  const SharingPattern& pattern = bundle.pattern;
  const Tensor z_est =
      encode_all(state.model, bundle.observations, pattern);
  const Tensor z_true = bundle.latent_slots();

  FitResult result;
  result.rounded_permutation = round_to_permutation(state.permutation);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < result.rounded_permutation.size(); ++i)
    if (result.rounded_permutation.data()[i] == bundle.p_star.data()[i])
      ++agree;
  result.permutation_accuracy =
      static_cast<double>(agree) /
      static_cast<double>(result.rounded_permutation.size());

  const MccResult mcc_result = mcc(z_true, z_est);
  result.report.mcc = mcc_result.mcc;
  result.report.assignment = mcc_result.assignment;
  result.report.per_slot_correlations = mcc_result.matched_correlations;
  result.report.zero_variance_flag = mcc_result.zero_variance_flag;
  result.report.r2 = r2_score(z_true, z_est);
  result.report.enshd =
      enshd(bundle.scm.adjacency, state.flow.adjacency, mcc_result.assignment,
            bundle.p_star, pattern, config.tau);
  const int J = pattern.num_latents();
  result.report.max_possible_edges = J * J - J;
  result.report.tau = config.tau;
  result.report.benchmark = bundle.spec.benchmark;
  result.report.seed = config.seed;
  return result;
}

namespace {

json config_to_json(const TrainConfig& c) {
  return json{{"alpha_alg", c.alpha_alg},
              {"alpha_rec", c.alpha_rec},
              {"alpha_spr", c.alpha_spr},
              {"alpha_acy", c.alpha_acy},
              {"alpha_nll", c.alpha_nll},
              {"epochs", c.epochs},
              {"batch", c.batch},
              {"lr", c.lr},
              {"lr_permutation", c.lr_permutation},
              {"epsilon_initial", c.epsilon.initial},
              {"epsilon_decay", c.epsilon.decay},
              {"epsilon_floor", c.epsilon.floor},
              {"projection_cycles", c.projection.max_cycles},
              {"projection_tol", c.projection.tol},
              {"tau", c.tau},
              {"acyclicity_cst", c.acyclicity_cst},
              {"seed", c.seed},
              {"autoencoder_depth", c.autoencoder.depth},
              {"autoencoder_hidden_multiplier", c.autoencoder.hidden_multiplier},
              {"autoencoder_slope", c.autoencoder.slope},
              {"flow_hidden", c.flow_hidden},
              {"flow_slope", c.flow_slope},
              {"shared_budget_override", c.shared_budget_override}};
}

void export_run_artifacts(const TrainConfig& config, const TrainState& state,
                          const FitResult& result, const std::string& run_dir) {
  fs::create_directories(run_dir);
  {
    std::ofstream os(fs::path(run_dir) / "report.txt");
    os << result.report.to_text();
    os << "permutation_accuracy = " << result.permutation_accuracy << "\n";
  }
  {
    std::ofstream os(fs::path(run_dir) / "report.csv");
    os << result.report.csv_header() << "\n" << result.report.csv_row() << "\n";
  }
  {
    // Sparse triplet export of the recovered rounded permutation.
    std::ofstream os(fs::path(run_dir) / "p_matrix.txt");
    const Tensor& p = result.rounded_permutation;
    for (std::size_t i = 0; i < p.rows(); ++i)
      for (std::size_t j = 0; j < p.cols(); ++j)
        if (p(i, j) != 0.0) os << i << " " << j << " " << p(i, j) << "\n";
  }
  {
    std::ofstream os(fs::path(run_dir) / "adjacency.txt");
    os.precision(12);
    const Tensor& a = state.flow.adjacency;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < a.cols(); ++j)
        os << (j ? " " : "") << a(i, j);
      os << "\n";
    }
    const Tensor edges = binarize_adjacency(a, config.tau);
    os << "# edges (|w| > " << config.tau << ")\n";
    for (std::size_t i = 0; i < edges.rows(); ++i)
      for (std::size_t j = 0; j < edges.cols(); ++j)
        if (edges(i, j) > 0.5) os << "# " << i << " -> " << j << "\n";
  }
}

}  // namespace

FitResult fit(const TrainConfig& config, const GroundTruthBundle& bundle,
              TrainState& state, const std::string& run_dir) {
  std::ofstream losses;
  if (!run_dir.empty()) {
    fs::create_directories(run_dir);
    std::ofstream cfg(fs::path(run_dir) / "config.json");
    cfg << config_to_json(config).dump(2) << "\n";
    losses.open(fs::path(run_dir) / "losses.csv");
    losses << "epoch,total,rec,alg,spr,acy,nll,epsilon,projection_violation\n";
  }

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const EpochLog log = train_epoch(state, bundle, epoch, config);
    if (losses.is_open()) {
      losses << log.epoch << "," << log.total << "," << log.components.rec
             << "," << log.components.alg << "," << log.components.spr << ","
             << log.components.acy << "," << log.components.nll << ","
             << log.epsilon << "," << log.projection_violation << "\n";
      losses.flush();
      // Last-good checkpoint: refreshed after every completed epoch.
      save_state(state, (fs::path(run_dir) / "checkpoint.bin").string());
    }
  }

  FitResult result = evaluate(config, bundle, state);
  if (!run_dir.empty()) {
    save_state(state, (fs::path(run_dir) / "checkpoint.bin").string());
    export_run_artifacts(config, state, result, run_dir);
  }
  return result;
}

FitResult fit(const TrainConfig& config, const GroundTruthBundle& bundle,
              const std::string& run_dir) {
  TrainState state = init_state(config, bundle);
  return fit(config, bundle, state, run_dir);
}

void save_state(const TrainState& state, const std::string& path) {
  std::map<std::string, Tensor> tensors;
  std::vector<Tensor*> params;
  // collect() is non-const by signature only; the pointers are read here.
  collect_state(const_cast<TrainState&>(state), params);
  for (std::size_t i = 0; i < params.size(); ++i)
    tensors.emplace("param" + std::to_string(i), *params[i]);
  tensors.emplace("permutation", state.permutation);
  save_tensors(path, tensors);
}

void load_state(TrainState& state, const std::string& path) {
  const auto tensors = load_tensors(path);
  std::vector<Tensor*> params;
  collect_state(state, params);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& stored = tensors.at("param" + std::to_string(i));
    require_same_shape(*params[i], stored, "load_state");
    *params[i] = stored;
  }
  state.permutation = tensors.at("permutation");
}

}  // namespace mmcrl
