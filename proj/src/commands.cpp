#include "hpfl/commands.hpp"

#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>

#include <json.hpp>

#include "hpfl/checkpoint.hpp"
#include "hpfl/config.hpp"
#include "hpfl/dataset.hpp"
#include "hpfl/fl.hpp"
#include "hpfl/metrics.hpp"
#include "hpfl/pretrain.hpp"

namespace hpfl {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig load_effective_config(const std::string& path, const CliOverrides& cli) {
  RunConfig cfg = load_config(path);
  if (cli.out_dir) cfg.out_dir = *cli.out_dir;
  if (cli.seed) cfg.seed = *cli.seed;
  if (cli.threads) cfg.threads = *cli.threads;
  cfg.validate();
  return cfg;
}

void apply_threads(const RunConfig& cfg) {
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
}

json log_to_json(const std::vector<PretrainIter>& log) {
  json out = json::array();
  for (const PretrainIter& it : log) {
    out.push_back({{"iteration", it.iteration},
                   {"surviving_weights", it.surviving_weights},
                   {"encoder_surviving", it.encoder_surviving},
                   {"encoder_remaining_rate", it.encoder_remaining_rate},
                   {"train_loss", it.train_loss}});
  }
  return out;
}

json history_to_json(const std::vector<RoundRecord>& history) {
  json out = json::array();
  for (const RoundRecord& r : history) {
    out.push_back({{"round", r.round},
                   {"accuracy", r.accuracy},
                   {"comm_bytes", r.comm_bytes},
                   {"compute_s", r.compute_s}});
  }
  return out;
}

std::vector<RoundRecord> history_from_json(const json& arr) {
  std::vector<RoundRecord> out;
  for (const json& h : arr) {
    RoundRecord r;
    r.round = h.at("round").get<int>();
    r.accuracy = h.at("accuracy").get<double>();
    r.comm_bytes = h.at("comm_bytes").get<double>();
    r.compute_s = h.at("compute_s").get<double>();
    out.push_back(r);
  }
  return out;
}

struct TrainData {
  UnlabeledSet unlabeled;
  LabeledSet labeled;
  LabeledSet test;
};

TrainData load_data(const RunConfig& cfg, bool need_unlabeled, bool need_labeled) {
  TrainData d;
  const LabeledSet train = load_labeled(cfg.train_images_path(), cfg.train_labels_path());
  auto [unlabeled, labeled] = split_train(train, cfg.seed);
  if (need_unlabeled) {
    d.unlabeled = cfg.dataset.unlabeled_limit > 0
                      ? take(unlabeled, cfg.dataset.unlabeled_limit)
                      : std::move(unlabeled);
  }
  if (need_labeled) {
    d.labeled = cfg.dataset.labeled_limit > 0 ? take(labeled, cfg.dataset.labeled_limit)
                                              : std::move(labeled);
    d.test = load_labeled(cfg.test_images_path(), cfg.test_labels_path());
    if (cfg.dataset.eval_limit > 0) d.test = take(d.test, cfg.dataset.eval_limit);
  }
  return d;
}

}  // namespace

void cmd_pretrain(const std::string& config_path, const CliOverrides& cli) {
  const RunConfig cfg = load_effective_config(config_path, cli);
  if (cli.print_config) {
    std::cout << config_to_json(cfg).dump(2) << '\n';
    return;
  }
  apply_threads(cfg);

  const TrainData data = load_data(cfg, /*need_unlabeled=*/true, /*need_labeled=*/false);
  const Architecture arch = cfg.encoder_arch();
  const PretrainResult result = pretrain(arch, data.unlabeled, cfg.pretrain_config());

  for (const PretrainIter& it : result.log) {
    std::printf("iteration %2d: surviving weights %8lld, encoder P_R %.4f, loss %.6f\n",
                it.iteration, static_cast<long long>(it.surviving_weights),
                it.encoder_remaining_rate, it.train_loss);
  }
  std::printf("remaining rate P_R = %.4f (%lld of %lld encoder parameters)\n",
              result.remaining_rate, static_cast<long long>(result.encoder_mask.surviving()),
              static_cast<long long>(result.encoder_mask.total()));

  fs::create_directories(cfg.out_dir);
  Checkpoint ckpt;
  ckpt.arch = arch;
  ckpt.mask = result.encoder_mask;
  ckpt.params = apply_mask(result.encoder_init, result.encoder_mask);
  ckpt.meta = {{"stage", "pretrain"},
               {"seed", cfg.seed},
               {"p_r", result.remaining_rate},
               {"log", log_to_json(result.log)}};
  const std::string path = (fs::path(cfg.out_dir) / "pretrain.ckpt").string();
  save_checkpoint(path, ckpt);
  std::printf("wrote %s\n", path.c_str());
}

void cmd_federate(const std::string& config_path, const std::optional<std::string>& checkpoint,
                  const CliOverrides& cli) {
  const RunConfig cfg = load_effective_config(config_path, cli);
  if (cli.print_config) {
    std::cout << config_to_json(cfg).dump(2) << '\n';
    return;
  }
  apply_threads(cfg);
  const std::string& method = cfg.federate.method;
  if (method == "hp_fl" && !checkpoint) {
    // usage error: report it before spending time on data loading
    throw ConfigError("method hp_fl needs --checkpoint from a pretrain run");
  }

  const bool needs_dae = method == "pretrain_only";
  const TrainData data = load_data(cfg, needs_dae, /*need_labeled=*/true);
  const Architecture arch = cfg.encoder_arch();

  // resume state, when the checkpoint is a mid-run snapshot
  std::vector<RoundRecord> prior;
  int first_round = 0;

  Mask mask = Mask::ones(arch);
  ParamSetF theta;
  if (checkpoint) {
    Checkpoint ckpt = load_checkpoint(*checkpoint);
    if (ckpt.arch.layer_dims != arch.layer_dims) {
      throw std::runtime_error("checkpoint architecture does not match the config");
    }
    const std::string stage = ckpt.meta.value("stage", "");
    if (stage == "round") {
      const std::string saved_method = ckpt.meta.value("method", "");
      if (saved_method != method) {
        throw std::runtime_error("checkpoint is a " + saved_method +
                                 " run, config says " + method);
      }
      mask = std::move(ckpt.mask);
      theta = std::move(ckpt.params);
      first_round = ckpt.meta.at("round").get<int>();
      prior = history_from_json(ckpt.meta.at("history"));
    } else if (stage == "pretrain") {
      if (method != "hp_fl") {
        throw std::runtime_error("pretrain checkpoint only makes sense with method hp_fl");
      }
      mask = std::move(ckpt.mask);
      theta = std::move(ckpt.params);
    } else {
      throw std::runtime_error("checkpoint stage \"" + stage + "\" is not usable here");
    }
  }

  if (theta.layers.empty()) {
    if (method == "pretrain_only") {
      // one full training pass of the autoencoder, no pruning
      const DaeSpec dae = build_dae(arch);
      ParamSetF full = init_params<float>(dae.full, derive_seed(cfg.seed, "init"));
      const Mask full_mask = Mask::ones(dae.full);
      const PretrainConfig pc = cfg.pretrain_config();
      Rng rng(derive_seed(cfg.seed, "dae_train", 1));
      const double loss = train_dae(dae, full, full_mask, data.unlabeled.images, pc.hyper,
                                    pc.noise_mean, pc.noise_std, rng);
      std::printf("autoencoder training loss %.6f\n", loss);
      theta = slice_layers(full, 0, arch.num_layers());
    } else if (method == "random_prune") {
      mask = random_mask(arch, cfg.federate.random_prune_rate,
                         derive_seed(cfg.seed, "random_mask"));
      theta = init_params<float>(arch, derive_seed(cfg.seed, "init"));
    } else {  // original
      theta = init_params<float>(arch, derive_seed(cfg.seed, "init"));
    }
  }

  const std::vector<ClientShard> shards =
      partition_noniid(data.labeled, cfg.federate.clients, cfg.seed);

  CostModel cost;
  cost.bytes_per_param = cfg.cost.bytes_per_param;
  cost.t_comp = cfg.cost.t_comp;
  cost.clients = cfg.federate.clients;
  cost.p_r = remaining_rate(mask);
  cost.param_count = count_params(arch);
  cost.validate();

  FlConfig fl = cfg.fl_config();
  fl.first_round = first_round;
  fl.comm_bytes_per_round = cost.per_round_comm_bytes();
  fl.compute_s_per_round = cost.per_round_compute_s();

  fs::create_directories(cfg.out_dir);
  const std::string resume_path = (fs::path(cfg.out_dir) / "resume.ckpt").string();

  std::vector<RoundRecord> live;  // rounds executed by this invocation
  ParamSetF last_globals = apply_mask(theta, mask);
  RunHooks hooks;
  hooks.on_round = [&](const RoundRecord& rec, const std::vector<ParamSetF>&,
                       const ParamSetF& globals) {
    std::printf("round %4d: accuracy %.4f\n", rec.round, rec.accuracy);
    std::fflush(stdout);
    live.push_back(rec);
    last_globals = globals;
    if (cfg.federate.checkpoint_every > 0 && rec.round % cfg.federate.checkpoint_every == 0 &&
        rec.round < fl.rounds) {
      Checkpoint snap;
      snap.arch = arch;
      snap.mask = mask;
      snap.params = globals;
      std::vector<RoundRecord> so_far = prior;
      so_far.insert(so_far.end(), live.begin(), live.end());
      snap.meta = {{"stage", "round"},   {"seed", cfg.seed},   {"p_r", cost.p_r},
                   {"method", method},   {"round", rec.round}, {"history", history_to_json(so_far)}};
      save_checkpoint(resume_path, snap);
    }
  };

  std::vector<RoundRecord> history =
      run_federated(fl, arch, mask, theta, shards, data.test, &hooks);

  std::vector<RoundRecord> full_history = prior;
  full_history.insert(full_history.end(), history.begin(), history.end());

  RunSummary summary;
  summary.method = method;
  summary.cost = cost;
  summary.history = full_history;

  const std::string csv = (fs::path(cfg.out_dir) / "report.csv").string();
  const std::string js = (fs::path(cfg.out_dir) / "report.json").string();
  emit_report({summary}, csv, js, cfg.thresholds);

  Checkpoint final_ckpt;
  final_ckpt.arch = arch;
  final_ckpt.mask = mask;
  final_ckpt.params = last_globals;
  final_ckpt.meta = {{"stage", "final"},
                     {"seed", cfg.seed},
                     {"p_r", cost.p_r},
                     {"method", method},
                     {"final_accuracy", summary.final_accuracy()}};
  save_checkpoint((fs::path(cfg.out_dir) / "model.ckpt").string(), final_ckpt);

  const std::vector<double> acc = summary.accuracies();
  std::printf("method %s: P_R %.4f, per round %s / %s\n", method.c_str(), cost.p_r,
              format_bytes(cost.per_round_comm_bytes()).c_str(),
              format_duration(cost.per_round_compute_s()).c_str());
  for (double t : cfg.thresholds) {
    const std::optional<int> r = nra(acc, t);
    if (r) {
      std::printf("  accuracy %.2f: %d rounds, %s, %s\n", t, *r,
                  format_bytes(cca(*r, cost)).c_str(), format_duration(cta(*r, cost)).c_str());
    } else {
      std::printf("  accuracy %.2f: not reached\n", t);
    }
  }
  std::printf("final accuracy %.4f; wrote %s and %s\n", summary.final_accuracy(), csv.c_str(),
              js.c_str());
}

void cmd_report(const std::vector<std::string>& history_paths,
                const std::optional<std::string>& config_path, const CliOverrides& cli) {
  RunConfig cfg;
  if (config_path) {
    cfg = load_effective_config(*config_path, cli);
  } else {
    if (cli.out_dir) cfg.out_dir = *cli.out_dir;
    if (cli.seed) cfg.seed = *cli.seed;
    if (cli.threads) cfg.threads = *cli.threads;
  }
  if (cli.print_config) {
    std::cout << config_to_json(cfg).dump(2) << '\n';
    return;
  }
  if (history_paths.empty()) throw std::invalid_argument("report: no history files given");

  std::vector<std::string> unique;
  std::set<std::string> seen;
  for (const std::string& p : history_paths) {
    const std::string key = fs::weakly_canonical(p).string();
    if (seen.insert(key).second) {
      unique.push_back(p);
    } else {
      std::fprintf(stderr, "warning: duplicate input %s ignored\n", p.c_str());
    }
  }

  std::vector<RunSummary> runs;
  for (const std::string& p : unique) {
    std::vector<RunSummary> loaded = load_report_json(p);
    runs.insert(runs.end(), loaded.begin(), loaded.end());
  }

  fs::create_directories(cfg.out_dir);
  const std::string csv = (fs::path(cfg.out_dir) / "comparison.csv").string();
  const std::string js = (fs::path(cfg.out_dir) / "comparison.json").string();
  emit_report(runs, csv, js, cfg.thresholds);

  for (const RunSummary& run : runs) {
    const std::vector<double> acc = run.accuracies();
    std::printf("%-14s P_R %.4f  per round %10s %9s", run.method.c_str(), run.cost.p_r,
                format_bytes(run.cost.per_round_comm_bytes()).c_str(),
                format_duration(run.cost.per_round_compute_s()).c_str());
    for (double t : cfg.thresholds) {
      const std::optional<int> r = nra(acc, t);
      if (r) {
        std::printf("  @%.2f: %4d rounds %10s %9s", t, *r,
                    format_bytes(cca(*r, run.cost)).c_str(),
                    format_duration(cta(*r, run.cost)).c_str());
      } else {
        std::printf("  @%.2f: not reached", t);
      }
    }
    std::printf("  final %.4f\n", run.final_accuracy());
  }
  std::printf("wrote %s and %s\n", csv.c_str(), js.c_str());
}

}  // namespace hpfl
