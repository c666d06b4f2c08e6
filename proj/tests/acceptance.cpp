// Acceptance gate: every release-blocking behavior of the pipeline, checked
// end to end and printed one line per criterion ("criterion N: PASS ...").
//
// Criteria 1-6, 9, 10 run on the bundled synthetic digits fixture in minutes.
// Criteria 7 and 8 replicate the full-scale published experiment and need the
// real MNIST IDX files plus several hours; they skip (exit 2) unless
// HPFL_MNIST_DIR points at the four standard files.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>

#include "hpfl/checkpoint.hpp"
#include "hpfl/dataset.hpp"
#include "hpfl/fl.hpp"
#include "hpfl/metrics.hpp"
#include "hpfl/nn.hpp"
#include "hpfl/pretrain.hpp"
#include "hpfl/rng.hpp"
#include "hpfl/synth.hpp"

using namespace hpfl;

namespace {

constexpr std::uint64_t kSeed = 42;

struct Ctx {
  std::string data_dir = "data";
};

struct Outcome {
  std::string status;  // PASS | FAIL | SKIP
  std::string detail;
};

Outcome pass(std::string detail) { return {"PASS", std::move(detail)}; }
Outcome fail(std::string detail) { return {"FAIL", std::move(detail)}; }
Outcome skip(std::string detail) { return {"SKIP", std::move(detail)}; }

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

bool within(double value, double target, double rel_tol) {
  return std::abs(value - target) <= rel_tol * std::abs(target);
}

// ---- fixture loading (cached across criteria) ------------------------------

const LabeledSet& fixture_train(const Ctx& ctx) {
  static std::map<std::string, LabeledSet> cache;
  auto it = cache.find(ctx.data_dir);
  if (it == cache.end()) {
    const auto dir = std::filesystem::path(ctx.data_dir);
    it = cache.emplace(ctx.data_dir, load_labeled((dir / "train-images-idx3-ubyte").string(),
                                                  (dir / "train-labels-idx1-ubyte").string()))
             .first;
  }
  return it->second;
}

const LabeledSet& fixture_test(const Ctx& ctx) {
  static std::map<std::string, LabeledSet> cache;
  auto it = cache.find(ctx.data_dir);
  if (it == cache.end()) {
    const auto dir = std::filesystem::path(ctx.data_dir);
    it = cache.emplace(ctx.data_dir, load_labeled((dir / "t10k-images-idx3-ubyte").string(),
                                                  (dir / "t10k-labels-idx1-ubyte").string()))
             .first;
  }
  return it->second;
}

struct TrainSplit {
  UnlabeledSet unlabeled;
  LabeledSet labeled;
};

const TrainSplit& fixture_split(const Ctx& ctx) {
  static std::map<std::string, TrainSplit> cache;
  auto it = cache.find(ctx.data_dir);
  if (it == cache.end()) {
    auto [u, l] = split_train(fixture_train(ctx), kSeed);
    it = cache.emplace(ctx.data_dir, TrainSplit{std::move(u), std::move(l)}).first;
  }
  return it->second;
}

Architecture lenet() { return classifier_arch({784, 300, 100, 10}); }

// ---- criterion 1: cost formulas --------------------------------------------

Outcome criterion1(const Ctx&) {
  CostModel dense;
  dense.param_count = 266'610;
  dense.clients = 100;
  dense.p_r = 1.0;
  CostModel pruned = dense;
  pruned.p_r = 0.107;

  const double comm_dense = dense.per_round_comm_bytes();
  const double comm_pruned = pruned.per_round_comm_bytes();
  const double cca95 = cca(824, pruned);
  const double cta95 = cta(824, pruned);

  // published table: 213 MB and 22.8 MB per round; 18.8 GB and 14.7 min to 95%
  if (!within(comm_dense, 213e6, 0.005)) {
    return fail(fmt("dense per-round comm %s, want 213 MB +-0.5%%",
                    format_bytes(comm_dense).c_str()));
  }
  if (!within(comm_pruned, 22.8e6, 0.005)) {
    return fail(fmt("pruned per-round comm %s, want 22.8 MB +-0.5%%",
                    format_bytes(comm_pruned).c_str()));
  }
  if (!within(cca95, 18.8e9, 0.005)) {
    return fail(fmt("CCA@95%% %s, want 18.8 GB +-0.5%%", format_bytes(cca95).c_str()));
  }
  if (!within(cta95, 14.7 * 60.0, 0.005)) {
    return fail(fmt("CTA@95%% %s, want 14.7 min +-0.5%%", format_duration(cta95).c_str()));
  }
  return pass(fmt("comm/round %s dense, %s pruned; CCA@95%% %s, CTA@95%% %s at 824 rounds",
                  format_bytes(comm_dense).c_str(), format_bytes(comm_pruned).c_str(),
                  format_bytes(cca95).c_str(), format_duration(cta95).c_str()));
}

// ---- criterion 2: pruning schedule -----------------------------------------

Outcome criterion2(const Ctx& ctx) {
  PretrainConfig cfg;
  cfg.iterations = 10;
  cfg.prune_rate = 0.2;
  cfg.seed = kSeed;
  // the joint surviving-weight schedule is exact floor arithmetic regardless
  // of training; the encoder's share of it is training-sensitive (see the
  // known-deviation note in the README), and a short budget keeps this
  // criterion inside "minutes"
  cfg.hyper.epochs = 2;
  const UnlabeledSet unlabeled = take(fixture_split(ctx).unlabeled, 2000);
  const PretrainResult r = pretrain(lenet(), unlabeled, cfg);

  const std::map<int, double> targets = {{4, 0.41}, {7, 0.21}, {10, 0.107}};
  std::string seen;
  for (const auto& [iter, target] : targets) {
    const PretrainIter& entry = r.log.at(static_cast<std::size_t>(iter - 1));
    seen += fmt("%sP_R(%d)=%.4f", seen.empty() ? "" : ", ", iter, entry.encoder_remaining_rate);
    if (std::abs(entry.encoder_remaining_rate - target) > 0.005) {
      return fail(fmt("encoder P_R at iteration %d is %.4f, want %.3f +-0.005", iter,
                      entry.encoder_remaining_rate, target));
    }
  }
  const std::int64_t count = r.log.back().encoder_surviving;
  if (count < 28'000 || count > 29'000) {
    return fail(fmt("%s; final subnetwork has %lld parameters, want 28,500 +-500",
                    seen.c_str(), static_cast<long long>(count)));
  }
  return pass(fmt("%s; final subnetwork %lld parameters", seen.c_str(),
                  static_cast<long long>(count)));
}

// ---- criterion 3: gradient oracle ------------------------------------------

double fd_max_rel_error(const Architecture& arch, ParamSetD p, const MatrixD& x,
                        const MatrixD& t, Loss loss) {
  const Mask m = Mask::ones(arch);
  const double h = 1e-5;
  const ParamSetD grads = backward(arch, p, m, forward(arch, p, m, x), t, loss);
  double worst = 0.0;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto probe = [&](double& theta, double g) {
      const double saved = theta;
      theta = saved + h;
      const double up = loss_value(loss, forward(arch, p, m, x).output(), t);
      theta = saved - h;
      const double down = loss_value(loss, forward(arch, p, m, x).output(), t);
      theta = saved;
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(g - fd) / std::max(std::abs(fd), 1e-6));
    };
    for (std::size_t i = 0; i < p.layers[l].w.v.size(); ++i) {
      probe(p.layers[l].w.v[i], grads.layers[l].w.v[i]);
    }
    for (std::size_t i = 0; i < p.layers[l].b.size(); ++i) {
      probe(p.layers[l].b[i], grads.layers[l].b[i]);
    }
  }
  return worst;
}

Outcome criterion3(const Ctx&) {
  double worst = 0.0;
  int nets = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    MatrixD x(4, 8);
    for (double& v : x.v) v = rng.uniform();

    // cross-entropy behind a softmax head
    Architecture ce_arch;
    ce_arch.layer_dims = {8, 5, 3};
    ce_arch.activations = {Activation::relu, Activation::softmax};
    MatrixD onehot(4, 3);
    for (int i = 0; i < 4; ++i) onehot(i, static_cast<int>(rng.index(3))) = 1.0;
    worst = std::max(worst, fd_max_rel_error(ce_arch, init_params<double>(ce_arch, seed * 17),
                                             x, onehot, Loss::categorical_cross_entropy));
    ++nets;

    // mean squared error behind a sigmoid head
    Architecture mse_arch = ce_arch;
    mse_arch.activations = {Activation::relu, Activation::sigmoid};
    MatrixD target(4, 3);
    for (double& v : target.v) v = rng.uniform();
    worst = std::max(worst, fd_max_rel_error(mse_arch, init_params<double>(mse_arch, seed * 29),
                                             x, target, Loss::mean_squared_error));
    ++nets;
  }
  if (worst >= 1e-4) {
    return fail(fmt("max relative error %.3g across %d nets, want < 1e-4", worst, nets));
  }
  return pass(fmt("max relative error %.3g across %d nets (threshold 1e-4)", worst, nets));
}

// ---- criterion 4: mask invariant through the full pipeline -----------------

std::int64_t masked_nonzeros(const ParamSetF& p, const Mask& m) {
  std::int64_t bad = 0;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    for (std::size_t i = 0; i < p.layers[l].w.v.size(); ++i) {
      if (!m.layers[l].w.v[i] && p.layers[l].w.v[i] != 0.0f) ++bad;
    }
    for (std::size_t i = 0; i < p.layers[l].b.size(); ++i) {
      if (!m.layers[l].b[i] && p.layers[l].b[i] != 0.0f) ++bad;
    }
  }
  return bad;
}

Outcome criterion4(const Ctx& ctx) {
  // smoke scale: small encoder, short pre-training, 20 rounds of K=5
  const Architecture encoder = classifier_arch({784, 64, 10});
  PretrainConfig pre;
  pre.iterations = 3;
  pre.prune_rate = 0.3;
  pre.seed = kSeed;
  pre.hyper.epochs = 1;
  const PretrainResult r = pretrain(encoder, take(fixture_split(ctx).unlabeled, 1000), pre);

  FlConfig cfg;
  cfg.clients = 5;
  cfg.rounds = 20;
  cfg.seed = kSeed;
  cfg.local.epochs = 1;
  const auto shards =
      partition_noniid(take(fixture_split(ctx).labeled, 400 * cfg.clients), cfg.clients, kSeed);
  const LabeledSet test = take(fixture_test(ctx), 500);

  std::int64_t violations = 0;
  int rounds_seen = 0;
  RunHooks hooks;
  hooks.on_round = [&](const RoundRecord&, const std::vector<ParamSetF>& uploads,
                       const ParamSetF& globals) {
    ++rounds_seen;
    violations += masked_nonzeros(globals, r.encoder_mask);
    for (const ParamSetF& u : uploads) violations += masked_nonzeros(u, r.encoder_mask);
  };
  run_federated(cfg, encoder, r.encoder_mask, r.encoder_init, shards, test, &hooks);

  const std::int64_t masked = r.encoder_mask.total() - r.encoder_mask.surviving();
  if (rounds_seen != 20) return fail(fmt("expected 20 rounds, saw %d", rounds_seen));
  if (violations != 0) {
    return fail(fmt("%lld masked parameters became nonzero across 20 rounds",
                    static_cast<long long>(violations)));
  }
  return pass(fmt("%lld masked parameters stayed exactly 0 in globals and all uploads "
                  "across 20 rounds (K=5)",
                  static_cast<long long>(masked)));
}

// ---- criterion 5: partition properties -------------------------------------

std::uint64_t row_fingerprint(const MatrixF& images, int row, int label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(images.row(row));
  for (std::size_t i = 0; i < sizeof(float) * static_cast<std::size_t>(images.cols); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return mix64(h ^ static_cast<std::uint64_t>(label + 1));
}

Outcome criterion5(const Ctx& ctx) {
  const LabeledSet& labeled = fixture_split(ctx).labeled;
  if (labeled.size() != 40'000) {
    return fail(fmt("labeled split has %d samples, want 40,000", labeled.size()));
  }
  const int K = 100;
  const auto shards = partition_noniid(labeled, K, kSeed);
  if (shards.size() != static_cast<std::size_t>(K)) {
    return fail(fmt("%zu clients, want %d", shards.size(), K));
  }

  std::multiset<std::uint64_t> source, dealt;
  for (int i = 0; i < labeled.size(); ++i) {
    source.insert(row_fingerprint(labeled.images, i, labeled.labels[i]));
  }
  int max_span = 0;
  for (const ClientShard& shard : shards) {
    if (shard.size() != 400) return fail(fmt("client %d holds %d samples, want 400", shard.id,
                                             shard.size()));
    for (int i = 0; i < shard.size(); ++i) {
      dealt.insert(row_fingerprint(shard.images, i, shard.labels[i]));
    }
    for (int half = 0; half < 2; ++half) {
      const std::set<int> span(shard.labels.begin() + half * 200,
                               shard.labels.begin() + (half + 1) * 200);
      max_span = std::max(max_span, static_cast<int>(span.size()));
    }
  }
  if (max_span > 2) return fail(fmt("a shard spans %d labels, want <= 2", max_span));
  if (dealt != source) {
    return fail("the union of client shards does not equal the 40k labeled set");
  }
  return pass(fmt("100 disjoint clients x 400 samples; max %d labels per 200-sample shard; "
                  "union equals the 40k labeled set",
                  max_span));
}

// ---- criterion 6: smoke-scale learning -------------------------------------

Outcome criterion6(const Ctx& ctx) {
  const Architecture arch = lenet();
  FlConfig cfg;
  cfg.clients = 10;
  cfg.rounds = 100;
  cfg.seed = kSeed;  // reference local hyperparameters are the FlConfig defaults
  const auto shards =
      partition_noniid(take(fixture_split(ctx).labeled, 4000), cfg.clients, kSeed);
  const LabeledSet test = take(fixture_test(ctx), 2000);
  const ParamSetF theta0 = init_params<float>(arch, derive_seed(kSeed, "init"));

  RunHooks hooks;
  hooks.stop = [](const std::vector<RoundRecord>& h) {
    // round 50 is part of the check, so never stop before it
    if (h.size() < 50) return false;
    double best = 0;
    for (const RoundRecord& r : h) best = std::max(best, r.accuracy);
    return best >= 0.90;
  };
  const auto history =
      run_federated(cfg, arch, Mask::ones(arch), theta0, shards, test, &hooks);

  std::vector<double> acc;
  for (const RoundRecord& r : history) acc.push_back(r.accuracy);
  const std::optional<int> reach = nra(acc, 0.90);
  if (!reach) {
    double best = 0;
    for (double a : acc) best = std::max(best, a);
    return fail(fmt("accuracy never reached 0.90 in %zu rounds (best %.4f)", acc.size(), best));
  }
  if (acc.size() < 50) return fail(fmt("run stopped after %zu rounds, need 50", acc.size()));
  if (!(acc[49] > acc[0])) {
    return fail(fmt("accuracy did not increase: round 1 %.4f vs round 50 %.4f", acc[0],
                    acc[49]));
  }
  return pass(fmt("reached 0.90 at round %d (K=10); round 1 %.4f -> round 50 %.4f", *reach,
                  acc[0], acc[49]));
}

// ---- criteria 7/8: full-scale runs on real MNIST (optional tier) -----------

std::optional<std::string> mnist_dir() {
  const char* dir = std::getenv("HPFL_MNIST_DIR");
  if (dir == nullptr || *dir == '\0') return std::nullopt;
  return std::string(dir);
}

std::string resolve_gz(const std::filesystem::path& dir, const std::string& name) {
  const auto plain = dir / name;
  if (std::filesystem::exists(plain)) return plain.string();
  return (dir / (name + ".gz")).string();
}

struct MnistData {
  UnlabeledSet unlabeled;  // 20k
  LabeledSet labeled;      // 40k
  LabeledSet test;         // 10k
};

MnistData load_mnist(const std::string& dir) {
  const std::filesystem::path d(dir);
  const LabeledSet train = load_labeled(resolve_gz(d, "train-images-idx3-ubyte"),
                                        resolve_gz(d, "train-labels-idx1-ubyte"));
  LabeledSet test = load_labeled(resolve_gz(d, "t10k-images-idx3-ubyte"),
                                 resolve_gz(d, "t10k-labels-idx1-ubyte"));
  auto [unlabeled, labeled] = split_train(train, kSeed);
  return {std::move(unlabeled), std::move(labeled), std::move(test)};
}

// pre-training and finished runs are cached on disk so criterion 8 can reuse
// criterion 7's HP-FL trajectory instead of re-training for hours
const std::filesystem::path kMnistCache = "acceptance_mnist_cache";

PretrainResult mnist_pretrain(const MnistData& data) {
  const std::string path = (kMnistCache / fmt("pretrain_s%llu.ckpt",
                                              static_cast<unsigned long long>(kSeed)))
                               .string();
  PretrainConfig cfg;
  cfg.seed = kSeed;  // defaults: 10 iterations, p=0.2, 100 epochs, Adam 1e-3
  if (std::filesystem::exists(path)) {
    const Checkpoint c = load_checkpoint(path);
    PretrainResult r;
    r.encoder = c.arch;
    r.encoder_mask = c.mask;
    r.encoder_init = c.params;
    r.remaining_rate = remaining_rate(c.mask);
    return r;
  }
  PretrainResult r = pretrain(lenet(), data.unlabeled, cfg);
  std::filesystem::create_directories(kMnistCache);
  save_checkpoint(path, {r.encoder, r.encoder_mask, r.encoder_init,
                         {{"stage", "pretrain"}, {"seed", kSeed}}});
  return r;
}

RunSummary mnist_run(const std::string& method, const MnistData& data, const Architecture& arch,
                     const Mask& mask, const ParamSetF& theta0, int max_rounds) {
  const std::string path =
      (kMnistCache / fmt("%s_s%llu.json", method.c_str(),
                         static_cast<unsigned long long>(kSeed)))
          .string();
  if (std::filesystem::exists(path)) {
    const auto runs = load_report_json(path);
    if (runs.size() == 1 && runs[0].method == method) return runs[0];
  }

  CostModel cost;
  cost.param_count = count_params(arch);
  cost.clients = 100;
  cost.p_r = remaining_rate(mask);

  FlConfig cfg;
  cfg.clients = 100;
  cfg.rounds = max_rounds;
  cfg.seed = kSeed;
  cfg.comm_bytes_per_round = cost.per_round_comm_bytes();
  cfg.compute_s_per_round = cost.per_round_compute_s();

  const auto shards = partition_noniid(data.labeled, cfg.clients, kSeed);
  RunHooks hooks;
  hooks.stop = [](const std::vector<RoundRecord>& h) { return h.back().accuracy >= 0.95; };
  const auto history = run_federated(cfg, arch, mask, theta0, shards, data.test, &hooks);

  RunSummary summary{method, cost, history};
  std::filesystem::create_directories(kMnistCache);
  const std::string csv = path + ".csv";
  emit_report({summary}, csv, path);
  return summary;
}

Outcome criterion7(const Ctx&) {
  const auto dir = mnist_dir();
  if (!dir) return skip("needs real MNIST IDX files; set HPFL_MNIST_DIR");
  const MnistData data = load_mnist(*dir);

  const Architecture arch = lenet();
  const ParamSetF theta0 = init_params<float>(arch, derive_seed(kSeed, "init"));
  const RunSummary original =
      mnist_run("original", data, arch, Mask::ones(arch), theta0, 200);

  const PretrainResult pre = mnist_pretrain(data);
  const RunSummary hp =
      mnist_run("hp_fl", data, arch, pre.encoder_mask, pre.encoder_init, 1100);

  const auto nra_orig = nra(original.accuracies(), 0.95);
  const auto nra_hp = nra(hp.accuracies(), 0.95);
  if (!nra_orig || *nra_orig < 100 || *nra_orig > 200) {
    return fail(fmt("original FL reached 95%% at round %s, want 100-200",
                    nra_orig ? std::to_string(*nra_orig).c_str() : "never"));
  }
  if (!nra_hp || *nra_hp < 550 || *nra_hp > 1100) {
    return fail(fmt("HP-FL reached 95%% at round %s, want 550-1100",
                    nra_hp ? std::to_string(*nra_hp).c_str() : "never"));
  }
  const double cca_orig = cca(*nra_orig, original.cost);
  const double cca_hp = cca(*nra_hp, hp.cost);
  const double cta_orig = cta(*nra_orig, original.cost);
  const double cta_hp = cta(*nra_hp, hp.cost);
  if (!(cca_hp < cca_orig) || !(cta_hp < cta_orig)) {
    return fail(fmt("cost ordering not reproduced: CCA %s vs %s, CTA %s vs %s",
                    format_bytes(cca_hp).c_str(), format_bytes(cca_orig).c_str(),
                    format_duration(cta_hp).c_str(), format_duration(cta_orig).c_str()));
  }
  return pass(fmt("original 95%% at round %d (CCA %s, CTA %s); HP-FL at round %d "
                  "(CCA %s, CTA %s)",
                  *nra_orig, format_bytes(cca_orig).c_str(), format_duration(cta_orig).c_str(),
                  *nra_hp, format_bytes(cca_hp).c_str(), format_duration(cta_hp).c_str()));
}

Outcome criterion8(const Ctx&) {
  const auto dir = mnist_dir();
  if (!dir) return skip("needs real MNIST IDX files; set HPFL_MNIST_DIR");
  const MnistData data = load_mnist(*dir);

  const Architecture arch = lenet();
  const PretrainResult pre = mnist_pretrain(data);
  const RunSummary hp =
      mnist_run("hp_fl", data, arch, pre.encoder_mask, pre.encoder_init, 1100);

  // equal remaining weight count, same seeds, mask chosen uniformly at random
  const double weight_rate =
      static_cast<double>(pre.encoder_mask.surviving_weights()) /
      static_cast<double>(pre.encoder_mask.total_weights());
  const Mask random = random_mask(arch, weight_rate, derive_seed(kSeed, "random_mask"));
  const ParamSetF theta0 = init_params<float>(arch, derive_seed(kSeed, "init"));
  const RunSummary rand_run = mnist_run("random_prune", data, arch, random, theta0, 2500);

  const auto nra_hp = nra(hp.accuracies(), 0.95);
  const auto nra_rand = nra(rand_run.accuracies(), 0.95);
  if (!nra_hp) return fail("HP-FL never reached 95%");
  if (!nra_rand) {
    return pass(fmt("HP-FL reached 95%% at round %d; the random mask never did within %zu "
                    "rounds",
                    *nra_hp, rand_run.history.size()));
  }
  if (*nra_rand < static_cast<int>(1.1 * *nra_hp)) {
    return fail(fmt("random mask round %d is not >= 10%% above HP-FL round %d", *nra_rand,
                    *nra_hp));
  }
  return pass(fmt("NRA@95%%: HP-FL %d vs random %d (gap %.0f%%)", *nra_hp, *nra_rand,
                  100.0 * (*nra_rand - *nra_hp) / *nra_hp));
}

// ---- criterion 9: DAE beats the corrupted-identity baseline ----------------

Outcome criterion9(const Ctx& ctx) {
  const DaeSpec dae = build_dae(lenet());
  ParamSetF params = init_params<float>(dae.full, derive_seed(kSeed, "init"));
  const Mask dense = Mask::ones(dae.full);
  const UnlabeledSet& unlabeled = fixture_split(ctx).unlabeled;

  TrainHyper hyper;
  hyper.learning_rate = 0.001;
  hyper.batch_size = 100;
  hyper.epochs = 100;
  hyper.loss = Loss::mean_squared_error;
  hyper.optimizer = Optimizer::adam;
  Rng train_rng(derive_seed(kSeed, "dae_train", 1));
  const double train_loss = train_dae(dae, params, dense, unlabeled.images, hyper, 0.5, 0.5,
                                      train_rng);

  const LabeledSet& test = fixture_test(ctx);
  Rng eval_rng(derive_seed(kSeed, "dae_eval"));
  const MatrixF corrupted = corrupt(test.images, 0.5, 0.5, eval_rng);
  // identity baseline: hand the corrupted pixels straight back
  const double baseline = loss_value(Loss::mean_squared_error, corrupted, test.images);
  const double model = loss_value(Loss::mean_squared_error,
                                  forward(dae.full, params, dense, corrupted).output(),
                                  test.images);
  if (!(model < baseline)) {
    return fail(fmt("held-out reconstruction MSE %.5f is not below the corrupted-identity "
                    "baseline %.5f",
                    model, baseline));
  }
  return pass(fmt("held-out reconstruction MSE %.5f < corrupted-identity baseline %.5f "
                  "(final training loss %.5f)",
                  model, baseline, train_loss));
}

// ---- criterion 10: checkpoints and determinism -----------------------------

void mini_pipeline(const Ctx& ctx, const std::filesystem::path& out_dir) {
  const Architecture encoder = classifier_arch({784, 32, 10});
  PretrainConfig pre;
  pre.iterations = 2;
  pre.prune_rate = 0.3;
  pre.seed = kSeed;
  pre.hyper.epochs = 1;
  const PretrainResult r = pretrain(encoder, take(fixture_split(ctx).unlabeled, 500), pre);

  CostModel cost;
  cost.param_count = count_params(encoder);
  cost.clients = 3;
  cost.p_r = r.remaining_rate;

  FlConfig cfg;
  cfg.clients = 3;
  cfg.rounds = 3;
  cfg.seed = kSeed;
  cfg.local.epochs = 1;
  cfg.comm_bytes_per_round = cost.per_round_comm_bytes();
  cfg.compute_s_per_round = cost.per_round_compute_s();
  const auto shards =
      partition_noniid(take(fixture_split(ctx).labeled, 400 * cfg.clients), cfg.clients, kSeed);
  const auto history = run_federated(cfg, encoder, r.encoder_mask, r.encoder_init, shards,
                                     take(fixture_test(ctx), 300));

  std::filesystem::create_directories(out_dir);
  emit_report({{"hp_fl", cost, history}}, (out_dir / "report.csv").string(),
              (out_dir / "report.json").string());
}

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

Outcome criterion10(const Ctx& ctx) {
  // bit-exact checkpoint round trip on a randomly masked model
  Checkpoint c;
  c.arch = lenet();
  c.params = init_params<float>(c.arch, derive_seed(kSeed, "init"));
  c.mask = random_mask(c.arch, 0.25, 77);
  c.meta = {{"stage", "final"}, {"seed", kSeed}};
  const auto bytes = checkpoint_bytes(c);
  const auto tmp = std::filesystem::temp_directory_path() / "hpfl_acceptance_c10.ckpt";
  save_checkpoint(tmp.string(), c);
  const Checkpoint back = load_checkpoint(tmp.string());
  std::filesystem::remove(tmp);
  if (checkpoint_bytes(back) != bytes) {
    return fail("checkpoint save/load round trip is not bit-exact");
  }

  // two single-threaded pipeline runs from one master seed
  const int saved_threads = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto base = std::filesystem::temp_directory_path() / "hpfl_acceptance_c10_runs";
  std::filesystem::remove_all(base);
  mini_pipeline(ctx, base / "a");
  mini_pipeline(ctx, base / "b");
  omp_set_num_threads(saved_threads);

  const bool csv_equal =
      file_bytes(base / "a" / "report.csv") == file_bytes(base / "b" / "report.csv");
  const bool json_equal =
      file_bytes(base / "a" / "report.json") == file_bytes(base / "b" / "report.json");
  const auto csv_size = file_bytes(base / "a" / "report.csv").size();
  std::filesystem::remove_all(base);
  if (csv_size == 0) return fail("pipeline produced an empty report");
  if (!csv_equal || !json_equal) {
    return fail("two single-threaded runs from one seed produced different report files");
  }
  return pass("checkpoint round trip bit-exact; twin single-threaded runs produced "
              "byte-identical report files");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hpfl acceptance gate"};
  std::string criteria = "all";
  Ctx ctx;
  app.add_option("--criteria", criteria,
                 "comma list of criterion numbers, 'all' (1-6,9,10) or 'mnist' (7,8)");
  app.add_option("--data", ctx.data_dir, "directory with the synthetic digits IDX fixture");
  CLI11_PARSE(app, argc, argv);

  const std::map<int, std::function<Outcome(const Ctx&)>> table = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},  {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10},
  };

  std::vector<int> selected;
  std::stringstream ss(criteria);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token == "all") {
      for (int id : {1, 2, 3, 4, 5, 6, 9, 10}) selected.push_back(id);
    } else if (token == "mnist") {
      selected.push_back(7);
      selected.push_back(8);
    } else if (!token.empty()) {
      const int id = std::atoi(token.c_str());
      if (table.find(id) == table.end()) {
        std::fprintf(stderr, "unknown criterion \"%s\"\n", token.c_str());
        return 1;
      }
      selected.push_back(id);
    }
  }

  bool any_fail = false, any_skip = false;
  for (int id : selected) {
    Outcome out;
    try {
      out = table.at(id)(ctx);
    } catch (const std::exception& e) {
      out = fail(std::string("unexpected error: ") + e.what());
    }
    std::printf("criterion %d: %s — %s\n", id, out.status.c_str(), out.detail.c_str());
    std::fflush(stdout);
    any_fail = any_fail || out.status == "FAIL";
    any_skip = any_skip || out.status == "SKIP";
  }
  if (any_fail) return 1;
  if (any_skip) return 2;
  return 0;
}
