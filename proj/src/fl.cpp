#include "hpfl/fl.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "hpfl/metrics.hpp"
#include "hpfl/nn.hpp"
#include "hpfl/rng.hpp"

namespace hpfl {

namespace {

constexpr int kShardSize = 200;
constexpr int kShardsPerClient = 2;

}  // namespace

void FlConfig::validate() const {
  if (clients < 1) throw std::invalid_argument("federate: clients must be >= 1");
  if (rounds < 1) throw std::invalid_argument("federate: rounds must be >= 1");
  if (first_round < 0 || first_round > rounds) {
    throw std::invalid_argument("federate: first_round out of range");
  }
  local.validate();
}

std::vector<ClientShard> partition_noniid(const LabeledSet& labeled, int clients,
                                          std::uint64_t seed) {
  const int n = labeled.size();
  const int expected = clients * kShardSize * kShardsPerClient;
  if (n != expected) {
    throw std::invalid_argument("partition: need exactly " + std::to_string(expected) +
                                " examples for " + std::to_string(clients) +
                                " clients, got " + std::to_string(n));
  }
  // stable sort by label; ties keep original order
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return labeled.labels[a] < labeled.labels[b]; });

  const int shard_count = clients * kShardsPerClient;
  std::vector<int> shard_ids(shard_count);
  std::iota(shard_ids.begin(), shard_ids.end(), 0);
  Rng rng(derive_seed(seed, "partition"));
  rng.shuffle(shard_ids);

  const int d = labeled.images.cols;
  std::vector<ClientShard> out(clients);
  for (int k = 0; k < clients; ++k) {
    ClientShard& shard = out[k];
    shard.id = k;
    shard.images = MatrixF(kShardSize * kShardsPerClient, d);
    shard.labels.resize(kShardSize * kShardsPerClient);
    for (int s = 0; s < kShardsPerClient; ++s) {
      const int sid = shard_ids[k * kShardsPerClient + s];
      for (int i = 0; i < kShardSize; ++i) {
        const int src = order[sid * kShardSize + i];
        const int dst = s * kShardSize + i;
        std::memcpy(shard.images.row(dst), labeled.images.row(src), sizeof(float) * d);
        shard.labels[dst] = labeled.labels[src];
      }
    }
  }
  return out;
}

ParamSetF client_update(const Architecture& arch, const ParamSetF& globals, const Mask& mask,
                        const ClientShard& shard, const TrainHyper& hyper, std::uint64_t seed) {
  hyper.validate();
  const int n = shard.size();
  if (n == 0) throw std::invalid_argument("client_update: empty shard");
  const int d = shard.images.cols;

  ParamSetF params = globals;
  Rng rng(seed);
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const MatrixF targets = one_hot(shard.labels, arch.out_dim());

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(idx);
    for (int start = 0; start < n; start += hyper.batch_size) {
      const int bs = std::min(hyper.batch_size, n - start);
      MatrixF x(bs, d);
      MatrixF t(bs, arch.out_dim());
      for (int i = 0; i < bs; ++i) {
        std::memcpy(x.row(i), shard.images.row(idx[start + i]), sizeof(float) * d);
        std::memcpy(t.row(i), targets.row(idx[start + i]),
                    sizeof(float) * static_cast<std::size_t>(arch.out_dim()));
      }
      const Activations<float> acts = forward(arch, params, mask, x);
      const ParamSetF grads = backward(arch, params, mask, acts, t, hyper.loss);
      sgd_step(params, grads, mask, hyper.learning_rate);
    }
  }
  return params;
}

ParamSetF aggregate(const std::vector<ParamSetF>& updates, const std::vector<int>& counts) {
  if (updates.empty()) throw std::invalid_argument("aggregate: no updates");
  if (updates.size() != counts.size()) {
    throw std::invalid_argument("aggregate: update/count size mismatch");
  }
  double total = 0;
  for (int c : counts) {
    if (c <= 0) throw std::invalid_argument("aggregate: sample counts must be positive");
    total += c;
  }
  for (const ParamSetF& u : updates) {
    if (u.layers.size() != updates[0].layers.size()) {
      throw std::invalid_argument("aggregate: layer count mismatch");
    }
  }

  // double accumulators so K=100 sums do not drift in float
  ParamSetF out = updates[0];
  for (std::size_t l = 0; l < out.layers.size(); ++l) {
    const std::size_t wn = out.layers[l].w.size();
    const std::size_t bn = out.layers[l].b.size();
    std::vector<double> wacc(wn, 0.0), bacc(bn, 0.0);
    for (std::size_t k = 0; k < updates.size(); ++k) {
      const auto& lay = updates[k].layers[l];
      if (lay.w.size() != wn || lay.b.size() != bn) {
        throw std::invalid_argument("aggregate: shape mismatch");
      }
      const double wk = counts[k] / total;
      for (std::size_t i = 0; i < wn; ++i) wacc[i] += wk * lay.w.v[i];
      for (std::size_t i = 0; i < bn; ++i) bacc[i] += wk * lay.b[i];
    }
    for (std::size_t i = 0; i < wn; ++i) out.layers[l].w.v[i] = static_cast<float>(wacc[i]);
    for (std::size_t i = 0; i < bn; ++i) out.layers[l].b[i] = static_cast<float>(bacc[i]);
  }
  return out;
}

Mask random_mask(const Architecture& arch, double p_r, std::uint64_t seed) {
  if (!(p_r > 0) || p_r > 1) throw std::invalid_argument("random_mask: p_r must be in (0, 1]");
  Mask mask = Mask::ones(arch);
  const std::int64_t weight_count = mask.total_weights();
  const std::int64_t keep = std::llround(p_r * static_cast<double>(weight_count));

  std::vector<std::int64_t> flat(weight_count);
  std::iota(flat.begin(), flat.end(), std::int64_t{0});
  Rng rng(derive_seed(seed, "random_mask"));
  rng.shuffle(flat);
  flat.resize(weight_count - keep);  // these get dropped
  std::sort(flat.begin(), flat.end());

  std::size_t k = 0;
  std::int64_t base = 0;
  for (auto& layer : mask.layers) {
    const std::int64_t end = base + static_cast<std::int64_t>(layer.w.size());
    while (k < flat.size() && flat[k] < end) {
      layer.w.v[static_cast<std::size_t>(flat[k] - base)] = 0;
      ++k;
    }
    base = end;
  }
  return mask;
}

std::vector<RoundRecord> run_federated(const FlConfig& cfg, const Architecture& arch,
                                       const Mask& mask, const ParamSetF& theta_start,
                                       const std::vector<ClientShard>& shards,
                                       const LabeledSet& test, const RunHooks* hooks) {
  cfg.validate();
  if (static_cast<int>(shards.size()) != cfg.clients) {
    throw std::invalid_argument("run_federated: have " + std::to_string(shards.size()) +
                                " shards for " + std::to_string(cfg.clients) + " clients");
  }
  if (!theta_start.shape_matches(arch) || !shape_matches(theta_start, mask)) {
    throw std::invalid_argument("run_federated: shape mismatch");
  }

  ParamSetF globals = apply_mask(theta_start, mask);
  std::vector<int> counts(shards.size());
  for (std::size_t k = 0; k < shards.size(); ++k) counts[k] = shards[k].size();

  std::vector<RoundRecord> history;
  for (int round = cfg.first_round + 1; round <= cfg.rounds; ++round) {
    std::vector<ParamSetF> uploads(shards.size());
    for (std::size_t k = 0; k < shards.size(); ++k) {
      const std::uint64_t client_seed = derive_seed(
          cfg.seed, "client", static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(k));
      uploads[k] = client_update(arch, globals, mask, shards[k], cfg.local, client_seed);
    }
    globals = aggregate(uploads, counts);

    RoundRecord rec;
    rec.round = round;
    rec.accuracy = evaluate_accuracy(arch, globals, mask, test);
    rec.comm_bytes = cfg.comm_bytes_per_round;
    rec.compute_s = cfg.compute_s_per_round;
    history.push_back(rec);

    if (hooks && hooks->on_round) hooks->on_round(rec, uploads, globals);
    if (hooks && hooks->stop && hooks->stop(history)) break;
  }
  return history;
}

}  // namespace hpfl
