#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hpfl/dataset.hpp"
#include "hpfl/types.hpp"

namespace hpfl {

struct ClientShard {
  int id = 0;
  MatrixF images;           // n x 784
  std::vector<int> labels;  // class indices

  int size() const { return images.rows; }
};

struct RoundRecord {
  int round = 0;  // 1-based
  double accuracy = 0.0;
  double comm_bytes = 0.0;  // modeled bytes moved this round (both directions)
  double compute_s = 0.0;   // modeled per-client compute this round

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct FlConfig {
  int clients = 100;
  int rounds = 100;
  TrainHyper local{.learning_rate = 0.1,
                   .batch_size = 60,
                   .epochs = 5,
                   .loss = Loss::categorical_cross_entropy,
                   .optimizer = Optimizer::sgd};
  std::uint64_t seed = 0;
  int first_round = 0;  // rounds already completed (checkpoint resume)
  double comm_bytes_per_round = 0.0;
  double compute_s_per_round = 0.0;

  void validate() const;
};

// Label-sorted sharding: stable sort by class, cut into 2K contiguous shards
// of 200, shuffle the shard order, deal two shards per client. Requires
// exactly 400*K examples.
std::vector<ClientShard> partition_noniid(const LabeledSet& labeled, int clients,
                                          std::uint64_t seed);

// Local training: epochs of mini-batch SGD on cross-entropy starting from the
// downloaded globals; masked entries stay 0; the final partial batch is kept.
ParamSetF client_update(const Architecture& arch, const ParamSetF& globals, const Mask& mask,
                        const ClientShard& shard, const TrainHyper& hyper, std::uint64_t seed);

// Entry-wise weighted mean, weights n_k / sum(n_k).
ParamSetF aggregate(const std::vector<ParamSetF>& updates, const std::vector<int>& counts);

// Uniformly random subnetwork keeping round(p_r * weight_count) weights; all
// biases kept.
Mask random_mask(const Architecture& arch, double p_r, std::uint64_t seed);

struct RunHooks {
  // Fires after each round's aggregation with the client uploads and the new
  // globals; accuracy is already on the record.
  std::function<void(const RoundRecord&, const std::vector<ParamSetF>& uploads,
                     const ParamSetF& globals)>
      on_round;
  // Return true to stop before cfg.rounds (history holds this run's records).
  std::function<bool(const std::vector<RoundRecord>&)> stop;
};

// One federated run: every round all K clients train from the same downloaded
// globals, the server averages, and the result is scored on the test set.
std::vector<RoundRecord> run_federated(const FlConfig& cfg, const Architecture& arch,
                                       const Mask& mask, const ParamSetF& theta_start,
                                       const std::vector<ClientShard>& shards,
                                       const LabeledSet& test, const RunHooks* hooks = nullptr);

}  // namespace hpfl
