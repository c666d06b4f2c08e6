#pragma once

#include <cstdint>
#include <vector>

#include "hpfl/dataset.hpp"
#include "hpfl/rng.hpp"
#include "hpfl/types.hpp"

namespace hpfl {

// Encoder plus mirrored decoder, trained as one network. The bottleneck
// activation is linear inside the autoencoder regardless of what the encoder
// uses as a classifier head.
struct DaeSpec {
  Architecture encoder;  // as supplied (classifier activations)
  Architecture decoder;  // reversed dims, ReLU hidden, sigmoid output
  Architecture full;     // encoder then decoder, linear bottleneck
};

DaeSpec build_dae(const Architecture& encoder);

struct PretrainConfig {
  int iterations = 10;      // prune/reset cycles
  double prune_rate = 0.2;  // fraction of surviving weights removed per cycle
  double noise_mean = 0.5;
  double noise_std = 0.5;
  TrainHyper hyper{.learning_rate = 0.001,
                   .batch_size = 100,
                   .epochs = 100,
                   .loss = Loss::mean_squared_error,
                   .optimizer = Optimizer::adam};
  std::uint64_t seed = 0;

  void validate() const;
};

struct PretrainIter {
  int iteration = 0;                       // 1-based
  std::int64_t surviving_weights = 0;      // whole autoencoder, after pruning
  std::int64_t encoder_surviving = 0;      // encoder weights + biases
  double encoder_remaining_rate = 0.0;
  double train_loss = 0.0;                 // mean loss of the last epoch
};

struct PretrainResult {
  Architecture encoder;
  Mask encoder_mask;
  ParamSetF encoder_init;  // the original random values, not trained ones
  Mask decoder_mask;       // kept for audit
  ParamSetF decoder_init;
  double remaining_rate = 1.0;
  std::vector<PretrainIter> log;
};

// x_hat = clip(x + eps, 0, 1), eps ~ N(mean, std^2) drawn per element.
MatrixF corrupt(const MatrixF& batch, double mean, double std, Rng& rng);

// Minimizes reconstruction MSE of corrupted inputs against clean ones, fresh
// noise every batch. Returns the mean training loss of the final epoch.
double train_dae(const DaeSpec& dae, ParamSetF& params, const Mask& mask,
                 const MatrixF& unlabeled, const TrainHyper& hyper, double noise_mean,
                 double noise_std, Rng& rng);

// Zeros the mask at the floor(p * surviving) smallest-magnitude surviving
// weights, globally across all layers; biases are never pruned.
Mask prune_step(const ParamSetF& params, const Mask& mask, double p);

// Surviving entries back to their initial values, masked entries to 0.
ParamSetF reset_to_init(const Mask& mask, const ParamSetF& init);

// Surviving entries / total entries (weights + biases).
double remaining_rate(const Mask& mask);

// The full pre-training pipeline: initialize once, then iterate
// (train, prune, reset); exports the encoder mask and its initial values.
PretrainResult pretrain(const Architecture& encoder, const UnlabeledSet& unlabeled,
                        const PretrainConfig& cfg);

// Layer-range slices used to pull the encoder half out of the joint net.
ParamSetF slice_layers(const ParamSetF& p, int from, int to);
Mask slice_layers(const Mask& m, int from, int to);

}  // namespace hpfl
