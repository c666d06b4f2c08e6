#include "hpfl/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "hpfl/nn.hpp"

namespace hpfl {

DaeSpec build_dae(const Architecture& encoder) {
  encoder.validate();
  DaeSpec spec;
  spec.encoder = encoder;

  spec.decoder.layer_dims.assign(encoder.layer_dims.rbegin(), encoder.layer_dims.rend());
  spec.decoder.activations.assign(spec.decoder.layer_dims.size() - 2, Activation::relu);
  spec.decoder.activations.push_back(Activation::sigmoid);
  spec.decoder.validate();

  spec.full.layer_dims = spec.encoder.layer_dims;
  spec.full.layer_dims.insert(spec.full.layer_dims.end(),
                              spec.decoder.layer_dims.begin() + 1,
                              spec.decoder.layer_dims.end());
  spec.full.activations = spec.encoder.activations;
  spec.full.activations.back() = Activation::linear;  // bottleneck
  spec.full.activations.insert(spec.full.activations.end(),
                               spec.decoder.activations.begin(),
                               spec.decoder.activations.end());
  spec.full.validate();
  return spec;
}

void PretrainConfig::validate() const {
  if (iterations < 0) throw std::invalid_argument("pretrain: iterations must be >= 0");
  if (prune_rate < 0 || prune_rate >= 1) {
    throw std::invalid_argument("pretrain: prune_rate must be in [0, 1)");
  }
  if (noise_std < 0) throw std::invalid_argument("pretrain: noise_std must be >= 0");
  hyper.validate();
}

MatrixF corrupt(const MatrixF& batch, double mean, double std, Rng& rng) {
  MatrixF out = batch;
  for (float& p : out.v) {
    const double v = p + rng.gaussian(mean, std);
    p = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

double train_dae(const DaeSpec& dae, ParamSetF& params, const Mask& mask,
                 const MatrixF& unlabeled, const TrainHyper& hyper, double noise_mean,
                 double noise_std, Rng& rng) {
  hyper.validate();
  if (unlabeled.rows == 0) throw std::invalid_argument("train_dae: no data");
  OptimizerState<float> opt = OptimizerState<float>::adam(dae.full);

  const int n = unlabeled.rows;
  const int d = unlabeled.cols;
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;

  double epoch_loss = 0.0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(idx);
    epoch_loss = 0.0;
    for (int start = 0; start < n; start += hyper.batch_size) {
      const int bs = std::min(hyper.batch_size, n - start);
      MatrixF clean(bs, d);
      for (int i = 0; i < bs; ++i) {
        std::memcpy(clean.row(i), unlabeled.row(idx[start + i]), sizeof(float) * d);
      }
      const MatrixF noisy = corrupt(clean, noise_mean, noise_std, rng);
      const Activations<float> acts = forward(dae.full, params, mask, noisy);
      const double batch_loss = loss_value(hyper.loss, acts.output(), clean);
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train_dae: non-finite loss");
      }
      epoch_loss += batch_loss * bs;
      const ParamSetF grads = backward(dae.full, params, mask, acts, clean, hyper.loss);
      if (hyper.optimizer == Optimizer::adam) {
        adam_step(params, grads, mask, hyper.learning_rate, opt);
      } else {
        sgd_step(params, grads, mask, hyper.learning_rate);
      }
    }
    epoch_loss /= n;
  }
  return epoch_loss;
}

Mask prune_step(const ParamSetF& params, const Mask& mask, double p) {
  if (p < 0 || p >= 1) throw std::invalid_argument("prune_step: p must be in [0, 1)");
  if (!shape_matches(params, mask)) throw std::invalid_argument("prune_step: shape mismatch");

  // (|w|, global flat index) over surviving weights; biases excluded.
  struct Entry {
    float mag;
    std::int64_t flat;
  };
  std::vector<Entry> surviving;
  std::int64_t flat = 0;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& w = params.layers[l].w.v;
    const auto& mw = mask.layers[l].w.v;
    for (std::size_t i = 0; i < w.size(); ++i, ++flat) {
      if (mw[i]) surviving.push_back({std::abs(w[i]), flat});
    }
  }
  const std::int64_t cut =
      static_cast<std::int64_t>(std::floor(p * static_cast<double>(surviving.size())));
  if (cut == 0) return mask;

  // smallest magnitudes first, ties broken by lowest flat index
  std::nth_element(surviving.begin(), surviving.begin() + (cut - 1), surviving.end(),
                   [](const Entry& a, const Entry& b) {
                     return a.mag < b.mag || (a.mag == b.mag && a.flat < b.flat);
                   });
  std::vector<std::int64_t> doomed(cut);
  for (std::int64_t i = 0; i < cut; ++i) doomed[i] = surviving[i].flat;
  std::sort(doomed.begin(), doomed.end());

  Mask out = mask;
  std::size_t k = 0;
  flat = 0;
  for (std::size_t l = 0; l < out.layers.size() && k < doomed.size(); ++l) {
    auto& mw = out.layers[l].w.v;
    const std::int64_t base = flat;
    flat += static_cast<std::int64_t>(mw.size());
    while (k < doomed.size() && doomed[k] < flat) {
      mw[static_cast<std::size_t>(doomed[k] - base)] = 0;
      ++k;
    }
  }
  return out;
}

ParamSetF reset_to_init(const Mask& mask, const ParamSetF& init) {
  return apply_mask(init, mask);
}

double remaining_rate(const Mask& mask) {
  const std::int64_t total = mask.total();
  if (total == 0) throw std::invalid_argument("remaining_rate: empty mask");
  return static_cast<double>(mask.surviving()) / static_cast<double>(total);
}

PretrainResult pretrain(const Architecture& encoder, const UnlabeledSet& unlabeled,
                        const PretrainConfig& cfg) {
  cfg.validate();
  if (unlabeled.size() == 0) throw std::invalid_argument("pretrain: no unlabeled data");

  const DaeSpec dae = build_dae(encoder);
  const ParamSetF theta0 = init_params<float>(dae.full, derive_seed(cfg.seed, "init"));
  Mask mask = Mask::ones(dae.full);
  ParamSetF theta = theta0;

  const int enc_layers = dae.encoder.num_layers();
  PretrainResult result;
  result.encoder = dae.encoder;

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    Rng rng(derive_seed(cfg.seed, "dae_train", static_cast<std::uint64_t>(iter)));
    const double loss = train_dae(dae, theta, mask, unlabeled.images, cfg.hyper,
                                  cfg.noise_mean, cfg.noise_std, rng);
    mask = prune_step(theta, mask, cfg.prune_rate);
    theta = reset_to_init(mask, theta0);

    const Mask enc_mask = slice_layers(mask, 0, enc_layers);
    PretrainIter entry;
    entry.iteration = iter;
    entry.surviving_weights = mask.surviving_weights();
    entry.encoder_surviving = enc_mask.surviving();
    entry.encoder_remaining_rate = remaining_rate(enc_mask);
    entry.train_loss = loss;
    result.log.push_back(entry);
  }

  result.encoder_mask = slice_layers(mask, 0, enc_layers);
  result.encoder_init = slice_layers(theta0, 0, enc_layers);
  result.decoder_mask = slice_layers(mask, enc_layers, dae.full.num_layers());
  result.decoder_init = slice_layers(theta0, enc_layers, dae.full.num_layers());
  result.remaining_rate = remaining_rate(result.encoder_mask);
  return result;
}

ParamSetF slice_layers(const ParamSetF& p, int from, int to) {
  ParamSetF out;
  out.layers.assign(p.layers.begin() + from, p.layers.begin() + to);
  return out;
}

Mask slice_layers(const Mask& m, int from, int to) {
  Mask out;
  out.layers.assign(m.layers.begin() + from, m.layers.begin() + to);
  return out;
}

}  // namespace hpfl
