#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hpfl/matrix.hpp"
#include "hpfl/rng.hpp"

namespace hpfl {

enum class Activation { relu, sigmoid, softmax, linear };
enum class Loss { categorical_cross_entropy, mean_squared_error };
enum class Optimizer { sgd, adam };

std::string_view to_string(Activation a);
std::string_view to_string(Loss l);
std::string_view to_string(Optimizer o);
Activation activation_from_string(std::string_view s);
Loss loss_from_string(std::string_view s);
Optimizer optimizer_from_string(std::string_view s);

// Layer sizes d_0..d_N plus one activation per weight layer.
struct Architecture {
  std::vector<int> layer_dims;
  std::vector<Activation> activations;

  int num_layers() const { return static_cast<int>(activations.size()); }
  int in_dim() const { return layer_dims.front(); }
  int out_dim() const { return layer_dims.back(); }

  void validate() const {
    if (layer_dims.size() < 2) {
      throw std::invalid_argument("architecture needs at least two layer dims");
    }
    for (int d : layer_dims) {
      if (d < 1) throw std::invalid_argument("architecture layer dims must be >= 1");
    }
    if (activations.size() + 1 != layer_dims.size()) {
      throw std::invalid_argument("architecture needs one activation per weight layer");
    }
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// ReLU hidden layers with a softmax head, the plain classifier shape.
Architecture classifier_arch(std::vector<int> dims);

std::int64_t count_params(const Architecture& arch);

template <typename T>
struct Layer {
  Matrix<T> w;       // d_i x d_{i+1}
  std::vector<T> b;  // d_{i+1}

  friend bool operator==(const Layer&, const Layer&) = default;
};

template <typename T>
struct ParamSet {
  std::vector<Layer<T>> layers;

  static ParamSet zeros(const Architecture& arch) {
    ParamSet p;
    p.layers.reserve(arch.num_layers());
    for (int l = 0; l < arch.num_layers(); ++l) {
      Layer<T> layer;
      layer.w = Matrix<T>(arch.layer_dims[l], arch.layer_dims[l + 1]);
      layer.b.assign(arch.layer_dims[l + 1], T(0));
      p.layers.push_back(std::move(layer));
    }
    return p;
  }

  std::int64_t count() const {
    std::int64_t n = 0;
    for (const auto& l : layers) n += static_cast<std::int64_t>(l.w.size()) + l.b.size();
    return n;
  }

  bool shape_matches(const Architecture& arch) const {
    if (static_cast<int>(layers.size()) != arch.num_layers()) return false;
    for (int l = 0; l < arch.num_layers(); ++l) {
      if (layers[l].w.rows != arch.layer_dims[l] || layers[l].w.cols != arch.layer_dims[l + 1] ||
          static_cast<int>(layers[l].b.size()) != arch.layer_dims[l + 1]) {
        return false;
      }
    }
    return true;
  }

  friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

using ParamSetF = ParamSet<float>;
using ParamSetD = ParamSet<double>;

struct MaskLayer {
  Matrix<std::uint8_t> w;
  std::vector<std::uint8_t> b;

  friend bool operator==(const MaskLayer&, const MaskLayer&) = default;
};

// Binary mask aligned with a ParamSet; 0 pins the parameter to exactly 0.
struct Mask {
  std::vector<MaskLayer> layers;

  static Mask ones(const Architecture& arch) {
    Mask m;
    m.layers.reserve(arch.num_layers());
    for (int l = 0; l < arch.num_layers(); ++l) {
      MaskLayer layer;
      layer.w = Matrix<std::uint8_t>(arch.layer_dims[l], arch.layer_dims[l + 1], 1);
      layer.b.assign(arch.layer_dims[l + 1], 1);
      m.layers.push_back(std::move(layer));
    }
    return m;
  }

  std::int64_t total() const {
    std::int64_t n = 0;
    for (const auto& l : layers) n += static_cast<std::int64_t>(l.w.size()) + l.b.size();
    return n;
  }

  std::int64_t surviving() const {
    std::int64_t n = 0;
    for (const auto& l : layers) {
      for (auto x : l.w.v) n += x;
      for (auto x : l.b) n += x;
    }
    return n;
  }

  std::int64_t total_weights() const {
    std::int64_t n = 0;
    for (const auto& l : layers) n += static_cast<std::int64_t>(l.w.size());
    return n;
  }

  std::int64_t surviving_weights() const {
    std::int64_t n = 0;
    for (const auto& l : layers) {
      for (auto x : l.w.v) n += x;
    }
    return n;
  }

  friend bool operator==(const Mask&, const Mask&) = default;
};

template <typename T>
bool shape_matches(const ParamSet<T>& p, const Mask& m) {
  if (p.layers.size() != m.layers.size()) return false;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    if (p.layers[l].w.rows != m.layers[l].w.rows || p.layers[l].w.cols != m.layers[l].w.cols ||
        p.layers[l].b.size() != m.layers[l].b.size()) {
      return false;
    }
  }
  return true;
}

template <typename T>
ParamSet<T> apply_mask(const ParamSet<T>& p, const Mask& m) {
  if (!shape_matches(p, m)) throw std::invalid_argument("apply_mask: shape mismatch");
  ParamSet<T> out = p;
  for (std::size_t l = 0; l < out.layers.size(); ++l) {
    auto& w = out.layers[l].w.v;
    const auto& mw = m.layers[l].w.v;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = mw[i] ? w[i] : T(0);
    auto& b = out.layers[l].b;
    const auto& mb = m.layers[l].b;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = mb[i] ? b[i] : T(0);
  }
  return out;
}

// Uniform Glorot weights, zero biases. Weights are drawn layer by layer in
// row-major order from a single stream, so the draws for a prefix of the
// architecture do not depend on the layers behind it.
template <typename T>
ParamSet<T> init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  ParamSet<T> p = ParamSet<T>::zeros(arch);
  Rng rng(seed);
  for (int l = 0; l < arch.num_layers(); ++l) {
    const double limit =
        std::sqrt(6.0 / (arch.layer_dims[l] + arch.layer_dims[l + 1]));
    for (auto& w : p.layers[l].w.v) {
      w = static_cast<T>(rng.uniform(-limit, limit));
    }
  }
  return p;
}

struct TrainHyper {
  double learning_rate = 0.1;
  int batch_size = 60;
  int epochs = 5;
  Loss loss = Loss::categorical_cross_entropy;
  Optimizer optimizer = Optimizer::sgd;

  void validate() const {
    if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  }
};

template <typename T>
struct OptimizerState {
  Optimizer kind = Optimizer::sgd;
  ParamSet<T> m;  // first moments
  ParamSet<T> v;  // second moments
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptimizerState adam(const Architecture& arch) {
    OptimizerState s;
    s.kind = Optimizer::adam;
    s.m = ParamSet<T>::zeros(arch);
    s.v = ParamSet<T>::zeros(arch);
    return s;
  }
};

}  // namespace hpfl
