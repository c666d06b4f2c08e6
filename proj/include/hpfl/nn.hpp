#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hpfl/kernels.hpp"
#include "hpfl/matrix.hpp"
#include "hpfl/types.hpp"

namespace hpfl {

// Floor applied inside the cross-entropy log so a saturated softmax cannot
// produce a non-finite loss.
inline constexpr double kProbFloor = 1e-12;

template <typename T>
struct Activations {
  // layers[0] is the input batch, layers[l] the output of layer l.
  std::vector<Matrix<T>> layers;

  const Matrix<T>& output() const { return layers.back(); }
};

namespace detail {

template <typename T>
void apply_activation(Activation act, Matrix<T>& z) {
  const int n = z.rows;
  const int m = z.cols;
  switch (act) {
    case Activation::linear:
      break;
    case Activation::relu: {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) {
        T* zi = z.row(i);
        for (int j = 0; j < m; ++j) zi[j] = zi[j] > T(0) ? zi[j] : T(0);
      }
      break;
    }
    case Activation::sigmoid: {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) {
        T* zi = z.row(i);
        for (int j = 0; j < m; ++j) zi[j] = T(1) / (T(1) + std::exp(-zi[j]));
      }
      break;
    }
    case Activation::softmax: {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) {
        T* zi = z.row(i);
        T mx = zi[0];
        for (int j = 1; j < m; ++j) mx = zi[j] > mx ? zi[j] : mx;
        T sum = T(0);
        for (int j = 0; j < m; ++j) {
          zi[j] = std::exp(zi[j] - mx);
          sum += zi[j];
        }
        for (int j = 0; j < m; ++j) zi[j] /= sum;
      }
      break;
    }
  }
}

// Masked copy of one layer's weights/bias, the m (.) theta the passes run on.
template <typename T>
Layer<T> masked_layer(const Layer<T>& layer, const MaskLayer& mask) {
  Layer<T> out = layer;
  for (std::size_t i = 0; i < out.w.v.size(); ++i) {
    out.w.v[i] = mask.w.v[i] ? out.w.v[i] : T(0);
  }
  for (std::size_t i = 0; i < out.b.size(); ++i) {
    out.b[i] = mask.b[i] ? out.b[i] : T(0);
  }
  return out;
}

// Multiply an upstream dL/da through the activation Jacobian, in place.
template <typename T>
void chain_activation(Activation act, const Matrix<T>& a, Matrix<T>& g) {
  const int n = a.rows;
  const int m = a.cols;
  switch (act) {
    case Activation::linear:
      break;
    case Activation::relu: {
      for (int i = 0; i < n; ++i) {
        const T* ai = a.row(i);
        T* gi = g.row(i);
        for (int j = 0; j < m; ++j) gi[j] = ai[j] > T(0) ? gi[j] : T(0);
      }
      break;
    }
    case Activation::sigmoid: {
      for (int i = 0; i < n; ++i) {
        const T* ai = a.row(i);
        T* gi = g.row(i);
        for (int j = 0; j < m; ++j) gi[j] *= ai[j] * (T(1) - ai[j]);
      }
      break;
    }
    case Activation::softmax: {
      for (int i = 0; i < n; ++i) {
        const T* ai = a.row(i);
        T* gi = g.row(i);
        T dot = T(0);
        for (int j = 0; j < m; ++j) dot += gi[j] * ai[j];
        for (int j = 0; j < m; ++j) gi[j] = ai[j] * (gi[j] - dot);
      }
      break;
    }
  }
}

template <typename T>
double sum_abs(const ParamSet<T>& p) {
  double s = 0;
  for (const auto& l : p.layers) {
    for (T x : l.w.v) s += std::abs(static_cast<double>(x));
    for (T x : l.b) s += std::abs(static_cast<double>(x));
  }
  return s;
}

template <typename T>
void require_finite_grads(const ParamSet<T>& grads, const char* who) {
  if (!std::isfinite(sum_abs(grads))) {
    throw std::runtime_error(std::string(who) + ": non-finite gradient");
  }
}

template <typename T>
void require_aligned(const Architecture& arch, const ParamSet<T>& p, const Mask& m,
                     const char* who) {
  if (!p.shape_matches(arch) || !shape_matches(p, m)) {
    throw std::invalid_argument(std::string(who) + ": shape mismatch");
  }
}

}  // namespace detail

// Runs the batch through f(x; m (.) theta) and keeps every intermediate
// activation for backward.
template <typename T>
Activations<T> forward(const Architecture& arch, const ParamSet<T>& params, const Mask& mask,
                       const Matrix<T>& batch) {
  detail::require_aligned(arch, params, mask, "forward");
  if (batch.cols != arch.in_dim()) {
    throw std::invalid_argument("forward: batch width does not match input dim");
  }
  Activations<T> acts;
  acts.layers.reserve(arch.num_layers() + 1);
  acts.layers.push_back(batch);
  for (int l = 0; l < arch.num_layers(); ++l) {
    const Layer<T> ml = detail::masked_layer(params.layers[l], mask.layers[l]);
    const Matrix<T>& a = acts.layers.back();
    Matrix<T> z(a.rows, arch.layer_dims[l + 1]);
    kernels::affine(a.data(), ml.w.data(), ml.b.data(), z.data(), a.rows,
                    arch.layer_dims[l], arch.layer_dims[l + 1]);
    detail::apply_activation(arch.activations[l], z);
    acts.layers.push_back(std::move(z));
  }
  return acts;
}

template <typename T>
double loss_value(Loss loss, const Matrix<T>& predictions, const Matrix<T>& targets) {
  if (predictions.rows != targets.rows || predictions.cols != targets.cols) {
    throw std::invalid_argument("loss_value: shape mismatch");
  }
  const int n = predictions.rows;
  const int d = predictions.cols;
  double acc = 0;
  if (loss == Loss::categorical_cross_entropy) {
    for (int i = 0; i < n; ++i) {
      const T* p = predictions.row(i);
      const T* t = targets.row(i);
      for (int j = 0; j < d; ++j) {
        if (t[j] != T(0)) {
          const double pj = std::max(static_cast<double>(p[j]), kProbFloor);
          acc -= static_cast<double>(t[j]) * std::log(pj);
        }
      }
    }
    return acc / n;
  }
  for (int i = 0; i < n; ++i) {
    const T* p = predictions.row(i);
    const T* t = targets.row(i);
    for (int j = 0; j < d; ++j) {
      const double e = static_cast<double>(p[j]) - static_cast<double>(t[j]);
      acc += e * e;
    }
  }
  return acc / (static_cast<double>(n) * d);
}

// Gradient of the batch loss w.r.t. every parameter of the dense net. Delta
// propagation uses the masked weights (the same ones forward ran on); the
// returned gradient itself is dense and gets masked at the update step.
template <typename T>
ParamSet<T> backward(const Architecture& arch, const ParamSet<T>& params, const Mask& mask,
                     const Activations<T>& acts, const Matrix<T>& targets, Loss loss) {
  detail::require_aligned(arch, params, mask, "backward");
  const int L = arch.num_layers();
  if (static_cast<int>(acts.layers.size()) != L + 1) {
    throw std::invalid_argument("backward: activations do not match architecture");
  }
  const Matrix<T>& out = acts.output();
  if (targets.rows != out.rows || targets.cols != out.cols) {
    throw std::invalid_argument("backward: target shape mismatch");
  }
  const int n = out.rows;

  // dL/dz at the output layer.
  Matrix<T> delta(n, out.cols);
  if (loss == Loss::categorical_cross_entropy && arch.activations[L - 1] == Activation::softmax) {
    const T inv_n = T(1) / T(n);
    for (int i = 0; i < n; ++i) {
      const T* o = out.row(i);
      const T* t = targets.row(i);
      T* d = delta.row(i);
      for (int j = 0; j < out.cols; ++j) d[j] = (o[j] - t[j]) * inv_n;
    }
  } else {
    if (loss == Loss::mean_squared_error) {
      const T scale = T(2) / (T(n) * T(out.cols));
      for (int i = 0; i < n; ++i) {
        const T* o = out.row(i);
        const T* t = targets.row(i);
        T* d = delta.row(i);
        for (int j = 0; j < out.cols; ++j) d[j] = (o[j] - t[j]) * scale;
      }
    } else {
      const T floor = T(kProbFloor);
      const T inv_n = T(1) / T(n);
      for (int i = 0; i < n; ++i) {
        const T* o = out.row(i);
        const T* t = targets.row(i);
        T* d = delta.row(i);
        for (int j = 0; j < out.cols; ++j) {
          d[j] = o[j] > floor ? -t[j] / o[j] * inv_n : T(0);
        }
      }
    }
    detail::chain_activation(arch.activations[L - 1], out, delta);
  }

  ParamSet<T> grads = ParamSet<T>::zeros(arch);
  for (int l = L - 1; l >= 0; --l) {
    const Matrix<T>& a_prev = acts.layers[l];
    kernels::matmul_tn(a_prev.data(), delta.data(), grads.layers[l].w.data(), n,
                       arch.layer_dims[l], arch.layer_dims[l + 1]);
    kernels::col_sum(delta.data(), grads.layers[l].b.data(), n, arch.layer_dims[l + 1]);
    if (l > 0) {
      const Layer<T> ml = detail::masked_layer(params.layers[l], mask.layers[l]);
      Matrix<T> prev(n, arch.layer_dims[l]);
      kernels::matmul_nt(delta.data(), ml.w.data(), prev.data(), n,
                         arch.layer_dims[l + 1], arch.layer_dims[l]);
      detail::chain_activation(arch.activations[l - 1], acts.layers[l], prev);
      delta = std::move(prev);
    }
  }
  return grads;
}

// theta <- theta - lr * g where the mask is 1; entries with mask 0 stay 0.
template <typename T>
void sgd_step(ParamSet<T>& params, const ParamSet<T>& grads, const Mask& mask, double lr) {
  if (!shape_matches(params, mask) || params.layers.size() != grads.layers.size()) {
    throw std::invalid_argument("sgd_step: shape mismatch");
  }
  detail::require_finite_grads(grads, "sgd_step");
  const T eta = static_cast<T>(lr);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& w = params.layers[l].w.v;
    const auto& g = grads.layers[l].w.v;
    const auto& mw = mask.layers[l].w.v;
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = mw[i] ? w[i] - eta * g[i] : T(0);
    }
    auto& b = params.layers[l].b;
    const auto& gb = grads.layers[l].b;
    const auto& mb = mask.layers[l].b;
    for (std::size_t i = 0; i < b.size(); ++i) {
      b[i] = mb[i] ? b[i] - eta * gb[i] : T(0);
    }
  }
}

// Adam with bias correction; moments of masked-out entries stay 0.
template <typename T>
void adam_step(ParamSet<T>& params, const ParamSet<T>& grads, const Mask& mask, double lr,
               OptimizerState<T>& state) {
  if (!shape_matches(params, mask) || params.layers.size() != grads.layers.size() ||
      state.m.layers.size() != params.layers.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  detail::require_finite_grads(grads, "adam_step");
  state.step += 1;
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  const T eps = static_cast<T>(state.eps);
  const T eta = static_cast<T>(lr);
  const T bc1 = static_cast<T>(1.0 - std::pow(state.beta1, static_cast<double>(state.step)));
  const T bc2 = static_cast<T>(1.0 - std::pow(state.beta2, static_cast<double>(state.step)));

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto step_span = [&](T* w, const T* g, const std::uint8_t* mk, std::size_t size,
                         T* m, T* v) {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(size); ++i) {
        if (!mk[i]) {
          w[i] = T(0);
          m[i] = T(0);
          v[i] = T(0);
          continue;
        }
        m[i] = b1 * m[i] + (T(1) - b1) * g[i];
        v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
        const T mh = m[i] / bc1;
        const T vh = v[i] / bc2;
        w[i] -= eta * mh / (std::sqrt(vh) + eps);
      }
    };
    step_span(params.layers[l].w.data(), grads.layers[l].w.data(), mask.layers[l].w.data(),
              params.layers[l].w.size(), state.m.layers[l].w.data(), state.v.layers[l].w.data());
    step_span(params.layers[l].b.data(), grads.layers[l].b.data(), mask.layers[l].b.data(),
              params.layers[l].b.size(), state.m.layers[l].b.data(), state.v.layers[l].b.data());
  }
}

}  // namespace hpfl
