#include "hpfl/types.hpp"

#include <stdexcept>
#include <string>

namespace hpfl {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
    case Activation::linear: return "linear";
  }
  throw std::logic_error("unreachable activation");
}

std::string_view to_string(Loss l) {
  switch (l) {
    case Loss::categorical_cross_entropy: return "categorical_cross_entropy";
    case Loss::mean_squared_error: return "mean_squared_error";
  }
  throw std::logic_error("unreachable loss");
}

std::string_view to_string(Optimizer o) {
  switch (o) {
    case Optimizer::sgd: return "sgd";
    case Optimizer::adam: return "adam";
  }
  throw std::logic_error("unreachable optimizer");
}

Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "softmax") return Activation::softmax;
  if (s == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation: " + std::string(s));
}

Loss loss_from_string(std::string_view s) {
  if (s == "categorical_cross_entropy") return Loss::categorical_cross_entropy;
  if (s == "mean_squared_error") return Loss::mean_squared_error;
  throw std::invalid_argument("unknown loss: " + std::string(s));
}

Optimizer optimizer_from_string(std::string_view s) {
  if (s == "sgd") return Optimizer::sgd;
  if (s == "adam") return Optimizer::adam;
  throw std::invalid_argument("unknown optimizer: " + std::string(s));
}

Architecture classifier_arch(std::vector<int> dims) {
  Architecture arch;
  arch.layer_dims = std::move(dims);
  if (arch.layer_dims.size() >= 2) {
    arch.activations.assign(arch.layer_dims.size() - 2, Activation::relu);
    arch.activations.push_back(Activation::softmax);
  }
  arch.validate();
  return arch;
}

std::int64_t count_params(const Architecture& arch) {
  std::int64_t n = 0;
  for (int l = 0; l < arch.num_layers(); ++l) {
    n += static_cast<std::int64_t>(arch.layer_dims[l]) * arch.layer_dims[l + 1] +
         arch.layer_dims[l + 1];
  }
  return n;
}

}  // namespace hpfl
