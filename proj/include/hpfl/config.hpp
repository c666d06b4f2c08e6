#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpfl/fl.hpp"
#include "hpfl/metrics.hpp"
#include "hpfl/pretrain.hpp"

namespace hpfl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything a run needs, schema-checked: unknown keys are rejected and every
// default is visible via --print-config.
struct RunConfig {
  struct Dataset {
    std::string dir = "data";
    std::string train_images = "train-images-idx3-ubyte";
    std::string train_labels = "train-labels-idx1-ubyte";
    std::string test_images = "t10k-images-idx3-ubyte";
    std::string test_labels = "t10k-labels-idx1-ubyte";
    int unlabeled_limit = 0;  // 0 = use all 20,000
    int labeled_limit = 0;    // 0 = use all 40,000 (must stay 400 * clients)
    int eval_limit = 0;       // 0 = full test set
  } dataset;

  std::vector<int> encoder_dims = {784, 300, 100, 10};

  struct Pretrain {
    int iterations = 10;
    double prune_rate = 0.2;
    double noise_mean = 0.5;
    double noise_std = 0.5;
    int epochs = 100;
    int batch_size = 100;
    double learning_rate = 0.001;
  } pretrain;

  struct Federate {
    std::string method = "original";  // hp_fl | original | pretrain_only | random_prune
    int clients = 100;
    int rounds = 100;
    int epochs = 5;
    int batch_size = 60;
    double learning_rate = 0.1;
    double random_prune_rate = 0.0;  // P_R for method random_prune
    int checkpoint_every = 50;       // rounds between resume checkpoints, 0 = off
  } federate;

  struct Cost {
    double t_comp = 10.0;
    double bytes_per_param = 4.0;
  } cost;

  std::vector<double> thresholds = {0.95};
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  int threads = 0;  // 0 = leave the OpenMP default

  void validate() const;

  // path helpers; a ".gz" twin is picked up when the plain file is absent
  std::string train_images_path() const;
  std::string train_labels_path() const;
  std::string test_images_path() const;
  std::string test_labels_path() const;

  Architecture encoder_arch() const { return classifier_arch(encoder_dims); }
  PretrainConfig pretrain_config() const;
  FlConfig fl_config() const;
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& cfg);

}  // namespace hpfl
