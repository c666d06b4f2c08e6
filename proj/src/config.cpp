#include "hpfl/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace hpfl {

namespace {

using nlohmann::json;

// Pulls known keys out of an object and rejects anything left over, so typos
// fail loudly instead of silently running defaults.
struct ObjectReader {
  const json& obj;
  std::string where;
  std::set<std::string> seen;

  ObjectReader(const json& o, std::string w) : obj(o), where(std::move(w)) {
    if (!obj.is_object()) throw ConfigError("config: " + where + " must be an object");
  }

  const json* find(const std::string& key) {
    seen.insert(key);
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (const json* v = find(key)) {
      try {
        out = v->get<T>();
      } catch (const json::exception&) {
        throw ConfigError("config: bad value for " + where + key);
      }
    }
  }

  void finish() {
    for (const auto& [key, value] : obj.items()) {
      if (!seen.contains(key)) {
        throw ConfigError("config: unknown key " + where + key);
      }
    }
  }
};

std::string resolve(const std::string& dir, const std::string& name) {
  namespace fs = std::filesystem;
  const fs::path plain = fs::path(dir) / name;
  if (fs::exists(plain)) return plain.string();
  const fs::path gz = fs::path(dir) / (name + ".gz");
  if (fs::exists(gz)) return gz.string();
  return plain.string();  // let the loader report the missing file
}

}  // namespace

RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  ObjectReader top(doc, "");
  if (const json* d = top.find("dataset")) {
    ObjectReader r(*d, "dataset.");
    r.read("dir", cfg.dataset.dir);
    r.read("train_images", cfg.dataset.train_images);
    r.read("train_labels", cfg.dataset.train_labels);
    r.read("test_images", cfg.dataset.test_images);
    r.read("test_labels", cfg.dataset.test_labels);
    r.read("unlabeled_limit", cfg.dataset.unlabeled_limit);
    r.read("labeled_limit", cfg.dataset.labeled_limit);
    r.read("eval_limit", cfg.dataset.eval_limit);
    r.finish();
  }
  if (const json* m = top.find("model")) {
    ObjectReader r(*m, "model.");
    r.read("encoder_dims", cfg.encoder_dims);
    r.finish();
  }
  if (const json* p = top.find("pretrain")) {
    ObjectReader r(*p, "pretrain.");
    r.read("iterations", cfg.pretrain.iterations);
    r.read("prune_rate", cfg.pretrain.prune_rate);
    r.read("noise_mean", cfg.pretrain.noise_mean);
    r.read("noise_std", cfg.pretrain.noise_std);
    r.read("epochs", cfg.pretrain.epochs);
    r.read("batch_size", cfg.pretrain.batch_size);
    r.read("learning_rate", cfg.pretrain.learning_rate);
    r.finish();
  }
  if (const json* f = top.find("federate")) {
    ObjectReader r(*f, "federate.");
    r.read("method", cfg.federate.method);
    r.read("clients", cfg.federate.clients);
    r.read("rounds", cfg.federate.rounds);
    r.read("epochs", cfg.federate.epochs);
    r.read("batch_size", cfg.federate.batch_size);
    r.read("learning_rate", cfg.federate.learning_rate);
    r.read("random_prune_rate", cfg.federate.random_prune_rate);
    r.read("checkpoint_every", cfg.federate.checkpoint_every);
    r.finish();
  }
  if (const json* c = top.find("cost")) {
    ObjectReader r(*c, "cost.");
    r.read("t_comp", cfg.cost.t_comp);
    r.read("bytes_per_param", cfg.cost.bytes_per_param);
    r.finish();
  }
  if (const json* rep = top.find("report")) {
    ObjectReader r(*rep, "report.");
    r.read("thresholds", cfg.thresholds);
    r.finish();
  }
  top.read("seed", cfg.seed);
  top.read("out_dir", cfg.out_dir);
  top.read("threads", cfg.threads);
  top.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config: " + path);
  json doc;
  try {
    f >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

void RunConfig::validate() const {
  encoder_arch();  // throws on bad dims
  pretrain_config().validate();
  fl_config().validate();
  static const std::set<std::string> kMethods = {"hp_fl", "original", "pretrain_only",
                                                "random_prune"};
  if (!kMethods.contains(federate.method)) {
    throw ConfigError("config: unknown federate.method \"" + federate.method + "\"");
  }
  if (federate.method == "random_prune" &&
      !(federate.random_prune_rate > 0 && federate.random_prune_rate <= 1)) {
    throw ConfigError("config: method random_prune needs federate.random_prune_rate in (0,1]");
  }
  if (federate.checkpoint_every < 0) {
    throw ConfigError("config: federate.checkpoint_every must be >= 0");
  }
  if (dataset.unlabeled_limit < 0 || dataset.labeled_limit < 0 || dataset.eval_limit < 0) {
    throw ConfigError("config: dataset limits must be >= 0");
  }
  if (thresholds.empty()) throw ConfigError("config: report.thresholds must be nonempty");
  for (double t : thresholds) {
    if (!(t >= 0 && t < 1)) throw ConfigError("config: thresholds must be in [0, 1)");
  }
  if (cost.t_comp <= 0 || cost.bytes_per_param <= 0) {
    throw ConfigError("config: cost fields must be positive");
  }
  if (threads < 0) throw ConfigError("config: threads must be >= 0");
}

std::string RunConfig::train_images_path() const { return resolve(dataset.dir, dataset.train_images); }
std::string RunConfig::train_labels_path() const { return resolve(dataset.dir, dataset.train_labels); }
std::string RunConfig::test_images_path() const { return resolve(dataset.dir, dataset.test_images); }
std::string RunConfig::test_labels_path() const { return resolve(dataset.dir, dataset.test_labels); }

PretrainConfig RunConfig::pretrain_config() const {
  PretrainConfig p;
  p.iterations = pretrain.iterations;
  p.prune_rate = pretrain.prune_rate;
  p.noise_mean = pretrain.noise_mean;
  p.noise_std = pretrain.noise_std;
  p.hyper.learning_rate = pretrain.learning_rate;
  p.hyper.batch_size = pretrain.batch_size;
  p.hyper.epochs = pretrain.epochs;
  p.hyper.loss = Loss::mean_squared_error;
  p.hyper.optimizer = Optimizer::adam;
  p.seed = seed;
  return p;
}

FlConfig RunConfig::fl_config() const {
  FlConfig f;
  f.clients = federate.clients;
  f.rounds = federate.rounds;
  f.local.learning_rate = federate.learning_rate;
  f.local.batch_size = federate.batch_size;
  f.local.epochs = federate.epochs;
  f.local.loss = Loss::categorical_cross_entropy;
  f.local.optimizer = Optimizer::sgd;
  f.seed = seed;
  return f;
}

json config_to_json(const RunConfig& cfg) {
  json doc;
  doc["dataset"] = {{"dir", cfg.dataset.dir},
                    {"train_images", cfg.dataset.train_images},
                    {"train_labels", cfg.dataset.train_labels},
                    {"test_images", cfg.dataset.test_images},
                    {"test_labels", cfg.dataset.test_labels},
                    {"unlabeled_limit", cfg.dataset.unlabeled_limit},
                    {"labeled_limit", cfg.dataset.labeled_limit},
                    {"eval_limit", cfg.dataset.eval_limit}};
  doc["model"] = {{"encoder_dims", cfg.encoder_dims}};
  doc["pretrain"] = {{"iterations", cfg.pretrain.iterations},
                     {"prune_rate", cfg.pretrain.prune_rate},
                     {"noise_mean", cfg.pretrain.noise_mean},
                     {"noise_std", cfg.pretrain.noise_std},
                     {"epochs", cfg.pretrain.epochs},
                     {"batch_size", cfg.pretrain.batch_size},
                     {"learning_rate", cfg.pretrain.learning_rate}};
  doc["federate"] = {{"method", cfg.federate.method},
                     {"clients", cfg.federate.clients},
                     {"rounds", cfg.federate.rounds},
                     {"epochs", cfg.federate.epochs},
                     {"batch_size", cfg.federate.batch_size},
                     {"learning_rate", cfg.federate.learning_rate},
                     {"random_prune_rate", cfg.federate.random_prune_rate},
                     {"checkpoint_every", cfg.federate.checkpoint_every}};
  doc["cost"] = {{"t_comp", cfg.cost.t_comp}, {"bytes_per_param", cfg.cost.bytes_per_param}};
  doc["report"] = {{"thresholds", cfg.thresholds}};
  doc["seed"] = cfg.seed;
  doc["out_dir"] = cfg.out_dir;
  doc["threads"] = cfg.threads;
  return doc;
}

}  // namespace hpfl
