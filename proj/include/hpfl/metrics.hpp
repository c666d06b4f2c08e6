#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hpfl/dataset.hpp"
#include "hpfl/fl.hpp"
#include "hpfl/types.hpp"

namespace hpfl {

// Communication/computation model: 32-bit parameters move up and down for
// every client each round, and a full-model local update costs t_comp
// seconds, both scaled by the remaining rate.
struct CostModel {
  double bytes_per_param = 4.0;
  double t_comp = 10.0;  // seconds per full-model client update
  int clients = 100;
  double p_r = 1.0;
  std::int64_t param_count = 0;

  double per_round_comm_bytes() const {
    return bytes_per_param * static_cast<double>(param_count) * p_r * 2.0 * clients;
  }
  double per_round_compute_s() const { return t_comp * p_r; }

  void validate() const;

  friend bool operator==(const CostModel&, const CostModel&) = default;
};

// Fraction of test examples whose argmax class matches the label; logit ties
// go to the lowest class index.
double evaluate_accuracy(const Architecture& arch, const ParamSetF& params, const Mask& mask,
                         const LabeledSet& test);

// 1-based first round whose accuracy reaches x; empty if never reached.
std::optional<int> nra(const std::vector<double>& accuracy_by_round, double x);

double cca(int nra_rounds, const CostModel& cost);
double cta(int nra_rounds, const CostModel& cost);

struct RunSummary {
  std::string method;
  CostModel cost;
  std::vector<RoundRecord> history;

  double final_accuracy() const { return history.empty() ? 0.0 : history.back().accuracy; }
  std::vector<double> accuracies() const;

  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

// CSV columns: method, P_R, comm_bytes_per_round, compute_s_per_round, then
// nra/cca/cta per threshold (nra_95, cca_95_bytes, cta_95_s for 0.95), then
// final_accuracy. The JSON document mirrors the summaries with the full
// per-round history.
void emit_report(const std::vector<RunSummary>& runs, const std::string& csv_path,
                 const std::string& json_path, const std::vector<double>& thresholds = {0.95});

std::vector<RunSummary> load_report_json(const std::string& path);

// Human-readable decimal units, three significant digits ("22.8 MB", "18.8 GB").
std::string format_bytes(double bytes);
// Seconds below one minute, minutes above ("881.7 s" -> "14.7 min").
std::string format_duration(double seconds);

}  // namespace hpfl
