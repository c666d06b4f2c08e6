#include "hpfl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "hpfl/nn.hpp"

namespace hpfl {

namespace {

using nlohmann::json;

// enough digits to round-trip a double exactly
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string pct_tag(double threshold) {
  // 0.95 -> "95", 0.9 -> "90", 0.995 -> "99.5"
  const double pct = threshold * 100.0;
  char buf[16];
  if (std::abs(pct - std::round(pct)) < 1e-9) {
    std::snprintf(buf, sizeof(buf), "%d", static_cast<int>(std::lround(pct)));
  } else {
    std::snprintf(buf, sizeof(buf), "%g", pct);
  }
  return buf;
}

}  // namespace

void CostModel::validate() const {
  if (bytes_per_param <= 0 || t_comp <= 0 || clients < 1 || p_r <= 0 || p_r > 1 ||
      param_count < 1) {
    throw std::invalid_argument("cost model: all fields must be positive (p_r in (0,1])");
  }
}

double evaluate_accuracy(const Architecture& arch, const ParamSetF& params, const Mask& mask,
                         const LabeledSet& test) {
  if (test.size() == 0) throw std::invalid_argument("evaluate_accuracy: empty test set");
  const int n = test.size();
  constexpr int kChunk = 1000;
  std::int64_t correct = 0;
  for (int start = 0; start < n; start += kChunk) {
    const int bs = std::min(kChunk, n - start);
    MatrixF x(bs, test.images.cols);
    std::copy_n(test.images.row(start), static_cast<std::size_t>(bs) * test.images.cols,
                x.data());
    const Activations<float> acts = forward(arch, params, mask, x);
    const MatrixF& out = acts.output();
    for (int i = 0; i < bs; ++i) {
      const float* row = out.row(i);
      int best = 0;
      for (int j = 1; j < out.cols; ++j) {
        if (row[j] > row[best]) best = j;  // ties keep the lowest index
      }
      if (best == test.labels[start + i]) ++correct;
    }
  }
  return static_cast<double>(correct) / n;
}

std::optional<int> nra(const std::vector<double>& accuracy_by_round, double x) {
  for (std::size_t i = 0; i < accuracy_by_round.size(); ++i) {
    if (accuracy_by_round[i] >= x) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

double cca(int nra_rounds, const CostModel& cost) {
  return cost.per_round_comm_bytes() * nra_rounds;
}

double cta(int nra_rounds, const CostModel& cost) {
  return cost.per_round_compute_s() * nra_rounds;
}

std::vector<double> RunSummary::accuracies() const {
  std::vector<double> a;
  a.reserve(history.size());
  for (const RoundRecord& r : history) a.push_back(r.accuracy);
  return a;
}

void emit_report(const std::vector<RunSummary>& runs, const std::string& csv_path,
                 const std::string& json_path, const std::vector<double>& thresholds) {
  if (runs.empty()) throw std::invalid_argument("emit_report: no runs");
  if (thresholds.empty()) throw std::invalid_argument("emit_report: no thresholds");

  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot write " + csv_path);
  csv << "method,P_R,comm_bytes_per_round,compute_s_per_round";
  for (double t : thresholds) {
    const std::string tag = pct_tag(t);
    csv << ",nra_" << tag << ",cca_" << tag << "_bytes,cta_" << tag << "_s";
  }
  csv << ",final_accuracy\n";

  json doc;
  doc["thresholds"] = thresholds;
  doc["runs"] = json::array();

  for (const RunSummary& run : runs) {
    const std::vector<double> acc = run.accuracies();
    csv << run.method << ',' << num(run.cost.p_r) << ','
        << num(run.cost.per_round_comm_bytes()) << ',' << num(run.cost.per_round_compute_s());

    json jr;
    jr["method"] = run.method;
    jr["p_r"] = run.cost.p_r;
    jr["bytes_per_param"] = run.cost.bytes_per_param;
    jr["t_comp"] = run.cost.t_comp;
    jr["clients"] = run.cost.clients;
    jr["param_count"] = run.cost.param_count;
    jr["comm_bytes_per_round"] = run.cost.per_round_comm_bytes();
    jr["compute_s_per_round"] = run.cost.per_round_compute_s();
    jr["final_accuracy"] = run.final_accuracy();
    jr["nra"] = json::object();
    jr["cca_bytes"] = json::object();
    jr["cta_s"] = json::object();
    for (double t : thresholds) {
      const std::optional<int> r = nra(acc, t);
      const std::string tag = pct_tag(t);
      if (r) {
        csv << ',' << *r << ',' << num(cca(*r, run.cost)) << ',' << num(cta(*r, run.cost));
        jr["nra"][tag] = *r;
        jr["cca_bytes"][tag] = cca(*r, run.cost);
        jr["cta_s"][tag] = cta(*r, run.cost);
      } else {
        csv << ",,,";
        jr["nra"][tag] = nullptr;
        jr["cca_bytes"][tag] = nullptr;
        jr["cta_s"][tag] = nullptr;
      }
    }
    csv << ',' << num(run.final_accuracy()) << '\n';

    json hist = json::array();
    for (const RoundRecord& rec : run.history) {
      hist.push_back({{"round", rec.round},
                      {"accuracy", rec.accuracy},
                      {"comm_bytes", rec.comm_bytes},
                      {"compute_s", rec.compute_s}});
    }
    jr["history"] = std::move(hist);
    doc["runs"].push_back(std::move(jr));
  }
  if (!csv.flush()) throw std::runtime_error("failed writing " + csv_path);

  std::ofstream jf(json_path);
  if (!jf) throw std::runtime_error("cannot write " + json_path);
  jf << doc.dump(2) << '\n';
  if (!jf.flush()) throw std::runtime_error("failed writing " + json_path);
}

std::vector<RunSummary> load_report_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open report: " + path);
  json doc;
  try {
    f >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed report " + path + ": " + e.what());
  }
  std::vector<RunSummary> runs;
  try {
    for (const json& jr : doc.at("runs")) {
      RunSummary run;
      run.method = jr.at("method").get<std::string>();
      run.cost.p_r = jr.at("p_r").get<double>();
      run.cost.bytes_per_param = jr.at("bytes_per_param").get<double>();
      run.cost.t_comp = jr.at("t_comp").get<double>();
      run.cost.clients = jr.at("clients").get<int>();
      run.cost.param_count = jr.at("param_count").get<std::int64_t>();
      for (const json& h : jr.at("history")) {
        RoundRecord rec;
        rec.round = h.at("round").get<int>();
        rec.accuracy = h.at("accuracy").get<double>();
        rec.comm_bytes = h.at("comm_bytes").get<double>();
        rec.compute_s = h.at("compute_s").get<double>();
        run.history.push_back(rec);
      }
      runs.push_back(std::move(run));
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed report " + path + ": " + e.what());
  }
  return runs;
}

std::string format_bytes(double bytes) {
  char buf[32];
  if (bytes >= 1e9) {
    std::snprintf(buf, sizeof(buf), "%.3g GB", bytes / 1e9);
  } else if (bytes >= 1e6) {
    std::snprintf(buf, sizeof(buf), "%.3g MB", bytes / 1e6);
  } else if (bytes >= 1e3) {
    std::snprintf(buf, sizeof(buf), "%.3g kB", bytes / 1e3);
  } else {
    std::snprintf(buf, sizeof(buf), "%.3g B", bytes);
  }
  return buf;
}

std::string format_duration(double seconds) {
  char buf[32];
  if (seconds >= 60.0) {
    std::snprintf(buf, sizeof(buf), "%.3g min", seconds / 60.0);
  } else {
    std::snprintf(buf, sizeof(buf), "%.3g s", seconds);
  }
  return buf;
}

}  // namespace hpfl
