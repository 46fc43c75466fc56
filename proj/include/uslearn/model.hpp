#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uslearn/data.hpp"
#include "uslearn/kernel.hpp"
#include "uslearn/util.hpp"

namespace uslearn {

// Final classifier: sign(f(x) + b), with sign(0) mapped to +1.
struct DecisionModel {
  KernelExpansion f;
  double bias = 0.0;

  int predict(const VectorXd& x) const { return f.eval(x) + bias >= 0.0 ? 1 : -1; }

  VectorXi predict_batch(const MatrixXd& X) const {
    const VectorXd vals = f.eval_batch(X);
    VectorXi out(vals.size());
    for (Eigen::Index i = 0; i < vals.size(); ++i) out[i] = vals[i] + bias >= 0.0 ? 1 : -1;
    return out;
  }
};

// Exact 1-D minimizer of the empirical 0-1 error over the bias.  Sorts the
// thresholds -f(x_i) and scans all m+1 open intervals; the error count is
// constant inside each.  Ties go to the midpoint of the widest bounded
// optimal interval; an optimal unbounded interval wins only when no bounded
// one matches it, and then its finite endpoint +-1 is returned.
inline double estimate_bias(const VectorXd& fvals, const VectorXi& y) {
  const int m = static_cast<int>(fvals.size());
  if (m == 0) throw ValidationError("estimate_bias: empty data");
  if (y.size() != m) throw ValidationError("estimate_bias: size mismatch");

  std::vector<int> order(m);
  for (int i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return -fvals[a] < -fvals[b]; });

  // For b in the k-th interval, points with threshold below b predict +1,
  // the rest predict -1.  errors(k) = #neg in first k + #pos in the rest.
  // Zero-width intervals (tied thresholds) contain no b and do not count.
  std::vector<int> errors(m + 1);
  int neg_prefix = 0;
  int pos_total = 0;
  for (int i = 0; i < m; ++i) pos_total += y[i] == 1 ? 1 : 0;
  int pos_suffix = pos_total;
  errors[0] = pos_suffix;
  for (int k = 1; k <= m; ++k) {
    const int i = order[k - 1];
    neg_prefix += y[i] == -1 ? 1 : 0;
    pos_suffix -= y[i] == 1 ? 1 : 0;
    errors[k] = neg_prefix + pos_suffix;
  }
  int best = std::min(errors[0], errors[m]);
  for (int k = 1; k < m; ++k) {
    if (-fvals[order[k]] > -fvals[order[k - 1]]) best = std::min(best, errors[k]);
  }

  double best_width = -1.0, best_mid = 0.0;
  for (int k = 1; k < m; ++k) {
    if (errors[k] != best) continue;
    const double lo = -fvals[order[k - 1]];
    const double hi = -fvals[order[k]];
    if (hi - lo > best_width) {
      best_width = hi - lo;
      best_mid = 0.5 * (lo + hi);
    }
  }
  if (best_width > 0.0) return best_mid;
  // only unbounded intervals attain the optimum
  if (errors[m] == best) return -fvals[order[m - 1]] + 1.0;
  return -fvals[order[0]] - 1.0;
}

inline double estimate_bias(const KernelExpansion& f, const Dataset& data) {
  if (data.m() == 0) throw ValidationError("estimate_bias: empty data");
  return estimate_bias(f.eval_batch(data.X), data.y);
}

// Empirical 0-1 error; the boundary y (f(x)+b) = 0 counts as an error.
inline double error_rate(const DecisionModel& model, const Dataset& data) {
  if (data.m() == 0) throw ValidationError("error_rate: empty data");
  const VectorXd vals = model.f.eval_batch(data.X);
  int errors = 0;
  for (int i = 0; i < data.m(); ++i) {
    if (static_cast<double>(data.y[i]) * (vals[i] + model.bias) <= 0.0) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(data.m());
}

inline nlohmann::json model_to_json(const DecisionModel& model) {
  nlohmann::json j;
  j["kernel"] = model.f.kernel.name();
  j["bias"] = model.bias;
  j["coefficients"] = std::vector<double>(
      model.f.coefficients.data(), model.f.coefficients.data() + model.f.coefficients.size());
  std::vector<std::vector<double>> anchors;
  for (Eigen::Index i = 0; i < model.f.anchors.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(model.f.anchors.cols()));
    for (Eigen::Index k = 0; k < model.f.anchors.cols(); ++k) {
      row[static_cast<std::size_t>(k)] = model.f.anchors(i, k);
    }
    anchors.push_back(std::move(row));
  }
  j["anchors"] = anchors;
  return j;
}

inline DecisionModel model_from_json(const nlohmann::json& j) {
  DecisionModel model;
  model.f.kernel = Kernel::parse(j.at("kernel").get<std::string>());
  model.bias = j.at("bias").get<double>();
  const auto coeffs = j.at("coefficients").get<std::vector<double>>();
  const auto anchors = j.at("anchors").get<std::vector<std::vector<double>>>();
  if (anchors.size() != coeffs.size()) {
    throw ValidationError("model file: anchors/coefficients size mismatch");
  }
  model.f.coefficients = Eigen::Map<const VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
  if (!anchors.empty()) {
    model.f.anchors.resize(static_cast<Eigen::Index>(anchors.size()),
                           static_cast<Eigen::Index>(anchors.front().size()));
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      if (anchors[i].size() != anchors.front().size()) {
        throw ValidationError("model file: ragged anchor rows");
      }
      for (std::size_t k = 0; k < anchors[i].size(); ++k) {
        model.f.anchors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = anchors[i][k];
      }
    }
  } else {
    model.f.anchors.resize(0, 0);
  }
  return model;
}

inline void save_model(const DecisionModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << model_to_json(model).dump(2) << "\n";
}

inline DecisionModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": bad model file: " + e.what());
  }
  return model_from_json(j);
}

}  // namespace uslearn
