#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uslearn/data.hpp"
#include "uslearn/model.hpp"
#include "uslearn/solver.hpp"
#include "uslearn/util.hpp"

namespace uslearn {

struct ExperimentConfig {
  Loss loss = Loss::truncated_quadratic();
  KernelKind kernel_kind = KernelKind::kGaussian;
  double fixed_gamma = 0.0;   // > 0 pins the bandwidth, otherwise the grid rules
  double fixed_lambda = 0.0;  // > 0 pins the radius, otherwise the grid rules
  std::vector<double> lambda_grid = default_lambda_grid();
  std::vector<double> gamma_scale_grid = default_gamma_scale_grid();
  int folds = 5;
  uint64_t seed = 1;
  double split_fraction = 0.0;  // 0: f and b share all training data
  double solver_tol = 1e-5;
  int threads = 1;

  static std::vector<double> default_lambda_grid() {
    std::vector<double> g;
    for (int k = -6; k <= 6; ++k) g.push_back(std::pow(2.0, k));
    return g;
  }

  static std::vector<double> default_gamma_scale_grid() {
    std::vector<double> g;
    for (int k = -3; k <= 3; ++k) g.push_back(std::pow(2.0, k));
    return g;
  }

  void validate() const {
    if (lambda_grid.empty() || gamma_scale_grid.empty()) {
      throw ValidationError("config: grids must be non-empty");
    }
    if (folds < 2) throw ValidationError("config: folds must be >= 2");
    if (split_fraction < 0.0 || split_fraction >= 1.0) {
      throw ValidationError("config: split fraction must be 0 (none) or in (0,1)");
    }
  }

  std::string hash() const {
    std::ostringstream os;
    os << loss.name() << '|' << (kernel_kind == KernelKind::kGaussian ? "g" : "l") << '|'
       << fixed_gamma << '|' << fixed_lambda << '|' << folds << '|' << seed << '|'
       << split_fraction << '|' << solver_tol << '|';
    for (double v : lambda_grid) os << v << ',';
    os << '|';
    for (double v : gamma_scale_grid) os << v << ',';
    uint64_t h = 1469598103934665603ULL;
    for (char c : os.str()) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
  }
};

struct ResultRecord {
  std::string config_hash;
  std::string tag;  // "cv", "final", "baseline"
  uint64_t seed = 0;
  int rep = 0;
  int fold = -1;
  double lambda = 0.0;
  double gamma = 0.0;
  double train_error = 0.0;
  double test_error = 0.0;
  double solver_gap = 0.0;
  bool cap_hit = false;
  double wall_time_s = 0.0;
};

// Reference scale of the regularization radius: unit for the normalized
// Gaussian kernel, inverse data scale for the linear one.
inline double lambda_scale(KernelKind kind, const MatrixXd& X) {
  if (kind == KernelKind::kGaussian) return 1.0;
  return 1.0 / std::sqrt(median_pairwise_sq_dist(X));
}

inline Kernel make_kernel(KernelKind kind, double gamma) {
  return kind == KernelKind::kGaussian ? Kernel::gaussian(gamma) : Kernel::linear();
}

struct TrainOutput {
  DecisionModel model;
  ResultRecord record;
};

// Step 1-3 of the learning pipeline on explicit (lambda, gamma): solve the
// minimum-distance dual, recover the normal, estimate the bias by exact
// 0-1 minimization.  split_fraction > 0 keeps bias data disjoint from the
// solver data; 0 reuses all of it.
inline TrainOutput run_train(const ExperimentConfig& config, const Dataset& data,
                             double lambda, double gamma) {
  const auto t0 = std::chrono::steady_clock::now();
  data.validate();
  Dataset t1 = data, t2 = data;
  if (config.split_fraction > 0.0) {
    auto [a, b] = split_dataset(data, config.split_fraction, config.seed);
    t1 = std::move(a);
    t2 = std::move(b);
  }
  DualProblem pb{config.loss, make_kernel(config.kernel_kind, gamma), t1.X, t1.y, lambda};
  const DualSolution dual = solve_dual(pb, config.solver_tol);
  DecisionModel model{recover_normal(pb, dual), 0.0};
  model.bias = estimate_bias(model.f, t2);

  ResultRecord rec;
  rec.config_hash = config.hash();
  rec.tag = "final";
  rec.seed = config.seed;
  rec.lambda = lambda;
  rec.gamma = gamma;
  rec.train_error = error_rate(model, data);
  rec.solver_gap = dual.diag.cert_gap;
  rec.cap_hit = dual.diag.cap_hit;
  rec.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(model), std::move(rec)};
}

struct CvOutput {
  double best_lambda = 0.0;
  double best_gamma = 0.0;
  double best_error = 1.0;
  std::vector<ResultRecord> table;
};

// Stratified k-fold selection of (lambda, gamma) by mean validation 0-1
// error; the folds are fixed once and reused by every grid cell; ties go
// to the smaller lambda, then the smaller gamma.
inline CvOutput run_cv(const ExperimentConfig& config, const Dataset& data) {
  config.validate();
  data.validate();
  const auto folds = kfold(data, config.folds, config.seed);
  const double lscale = lambda_scale(config.kernel_kind, data.X);
  const double med = median_pairwise_sq_dist(data.X);

  std::vector<double> lambdas;
  if (config.fixed_lambda > 0.0) {
    lambdas.push_back(config.fixed_lambda);
  } else {
    for (double g : config.lambda_grid) lambdas.push_back(g * lscale);
  }
  std::vector<double> gammas;
  if (config.kernel_kind == KernelKind::kLinear) {
    gammas.push_back(0.0);
  } else if (config.fixed_gamma > 0.0) {
    gammas.push_back(config.fixed_gamma);
  } else {
    for (double s : config.gamma_scale_grid) gammas.push_back(s / med);
  }

  struct Cell {
    double lambda, gamma, mean_error;
    std::vector<ResultRecord> records;
  };
  std::vector<Cell> cells(lambdas.size() * gammas.size());

  std::vector<Dataset> fold_train, fold_val;
  fold_train.reserve(folds.size());
  for (const auto& f : folds) {
    fold_train.push_back(subset(data, f.train));
    fold_val.push_back(subset(data, f.val));
  }

  parallel_for(
      static_cast<int>(cells.size()),
      [&](int cell_idx) {
        const double lambda = lambdas[cell_idx / gammas.size()];
        const double gamma = gammas[cell_idx % gammas.size()];
        Cell& cell = cells[cell_idx];
        cell.lambda = lambda;
        cell.gamma = gamma;
        double err_sum = 0.0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
          const auto t0 = std::chrono::steady_clock::now();
          DualProblem pb{config.loss, make_kernel(config.kernel_kind, gamma),
                         fold_train[f].X, fold_train[f].y, lambda};
          const DualSolution dual = solve_dual(pb, config.solver_tol);
          DecisionModel model{recover_normal(pb, dual), 0.0};
          model.bias = estimate_bias(model.f, fold_train[f]);
          const double err = error_rate(model, fold_val[f]);
          err_sum += err;
          ResultRecord rec;
          rec.config_hash = config.hash();
          rec.tag = "cv";
          rec.seed = config.seed;
          rec.fold = static_cast<int>(f);
          rec.lambda = lambda;
          rec.gamma = gamma;
          rec.train_error = error_rate(model, fold_train[f]);
          rec.test_error = err;
          rec.solver_gap = dual.diag.cert_gap;
          rec.cap_hit = dual.diag.cap_hit;
          rec.wall_time_s =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          cell.records.push_back(std::move(rec));
        }
        cell.mean_error = err_sum / static_cast<double>(folds.size());
      },
      config.threads);

  CvOutput out;
  out.best_error = kInf;
  for (const auto& cell : cells) {
    out.table.insert(out.table.end(), cell.records.begin(), cell.records.end());
    if (cell.mean_error < out.best_error - 1e-15) {
      out.best_error = cell.mean_error;
      out.best_lambda = cell.lambda;
      out.best_gamma = cell.gamma;
    }
  }
  return out;
}

// Linear ellipsoid-distance classifier, a stand-in for the minimax
// probability machine: per-class mean and covariance, normal from the
// touching point of the two ellipsoids grown at matched radii, bias at the
// common tangent plane.
struct EllipsoidBaseline {
  VectorXd w;
  double b = 0.0;

  static EllipsoidBaseline fit(const Dataset& data) {
    const auto pos = data.positives(), neg = data.negatives();
    if (pos.empty() || neg.empty()) {
      throw ValidationError("baseline: both labels required");
    }
    const int d = data.d();
    auto moments = [&](const std::vector<int>& idx) {
      VectorXd mean = VectorXd::Zero(d);
      for (int i : idx) mean += data.X.row(i).transpose();
      mean /= static_cast<double>(idx.size());
      MatrixXd cov = MatrixXd::Zero(d, d);
      for (int i : idx) {
        const VectorXd c = data.X.row(i).transpose() - mean;
        cov += c * c.transpose();
      }
      cov /= static_cast<double>(idx.size());
      cov += 1e-9 * MatrixXd::Identity(d, d);
      return std::make_pair(mean, cov);
    };
    const auto [mu_p, sig_p] = moments(pos);
    const auto [mu_n, sig_n] = moments(neg);
    const VectorXd c = mu_p - mu_n;
    if (c.norm() < 1e-12) throw ValidationError("baseline: class means coincide");

    // minimize sqrt(w'S_p w) + sqrt(w'S_n w) over w'c = 1 by projected
    // gradient in the affine parametrization w = w0 + N u
    const VectorXd w0 = c / c.squaredNorm();
    Eigen::FullPivLU<MatrixXd> lu(c.transpose());
    const MatrixXd N = lu.kernel();  // d x (d-1)
    auto objective = [&](const VectorXd& w) {
      return std::sqrt(w.dot(sig_p * w)) + std::sqrt(w.dot(sig_n * w));
    };
    VectorXd u = VectorXd::Zero(N.cols());
    double t = 1.0;
    for (int it = 0; it < 2000; ++it) {
      const VectorXd w = w0 + N * u;
      const double qp = std::sqrt(std::max(w.dot(sig_p * w), 1e-300));
      const double qn = std::sqrt(std::max(w.dot(sig_n * w), 1e-300));
      const VectorXd grad = N.transpose() * (sig_p * w / qp + sig_n * w / qn);
      if (grad.norm() <= 1e-13 * (1.0 + qp + qn)) break;
      const double base = qp + qn;
      VectorXd next;
      for (int bt = 0; bt < 60; ++bt) {
        next = u - t * grad;
        if (objective(w0 + N * next) <=
            base - 0.5 * t * grad.squaredNorm() + 1e-15 * (1.0 + base)) {
          break;
        }
        t *= 0.5;
      }
      if ((next - u).norm() <= 1e-15 * (1.0 + u.norm())) break;
      u = next;
      t *= 1.2;
    }
    EllipsoidBaseline model;
    model.w = w0 + N * u;
    const double denom = objective(model.w);
    const double radius = 1.0 / denom;  // touching radius
    model.b = -(model.w.dot(mu_p) - radius * std::sqrt(model.w.dot(sig_p * model.w)));
    return model;
  }

  double error_on(const Dataset& data) const {
    int errors = 0;
    for (int i = 0; i < data.m(); ++i) {
      const double v = w.dot(data.X.row(i).transpose()) + b;
      if (static_cast<double>(data.y[i]) * v <= 0.0) ++errors;
    }
    return static_cast<double>(errors) / static_cast<double>(data.m());
  }
};

struct SynthSummary {
  double mean_error = 0.0;
  double sd_error = 0.0;
  double baseline_mean = 0.0;
  double baseline_sd = 0.0;
  std::vector<ResultRecord> records;
};

// One benchmark instance: fresh train set (m = 400) and test set
// (m = 20000) per repetition, cross-validated (lambda, gamma) on the train
// set, test error recorded; optional ellipsoid baseline on the same data.
inline SynthSummary run_synth_experiment(double p_pos, double h, int reps,
                                         uint64_t base_seed, int threads,
                                         bool with_baseline = false,
                                         int test_size = 20000) {
  if (reps < 1) throw ValidationError("synth: reps must be >= 1");
  std::vector<std::vector<ResultRecord>> per_rep(reps);
  std::vector<double> errs(reps), base_errs(reps, 0.0);

  parallel_for(
      reps,
      [&](int rep) {
        SynthSpec train_spec;
        train_spec.p_pos = p_pos;
        train_spec.m = 400;
        train_spec.seed = base_seed + 1000ULL * static_cast<uint64_t>(rep);
        SynthSpec test_spec = train_spec;
        test_spec.m = test_size;
        test_spec.seed = train_spec.seed + 1;
        const Dataset train = generate_synth(train_spec);
        const Dataset test = generate_synth(test_spec);

        ExperimentConfig config;
        config.loss = h == 0.0 ? Loss::estimation_error(0.0, 1.0)
                               : Loss::estimation_error(h, 1.0);
        config.kernel_kind = KernelKind::kGaussian;
        config.seed = train_spec.seed;
        config.threads = 1;  // repetitions already run concurrently

        CvOutput cv = run_cv(config, train);
        TrainOutput fin = run_train(config, train, cv.best_lambda, cv.best_gamma);
        fin.record.rep = rep;
        fin.record.test_error = error_rate(fin.model, test);
        errs[rep] = fin.record.test_error;

        for (auto& r : cv.table) r.rep = rep;
        per_rep[rep] = std::move(cv.table);
        per_rep[rep].push_back(fin.record);

        if (with_baseline) {
          const auto t0 = std::chrono::steady_clock::now();
          const EllipsoidBaseline baseline = EllipsoidBaseline::fit(train);
          base_errs[rep] = baseline.error_on(test);
          ResultRecord rec;
          rec.config_hash = config.hash();
          rec.tag = "baseline";
          rec.seed = train_spec.seed;
          rec.rep = rep;
          rec.train_error = baseline.error_on(train);
          rec.test_error = base_errs[rep];
          rec.wall_time_s =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          per_rep[rep].push_back(std::move(rec));
        }
      },
      threads);

  SynthSummary out;
  for (int r = 0; r < reps; ++r) {
    out.records.insert(out.records.end(), per_rep[r].begin(), per_rep[r].end());
  }
  auto mean_sd = [&](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0;
    return std::make_pair(mean, std::sqrt(var));
  };
  std::tie(out.mean_error, out.sd_error) = mean_sd(errs);
  if (with_baseline) std::tie(out.baseline_mean, out.baseline_sd) = mean_sd(base_errs);
  return out;
}

// results.csv + results.jsonl + summary.csv (per-tag mean/sd of test error).
inline void emit_results(const std::vector<ResultRecord>& records, const std::string& dir) {
  auto open = [&](const std::string& name) {
    std::FILE* f = std::fopen((dir + "/" + name).c_str(), "w");
    if (!f) throw ValidationError("cannot write " + dir + "/" + name);
    return f;
  };

  std::vector<ResultRecord> sorted = records;
  std::stable_sort(sorted.begin(), sorted.end(), [](const ResultRecord& a, const ResultRecord& b) {
    return std::tie(a.tag, a.rep, a.fold, a.lambda, a.gamma) <
           std::tie(b.tag, b.rep, b.fold, b.lambda, b.gamma);
  });

  std::FILE* csv = open("results.csv");
  std::fprintf(csv,
               "config,tag,seed,rep,fold,lambda,gamma,train_error,test_error,"
               "solver_gap,cap_hit,wall_time_s\n");
  for (const auto& r : sorted) {
    std::fprintf(csv, "%s,%s,%llu,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.6f\n",
                 r.config_hash.c_str(), r.tag.c_str(),
                 static_cast<unsigned long long>(r.seed), r.rep, r.fold, r.lambda, r.gamma,
                 r.train_error, r.test_error, r.solver_gap, r.cap_hit ? 1 : 0,
                 r.wall_time_s);
  }
  std::fclose(csv);

  std::FILE* jsonl = open("results.jsonl");
  for (const auto& r : sorted) {
    nlohmann::json j{{"config", r.config_hash}, {"tag", r.tag},          {"seed", r.seed},
                     {"rep", r.rep},            {"fold", r.fold},        {"lambda", r.lambda},
                     {"gamma", r.gamma},        {"train_error", r.train_error},
                     {"test_error", r.test_error}, {"solver_gap", r.solver_gap},
                     {"cap_hit", r.cap_hit},    {"wall_time_s", r.wall_time_s}};
    std::fprintf(jsonl, "%s\n", j.dump().c_str());
  }
  std::fclose(jsonl);

  std::FILE* summary = open("summary.csv");
  std::fprintf(summary, "tag,count,mean_test_error,sd_test_error\n");
  std::vector<std::string> tags;
  for (const auto& r : sorted) {
    if (std::find(tags.begin(), tags.end(), r.tag) == tags.end()) tags.push_back(r.tag);
  }
  std::sort(tags.begin(), tags.end());
  for (const auto& tag : tags) {
    double sum = 0.0, sum2 = 0.0;
    int n = 0;
    for (const auto& r : sorted) {
      if (r.tag != tag) continue;
      sum += r.test_error;
      sum2 += r.test_error * r.test_error;
      ++n;
    }
    const double mean = n > 0 ? sum / n : 0.0;
    const double var = n > 1 ? (sum2 - n * mean * mean) / (n - 1) : 0.0;
    std::fprintf(summary, "%s,%d,%.17g,%.17g\n", tag.c_str(), n, mean,
                 std::sqrt(std::max(var, 0.0)));
  }
  std::fclose(summary);
}

inline std::vector<ResultRecord> parse_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<ResultRecord> out;
  std::string line;
  std::getline(in, line);  // header
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line, ',');
    if (fields.size() != 12) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected 12 fields");
    }
    ResultRecord r;
    r.config_hash = fields[0];
    r.tag = fields[1];
    r.seed = static_cast<uint64_t>(std::stoull(fields[2]));
    r.rep = std::stoi(fields[3]);
    r.fold = std::stoi(fields[4]);
    r.lambda = detail::parse_double(fields[5], line_no);
    r.gamma = detail::parse_double(fields[6], line_no);
    r.train_error = detail::parse_double(fields[7], line_no);
    r.test_error = detail::parse_double(fields[8], line_no);
    r.solver_gap = detail::parse_double(fields[9], line_no);
    r.cap_hit = fields[10] == "1";
    r.wall_time_s = detail::parse_double(fields[11], line_no);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace uslearn
