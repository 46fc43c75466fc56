// Command-line driver: train / predict / eval / cv / synth / diagnose /
// oracle.  Exit codes: 0 success, 2 validation error, 3 solver
// non-convergence.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uslearn/conjugate_oracle.hpp"
#include "uslearn/diagnostics.hpp"
#include "uslearn/experiment.hpp"
#include "uslearn/model.hpp"
#include "uslearn/uncertainty.hpp"

using namespace uslearn;
using nlohmann::json;

namespace {

struct DataArgs {
  std::string path;
  std::string format = "csv";
  int label_col = -1;
  std::string label_name;
  std::string label_map = "pm1";
};

void add_data_args(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--data", args.path, "dataset file")->required();
  cmd->add_option("--format", args.format, "csv or libsvm")
      ->check(CLI::IsMember({"csv", "libsvm"}));
  cmd->add_option("--label-col", args.label_col, "label column index (csv; default last)");
  cmd->add_option("--label-name", args.label_name, "label column name (csv with header)");
  cmd->add_option("--label-map", args.label_map, "raw label convention")
      ->check(CLI::IsMember({"pm1", "01", "12"}));
}

Dataset load_from_args(const DataArgs& args) {
  CsvOptions opts;
  opts.label_column = args.label_col;
  opts.label_name = args.label_name;
  opts.label_map = args.label_map == "01"   ? LabelMap::kZeroOne
                   : args.label_map == "12" ? LabelMap::kOneTwo
                                            : LabelMap::kStrict;
  return load_dataset(args.path, args.format == "csv" ? DataFormat::kCsv : DataFormat::kLibsvm,
                      opts);
}

VectorXd json_vector(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

MatrixXd json_matrix(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw ValidationError("config: empty matrix");
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ValidationError("config: ragged matrix");
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return out;
}

// Uncertainty-set config: {"set": "tq"|"hinge"|"exp"|"esterr"|"levelset",
// "params": {...}, "calibration": {...}}.  The level-set form is revised to
// its additive loss using calibration parameters (inline mu/matrix or a
// calibration dataset) and the training label counts.
Loss loss_from_config(const json& cfg, const Dataset& train) {
  const std::string set = cfg.at("set").get<std::string>();
  const json params = cfg.value("params", json::object());
  if (set == "tq") return Loss::truncated_quadratic();
  if (set == "exp") return Loss::exponential();
  if (set == "hinge") return Loss::hinge(params.at("nu").get<double>());
  if (set == "esterr") {
    return Loss::estimation_error(params.at("h").get<double>(), params.at("w").get<double>());
  }
  if (set != "levelset") throw ValidationError("config: unknown set '" + set + "'");

  const json cal = cfg.at("calibration");
  const double r = cal.value("r", 0.0);
  LevelSetRep rep_p{VectorXd(), MatrixXd(), 0.0}, rep_n{VectorXd(), MatrixXd(), 0.0};
  if (cal.contains("data")) {
    const Dataset ds = load_csv(cal.at("data").get<std::string>());
    auto fit = [&](const std::vector<int>& idx) {
      VectorXd mean = VectorXd::Zero(ds.d());
      for (int i : idx) mean += ds.X.row(i).transpose();
      mean /= static_cast<double>(idx.size());
      MatrixXd cov = MatrixXd::Zero(ds.d(), ds.d());
      for (int i : idx) {
        const VectorXd c = ds.X.row(i).transpose() - mean;
        cov += c * c.transpose();
      }
      cov /= static_cast<double>(idx.size());
      Eigen::FullPivLU<MatrixXd> lu(cov);
      if (!lu.isInvertible()) throw ValidationError("calibration: singular covariance");
      return LevelSetRep::make(mean, lu.inverse(), r);
    };
    rep_p = fit(ds.positives());
    rep_n = fit(ds.negatives());
  } else {
    auto shape = [&](const char* inv_key, const char* cov_key) {
      if (cal.contains(inv_key)) return json_matrix(cal.at(inv_key));
      const MatrixXd cov = json_matrix(cal.at(cov_key));
      Eigen::FullPivLU<MatrixXd> lu(cov);
      if (!lu.isInvertible()) throw ValidationError("calibration: singular covariance");
      return MatrixXd(lu.inverse());
    };
    rep_p = LevelSetRep::make(json_vector(cal.at("mu_p")), shape("inv_sigma_p", "sigma_p"), r);
    rep_n = LevelSetRep::make(json_vector(cal.at("mu_n")), shape("inv_sigma_n", "sigma_n"), r);
  }
  const int m_p = static_cast<int>(train.positives().size());
  const int m_n = static_cast<int>(train.negatives().size());
  const RevisedConjugate revised = revise_levelset(rep_p, rep_n, m_p, m_n, m_p + m_n);
  const auto loss = revised.as_loss();
  if (!loss.has_value()) {
    throw ValidationError(
        "config: revised level set has no scale-free loss form (shift the data so one "
        "class mean vanishes)");
  }
  std::fprintf(stderr, "revised level-set config to loss %s\n", loss->name().c_str());
  return *loss;
}

struct LoadedModel {
  DecisionModel model;
  bool scaled = false;
  VectorXd means, scales;
};

LoadedModel load_model_cli(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": bad model file: " + e.what());
  }
  LoadedModel lm;
  if (j.contains("feature_means")) {
    lm.scaled = true;
    lm.means = json_vector(j.at("feature_means"));
    lm.scales = json_vector(j.at("feature_scales"));
  }
  lm.model = model_from_json(j);
  return lm;
}

void apply_scaling(Dataset& ds, const LoadedModel& lm) {
  if (!lm.scaled) return;
  if (ds.d() != lm.means.size()) throw ValidationError("model scaler dimension mismatch");
  ds.X.rowwise() -= lm.means.transpose();
  ds.X.array().rowwise() /= lm.scales.transpose().array();
}

std::vector<double> parse_grid(const std::string& text) {
  // "lo:hi:n" geometric if lo>0 else linear, or comma-separated values
  std::vector<double> out;
  if (text.find(':') == std::string::npos) {
    for (const auto& f : detail::split_fields(text, ',')) out.push_back(std::stod(f));
    return out;
  }
  const auto parts = detail::split_fields(text, ':');
  if (parts.size() != 3) throw ValidationError("grid must be lo:hi:n or v1,v2,...");
  const double lo = std::stod(parts[0]), hi = std::stod(parts[1]);
  const int n = std::stoi(parts[2]);
  if (n < 1) throw ValidationError("grid: n must be >= 1");
  for (int i = 0; i < n; ++i) {
    out.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1.0));
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"kernel max-margin learning over parametrized uncertainty sets"};
  app.require_subcommand(1);

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "fit a decision model");
  DataArgs train_data;
  add_data_args(train_cmd, train_data);
  std::string loss_spec = "tq", kernel_name = "gaussian", out_path = "model.json";
  std::string split_arg = "none", config_path;
  double gamma = 0.0, lambda = 0.0, tol = 1e-5;
  uint64_t seed = 1;
  int threads = default_threads();
  train_cmd->add_option("--loss", loss_spec, "hinge:nu=..., tq, exp, esterr:h=...,w=...");
  train_cmd->add_option("--kernel", kernel_name, "linear or gaussian")
      ->check(CLI::IsMember({"linear", "gaussian"}));
  train_cmd->add_option("--gamma", gamma, "gaussian bandwidth (default: CV)");
  train_cmd->add_option("--lambda", lambda, "norm-ball radius (default: CV)");
  train_cmd->add_option("--split", split_arg, "bias split fraction in (0,1), or 'none'");
  train_cmd->add_option("--seed", seed, "random seed");
  train_cmd->add_option("--tol", tol, "solver tolerance");
  train_cmd->add_option("--threads", threads, "CV worker threads");
  train_cmd->add_option("--config", config_path, "uncertainty-set config JSON");
  train_cmd->add_option("--out", out_path, "model output path");
  bool standardize = false;
  train_cmd->add_flag("--standardize", standardize,
                      "zero-mean unit-variance feature scaling (stored in the model)");

  // ---- predict / eval ----
  auto* predict_cmd = app.add_subcommand("predict", "predict labels with a saved model");
  DataArgs predict_data;
  add_data_args(predict_cmd, predict_data);
  std::string model_path, pred_out = "-";
  predict_cmd->add_option("--model", model_path, "model JSON")->required();
  predict_cmd->add_option("--out", pred_out, "output path ('-' = stdout)");

  auto* eval_cmd = app.add_subcommand("eval", "0-1 error of a saved model on a dataset");
  DataArgs eval_data;
  add_data_args(eval_cmd, eval_data);
  std::string eval_model;
  eval_cmd->add_option("--model", eval_model, "model JSON")->required();

  // ---- cv ----
  auto* cv_cmd = app.add_subcommand("cv", "cross-validate (lambda, gamma)");
  DataArgs cv_data;
  add_data_args(cv_cmd, cv_data);
  std::string cv_loss = "tq", cv_kernel = "gaussian", cv_out_dir, cv_config;
  std::string lambda_grid_arg, gamma_grid_arg;
  int folds = 5;
  uint64_t cv_seed = 1;
  int cv_threads = default_threads();
  double cv_tol = 1e-5;
  cv_cmd->add_option("--loss", cv_loss, "loss spec");
  cv_cmd->add_option("--kernel", cv_kernel, "linear or gaussian")
      ->check(CLI::IsMember({"linear", "gaussian"}));
  cv_cmd->add_option("--folds", folds, "number of folds");
  cv_cmd->add_option("--seed", cv_seed, "fold seed");
  cv_cmd->add_option("--lambda-grid", lambda_grid_arg, "lo:hi:n or comma list");
  cv_cmd->add_option("--gamma-grid", gamma_grid_arg, "bandwidth scale grid");
  cv_cmd->add_option("--threads", cv_threads, "worker threads");
  cv_cmd->add_option("--tol", cv_tol, "solver tolerance");
  cv_cmd->add_option("--config", cv_config, "uncertainty-set config JSON");
  cv_cmd->add_option("--out-dir", cv_out_dir, "directory for the CV table");

  // ---- synth ----
  auto* synth_cmd = app.add_subcommand("synth", "two-Gaussian benchmark run");
  double p_pos = 0.5, synth_h = 0.0;
  int reps = 20, test_size = 20000, synth_threads = default_threads();
  uint64_t synth_seed = 1;
  bool with_baseline = false;
  std::string synth_out_dir;
  synth_cmd->add_option("--p-pos", p_pos, "P(y = +1)");
  synth_cmd->add_option("--esterr-h", synth_h, "estimation-error plateau parameter (0 or 1)");
  synth_cmd->add_option("--reps", reps, "repetitions");
  synth_cmd->add_option("--test-size", test_size, "test samples per repetition");
  synth_cmd->add_option("--seed", synth_seed, "base seed");
  synth_cmd->add_option("--threads", synth_threads, "worker threads");
  synth_cmd->add_flag("--baseline", with_baseline, "also run the ellipsoid baseline");
  synth_cmd->add_option("--out-dir", synth_out_dir, "directory for result files");

  // ---- diagnose ----
  auto* diag_cmd = app.add_subcommand("diagnose", "calibration diagnostics");
  auto* psi_cmd = diag_cmd->add_subcommand("psi", "psi(theta, rho) table");
  std::string psi_loss = "tq", theta_grid_arg = "0:0.95:20", rho_grid_arg = "-0.5:10:20";
  std::string psi_out = "-";
  psi_cmd->add_option("--loss", psi_loss, "loss spec (hinge excluded)");
  psi_cmd->add_option("--theta-grid", theta_grid_arg, "lo:hi:n");
  psi_cmd->add_option("--rho-grid", rho_grid_arg, "lo:hi:n");
  psi_cmd->add_option("--out", psi_out, "CSV path ('-' = stdout)");

  // ---- oracle ----
  auto* oracle_cmd = app.add_subcommand("oracle", "numeric transforms");
  auto* conj_cmd = oracle_cmd->add_subcommand("conjugate", "numeric vs closed-form conjugate");
  std::string oracle_loss = "tq", oracle_grid;
  double alpha = 0.0;
  conj_cmd->add_option("--loss", oracle_loss, "loss spec");
  conj_cmd->add_option("--alpha", alpha, "conjugate argument")->required();
  conj_cmd->add_option("--grid", oracle_grid, "search grid lo:hi:n");

  CLI11_PARSE(app, argc, argv);

  if (*train_cmd) {
    Dataset data = load_from_args(train_data);
    VectorXd feat_means, feat_scales;
    if (standardize) {
      feat_means = data.X.colwise().mean().transpose();
      feat_scales.resize(data.d());
      for (int j = 0; j < data.d(); ++j) {
        const double var =
            (data.X.col(j).array() - feat_means[j]).square().sum() / data.m();
        feat_scales[j] = var > 0.0 ? std::sqrt(var) : 1.0;
      }
      data.X.rowwise() -= feat_means.transpose();
      data.X.array().rowwise() /= feat_scales.transpose().array();
    }
    ExperimentConfig config;
    config.kernel_kind = kernel_name == "linear" ? KernelKind::kLinear : KernelKind::kGaussian;
    config.seed = seed;
    config.solver_tol = tol;
    config.threads = threads;
    config.split_fraction = split_arg == "none" ? 0.0 : std::stod(split_arg);
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ValidationError("cannot open " + config_path);
      json cfg;
      in >> cfg;
      config.loss = loss_from_config(cfg, data);
    } else {
      config.loss = Loss::parse(loss_spec);
    }
    double use_lambda = lambda, use_gamma = gamma;
    if (use_lambda <= 0.0 || (config.kernel_kind == KernelKind::kGaussian && use_gamma <= 0.0)) {
      config.fixed_lambda = use_lambda;
      config.fixed_gamma = use_gamma;
      const CvOutput cv = run_cv(config, data);
      use_lambda = cv.best_lambda;
      use_gamma = cv.best_gamma;
      std::printf("cv selected lambda=%.6g gamma=%.6g (validation error %.4f)\n", use_lambda,
                  use_gamma, cv.best_error);
    }
    const TrainOutput out = run_train(config, data, use_lambda, use_gamma);
    json model_json = model_to_json(out.model);
    if (standardize) {
      model_json["feature_means"] =
          std::vector<double>(feat_means.data(), feat_means.data() + feat_means.size());
      model_json["feature_scales"] =
          std::vector<double>(feat_scales.data(), feat_scales.data() + feat_scales.size());
    }
    {
      std::ofstream model_out(out_path);
      if (!model_out) throw ValidationError("cannot write " + out_path);
      model_out << model_json.dump(2) << "\n";
    }
    std::printf("trained %s kernel=%s lambda=%.6g gamma=%.6g train_error=%.4f\n",
                config.loss.name().c_str(), kernel_name.c_str(), use_lambda, use_gamma,
                out.record.train_error);
    if (out.record.cap_hit) {
      std::fprintf(stderr,
                   "warning: solver hit its iteration cap (certified gap %.3e)\n",
                   out.record.solver_gap);
      throw SolverError("train: solver did not converge to tolerance");
    }
    std::printf("model written to %s\n", out_path.c_str());
    return 0;
  }

  if (*predict_cmd) {
    const LoadedModel lm = load_model_cli(model_path);
    Dataset data = load_from_args(predict_data);
    apply_scaling(data, lm);
    const VectorXi preds = lm.model.predict_batch(data.X);
    std::FILE* out = pred_out == "-" ? stdout : std::fopen(pred_out.c_str(), "w");
    if (!out) throw ValidationError("cannot write " + pred_out);
    const VectorXd vals = lm.model.f.eval_batch(data.X);
    std::fprintf(out, "prediction,decision_value\n");
    for (int i = 0; i < data.m(); ++i) {
      std::fprintf(out, "%d,%.17g\n", preds[i], vals[i] + lm.model.bias);
    }
    if (out != stdout) std::fclose(out);
    return 0;
  }

  if (*eval_cmd) {
    const LoadedModel lm = load_model_cli(eval_model);
    Dataset data = load_from_args(eval_data);
    apply_scaling(data, lm);
    std::printf("error_rate=%.6f\n", error_rate(lm.model, data));
    return 0;
  }

  if (*cv_cmd) {
    const Dataset data = load_from_args(cv_data);
    ExperimentConfig config;
    config.kernel_kind = cv_kernel == "linear" ? KernelKind::kLinear : KernelKind::kGaussian;
    config.folds = folds;
    config.seed = cv_seed;
    config.solver_tol = cv_tol;
    config.threads = cv_threads;
    if (!cv_config.empty()) {
      std::ifstream in(cv_config);
      if (!in) throw ValidationError("cannot open " + cv_config);
      json cfg;
      in >> cfg;
      config.loss = loss_from_config(cfg, data);
    } else {
      config.loss = Loss::parse(cv_loss);
    }
    if (!lambda_grid_arg.empty()) config.lambda_grid = parse_grid(lambda_grid_arg);
    if (!gamma_grid_arg.empty()) config.gamma_scale_grid = parse_grid(gamma_grid_arg);
    const CvOutput cv = run_cv(config, data);
    std::printf("best lambda=%.6g gamma=%.6g mean_validation_error=%.4f\n", cv.best_lambda,
                cv.best_gamma, cv.best_error);
    if (!cv_out_dir.empty()) {
      std::filesystem::create_directories(cv_out_dir);
      emit_results(cv.table, cv_out_dir);
      std::printf("cv table written to %s\n", cv_out_dir.c_str());
    }
    return 0;
  }

  if (*synth_cmd) {
    if (reps < 10) {
      std::fprintf(stderr, "warning: summary over fewer than 10 repetitions is noisy\n");
    }
    const SynthSummary s = run_synth_experiment(p_pos, synth_h, reps, synth_seed,
                                                synth_threads, with_baseline, test_size);
    std::printf("method: mean test error %.2f%% +- %.2f%% (%d reps)\n", 100.0 * s.mean_error,
                100.0 * s.sd_error, reps);
    if (with_baseline) {
      std::printf("ellipsoid baseline: mean test error %.2f%% +- %.2f%%\n",
                  100.0 * s.baseline_mean, 100.0 * s.baseline_sd);
    }
    if (!synth_out_dir.empty()) {
      std::filesystem::create_directories(synth_out_dir);
      emit_results(s.records, synth_out_dir);
      std::printf("records written to %s\n", synth_out_dir.c_str());
    }
    return 0;
  }

  if (*psi_cmd) {
    const Loss loss = Loss::parse(psi_loss);
    const auto thetas = parse_grid(theta_grid_arg);
    const auto rhos = parse_grid(rho_grid_arg);
    std::FILE* out = psi_out == "-" ? stdout : std::fopen(psi_out.c_str(), "w");
    if (!out) throw ValidationError("cannot write " + psi_out);
    std::fprintf(out, "theta,rho,psi\n");
    for (double theta : thetas) {
      for (double rho : rhos) {
        std::fprintf(out, "%.17g,%.17g,%.17g\n", theta, rho, psi(loss, theta, rho));
      }
    }
    if (out != stdout) std::fclose(out);
    const auto violations = psi_monotone_check(loss, thetas, rhos);
    std::fprintf(stderr, "monotonicity violations: %zu\n", violations.size());
    return violations.empty() ? 0 : 1;
  }

  if (*conj_cmd) {
    const Loss loss = Loss::parse(oracle_loss);
    const double closed = loss.conjugate(alpha);
    GridSpec grid = default_grid(loss);
    if (!oracle_grid.empty()) {
      const auto parts = detail::split_fields(oracle_grid, ':');
      if (parts.size() != 3) throw ValidationError("--grid must be lo:hi:n");
      grid = GridSpec(std::stod(parts[0]), std::stod(parts[1]), std::stoi(parts[2]));
    }
    std::printf("closed_form=%.12g\n", closed);
    try {
      const double numeric =
          numeric_conjugate([&](double z) { return loss.eval(z); }, grid, alpha);
      std::printf("numeric=%.12g abs_diff=%.3e\n", numeric,
                  is_finite(closed) ? std::abs(numeric - closed) : kInf);
    } catch (const BoundaryAttainmentError& e) {
      std::printf("numeric=boundary-attainment (%s)\n", e.what());
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 3;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
