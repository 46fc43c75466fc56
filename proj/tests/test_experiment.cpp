#include <catch2/catch_amalgamated.hpp>
#include <filesystem>

#include "uslearn/experiment.hpp"

using namespace uslearn;

namespace {

Dataset separable_instance(int m, uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.X.resize(m, 2);
  ds.y.resize(m);
  for (int i = 0; i < m; ++i) {
    const bool pos = i % 2 == 0;
    ds.X(i, 0) = (pos ? 3.0 : -3.0) + rng.gaussian();
    ds.X(i, 1) = rng.gaussian();
    ds.y[i] = pos ? 1 : -1;
  }
  return ds;
}

}  // namespace

TEST_CASE("run_train on the singleton toy bisects the segment") {
  Dataset ds;
  ds.X.resize(2, 2);
  ds.X << 0, 0, 2, 0;
  ds.y.resize(2);
  ds.y << 1, -1;

  ExperimentConfig config;
  config.loss = Loss::truncated_quadratic();
  config.kernel_kind = KernelKind::kLinear;
  config.solver_tol = 1e-9;
  const TrainOutput out = run_train(config, ds, 1.0, 0.0);

  VectorXd mid(2), off(2);
  mid << 1.0, 0.0;
  // bias lands mid-segment: the decision value vanishes at x1 = 1
  CHECK(std::abs(out.model.f.eval(mid) + out.model.bias) < 1e-6);
  off << 0.5, 0.0;
  CHECK(out.model.predict(off) == 1);
  off << 1.5, 0.0;
  CHECK(out.model.predict(off) == -1);
  CHECK(out.record.train_error == 0.0);
}

TEST_CASE("run_train is deterministic given config and seed") {
  const Dataset ds = separable_instance(40, 3);
  ExperimentConfig config;
  config.loss = Loss::estimation_error(0.0, 1.0);
  config.seed = 11;
  const TrainOutput a = run_train(config, ds, 2.0, 0.5);
  const TrainOutput b = run_train(config, ds, 2.0, 0.5);
  CHECK(a.model.bias == b.model.bias);
  CHECK(a.model.f.coefficients == b.model.f.coefficients);
  CHECK(a.record.train_error == b.record.train_error);
  CHECK(a.record.solver_gap == b.record.solver_gap);
  CHECK(a.record.config_hash == b.record.config_hash);
}

TEST_CASE("separable instance reaches zero training error with CV-chosen lambda") {
  const Dataset ds = separable_instance(100, 21);
  ExperimentConfig config;
  config.loss = Loss::truncated_quadratic();
  config.kernel_kind = KernelKind::kGaussian;
  config.seed = 5;
  config.threads = 2;
  const CvOutput cv = run_cv(config, ds);
  const TrainOutput out = run_train(config, ds, cv.best_lambda, cv.best_gamma);
  CHECK(out.record.train_error == 0.0);
  CHECK(cv.best_error <= 0.05);
}

TEST_CASE("run_cv with a one-point grid returns that point") {
  const Dataset ds = separable_instance(30, 8);
  ExperimentConfig config;
  config.loss = Loss::truncated_quadratic();
  config.kernel_kind = KernelKind::kGaussian;
  config.lambda_grid = {0.7};
  config.gamma_scale_grid = {1.0};
  const CvOutput cv = run_cv(config, ds);
  CHECK(cv.best_lambda == 0.7);
  CHECK(cv.best_gamma == 1.0 / median_pairwise_sq_dist(ds.X));
  CHECK(cv.table.size() == 5);
}

TEST_CASE("run_cv is deterministic and reuses the same folds across cells") {
  const Dataset ds = separable_instance(60, 13);
  ExperimentConfig config;
  config.loss = Loss::truncated_quadratic();
  config.lambda_grid = {0.5, 2.0};
  config.gamma_scale_grid = {1.0};
  config.threads = 2;
  const CvOutput a = run_cv(config, ds);
  const CvOutput b = run_cv(config, ds);
  REQUIRE(a.table.size() == b.table.size());
  for (std::size_t i = 0; i < a.table.size(); ++i) {
    CHECK(a.table[i].test_error == b.table[i].test_error);
    CHECK(a.table[i].fold == b.table[i].fold);
  }
  // every cell contributes one record per fold
  for (int fold = 0; fold < 5; ++fold) {
    int count = 0;
    for (const auto& r : a.table) count += r.fold == fold ? 1 : 0;
    CHECK(count == 2);
  }
}

TEST_CASE("emit_results writes headers for zero records and round-trips") {
  const auto dir = std::filesystem::temp_directory_path() / "uslearn_results";
  std::filesystem::create_directories(dir);

  emit_results({}, dir.string());
  {
    std::ifstream in(dir / "results.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header.find("config,tag") == 0);
    CHECK(parse_results_csv((dir / "results.csv").string()).empty());
  }

  std::vector<ResultRecord> records;
  for (int i = 0; i < 4; ++i) {
    ResultRecord r;
    r.config_hash = "deadbeef00000000";
    r.tag = i % 2 == 0 ? "cv" : "final";
    r.seed = 9;
    r.rep = i;
    r.fold = i % 2;
    r.lambda = 0.5 * (i + 1);
    r.gamma = 0.25;
    r.train_error = 0.125 * i;
    r.test_error = 0.0625 * i;
    r.solver_gap = 1e-8;
    records.push_back(r);
  }
  emit_results(records, dir.string());
  const auto back = parse_results_csv((dir / "results.csv").string());
  REQUIRE(back.size() == records.size());
  double mean_cv = 0.0;
  int n_cv = 0;
  for (const auto& r : back) {
    if (r.tag == "cv") {
      mean_cv += r.test_error;
      ++n_cv;
    }
  }
  mean_cv /= n_cv;
  // summary means equal the arithmetic means of the records
  std::ifstream in(dir / "summary.csv");
  std::string line;
  std::getline(in, line);
  bool found = false;
  while (std::getline(in, line)) {
    if (line.rfind("cv,", 0) == 0) {
      const auto fields = detail::split_fields(line, ',');
      CHECK(std::abs(detail::parse_double(fields[2], 0) - mean_cv) < 1e-15);
      found = true;
    }
  }
  CHECK(found);
  std::filesystem::remove_all(dir);
}

TEST_CASE("ellipsoid baseline separates well-separated blobs") {
  const Dataset ds = separable_instance(200, 33);
  const EllipsoidBaseline base = EllipsoidBaseline::fit(ds);
  CHECK(base.error_on(ds) <= 0.02);
}

TEST_CASE("synthetic experiment smoke run") {
  // two repetitions only; the acceptance suite runs the full table
  const SynthSummary s = run_synth_experiment(0.5, 0.0, 2, 12345, 2, true, 4000);
  CHECK(s.mean_error > 0.15);
  CHECK(s.mean_error < 0.35);
  CHECK(s.baseline_mean > 0.15);
  // per-rep records present: cv table + final + baseline per rep
  int finals = 0, baselines = 0;
  for (const auto& r : s.records) {
    finals += r.tag == "final" ? 1 : 0;
    baselines += r.tag == "baseline" ? 1 : 0;
  }
  CHECK(finals == 2);
  CHECK(baselines == 2);

  // determinism across runs of the whole experiment
  const SynthSummary s2 = run_synth_experiment(0.5, 0.0, 2, 12345, 2, true, 4000);
  CHECK(s2.mean_error == s.mean_error);
  CHECK(s2.baseline_mean == s.baseline_mean);
}
