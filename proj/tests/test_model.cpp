#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>

#include "uslearn/model.hpp"
#include "uslearn/rng.hpp"

using namespace uslearn;

namespace {

// exhaustive oracle: best error over midpoints of every threshold interval
// plus points beyond both ends
int brute_force_best_error(const VectorXd& f, const VectorXi& y) {
  std::vector<double> t(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) t[static_cast<std::size_t>(i)] = -f[i];
  std::sort(t.begin(), t.end());
  std::vector<double> candidates{t.front() - 1.0, t.back() + 1.0};
  for (std::size_t k = 0; k + 1 < t.size(); ++k) candidates.push_back(0.5 * (t[k] + t[k + 1]));
  int best = static_cast<int>(f.size()) + 1;
  for (double b : candidates) {
    int errors = 0;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      if (static_cast<double>(y[i]) * (f[i] + b) <= 0.0) ++errors;
    }
    best = std::min(best, errors);
  }
  return best;
}

int errors_at(const VectorXd& f, const VectorXi& y, double b) {
  int errors = 0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (static_cast<double>(y[i]) * (f[i] + b) <= 0.0) ++errors;
  }
  return errors;
}

}  // namespace

TEST_CASE("estimate_bias picks the midpoint of the widest optimal interval") {
  VectorXd f(3);
  f << -1.0, 0.5, 2.0;
  VectorXi y(3);
  y << -1, 1, 1;
  const double b = estimate_bias(f, y);
  CHECK(std::abs(b - 0.25) < 1e-15);
  CHECK(errors_at(f, y, b) == 0);
}

TEST_CASE("estimate_bias handles unbounded optimal intervals") {
  VectorXd f = VectorXd::Zero(3);
  VectorXi y = VectorXi::Constant(3, 1);
  CHECK(estimate_bias(f, y) == 1.0);

  y = VectorXi::Constant(3, -1);
  CHECK(estimate_bias(f, y) == -1.0);
}

TEST_CASE("estimate_bias achieves the exhaustive minimum on random instances") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 50;
    VectorXd f(m);
    VectorXi y(m);
    for (int i = 0; i < m; ++i) {
      f[i] = 4.0 * rng.gaussian();
      if (trial % 3 == 0) f[i] = std::round(f[i]);  // force ties/duplicates
      y[i] = rng.uniform() < 0.5 ? 1 : -1;
    }
    const double b = estimate_bias(f, y);
    CHECK(errors_at(f, y, b) == brute_force_best_error(f, y));
  }
}

TEST_CASE("estimate_bias is shift-equivariant") {
  Rng rng(12);
  VectorXd f(20);
  VectorXi y(20);
  for (int i = 0; i < 20; ++i) {
    f[i] = rng.gaussian();
    y[i] = rng.uniform() < 0.4 ? 1 : -1;
  }
  const double b0 = estimate_bias(f, y);
  const double c = 3.25;
  const double b1 = estimate_bias((f.array() + c).matrix(), y);
  CHECK(std::abs((b1 + c) - b0) < 1e-12);
}

TEST_CASE("estimate_bias beats every point of a dense grid") {
  Rng rng(99);
  VectorXd f(30);
  VectorXi y(30);
  for (int i = 0; i < 30; ++i) {
    f[i] = 2.0 * rng.gaussian();
    y[i] = rng.uniform() < 0.5 ? 1 : -1;
  }
  const double b = estimate_bias(f, y);
  const int at_b = errors_at(f, y, b);
  for (int g = 0; g <= 1000; ++g) {
    const double cand = -10.0 + 20.0 * g / 1000.0;
    CHECK(at_b <= errors_at(f, y, cand));
  }
}

TEST_CASE("error_rate counts the boundary as an error") {
  MatrixXd X(4, 2);
  X << 0, 0, 1, 0, 0, 1, 1, 1;
  VectorXi y(4);
  y << 1, 1, -1, -1;
  Dataset ds{X, y, {}};

  DecisionModel zero{KernelExpansion{Kernel::linear(), MatrixXd::Zero(0, 2), VectorXd()}, 0.0};
  CHECK(error_rate(zero, ds) == 1.0);

  // w = (0, -2), b = 1: f = 1 - 2 x2, separates y by second coordinate
  MatrixXd anchor(1, 2);
  anchor << 0.0, 1.0;
  DecisionModel sep{KernelExpansion{Kernel::linear(), anchor, VectorXd::Constant(1, -2.0)}, 1.0};
  CHECK(error_rate(sep, ds) == 0.0);

  DecisionModel flipped{KernelExpansion{Kernel::linear(), anchor, VectorXd::Constant(1, 2.0)}, -1.0};
  CHECK(error_rate(flipped, ds) == 1.0);

  Dataset empty{MatrixXd::Zero(0, 2), VectorXi(), {}};
  CHECK_THROWS_AS(error_rate(zero, empty), ValidationError);
}

TEST_CASE("model serialization round-trips") {
  MatrixXd anchors(2, 3);
  anchors << 1, 2, 3, 4, 5, 6;
  VectorXd beta(2);
  beta << 0.5, -0.25;
  DecisionModel model{KernelExpansion{Kernel::gaussian(0.5), anchors, beta}, 1.5};

  const auto path = (std::filesystem::temp_directory_path() / "uslearn_model.json").string();
  save_model(model, path);
  const DecisionModel back = load_model(path);
  std::remove(path.c_str());

  CHECK(back.bias == model.bias);
  CHECK(back.f.kernel.kind == KernelKind::kGaussian);
  CHECK(back.f.anchors == model.f.anchors);
  CHECK(back.f.coefficients == model.f.coefficients);

  VectorXd x(3);
  x << 0.5, 1.0, -2.0;
  CHECK(std::abs(back.f.eval(x) - model.f.eval(x)) < 1e-15);
}
