#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "uslearn/model.hpp"
#include "uslearn/reduced_hull.hpp"
#include "uslearn/rng.hpp"
#include "uslearn/solver.hpp"

using namespace uslearn;

namespace {

DualProblem singleton_problem(const Loss& loss, double lambda) {
  DualProblem pb;
  pb.loss = loss;
  pb.kernel = Kernel::linear();
  pb.X.resize(2, 2);
  pb.X << 0, 0, 2, 0;
  pb.y.resize(2);
  pb.y << 1, -1;
  pb.lambda = lambda;
  return pb;
}

// two Gaussian blobs at +-(sep/2, 0)
DualProblem blob_problem(const Loss& loss, const Kernel& kernel, double lambda,
                         uint64_t seed, int per_class = 5, double sep = 4.0) {
  Rng rng(seed);
  DualProblem pb;
  pb.loss = loss;
  pb.kernel = kernel;
  const int m = 2 * per_class;
  pb.X.resize(m, 2);
  pb.y.resize(m);
  for (int i = 0; i < m; ++i) {
    const bool pos = i < per_class;
    pb.X(i, 0) = (pos ? sep / 2.0 : -sep / 2.0) + rng.gaussian();
    pb.X(i, 1) = rng.gaussian();
    pb.y[i] = pos ? 1 : -1;
  }
  pb.lambda = lambda;
  return pb;
}

VectorXd normal_vector(const KernelExpansion& f) {
  // linear kernel: w = sum_j beta_j x_j
  if (f.coefficients.size() == 0) return VectorXd::Zero(2);
  return f.anchors.transpose() * f.coefficients;
}

}  // namespace

TEST_CASE("singleton classes, hinge: the uncertainty sets are points") {
  const DualProblem pb = singleton_problem(Loss::hinge(1.0), 1.0);
  const DualSolution sol = solve_dual(pb, 1e-9);
  CHECK(std::abs(sol.alpha[0] - 1.0) < 1e-9);
  CHECK(std::abs(sol.alpha[1] - 1.0) < 1e-9);
  CHECK(std::abs(sol.objective - 2.0) < 1e-8);
  CHECK(std::abs(sol.z_gap - 2.0) < 1e-8);
  CHECK(std::abs(sol.c_p) < 1e-12);
  CHECK(std::abs(sol.c_n) < 1e-12);
}

TEST_CASE("singleton classes, truncated quadratic levels are tight") {
  const DualProblem pb = singleton_problem(Loss::truncated_quadratic(), 1.0);
  const DualSolution sol = solve_dual(pb, 1e-9);
  // one sample per class forces alpha = (1,1); c_o = l*(2)/2 = -1/2
  CHECK(std::abs(sol.c_p - (-0.5)) < 1e-9);
  CHECK(std::abs(sol.c_n - (-0.5)) < 1e-9);
  CHECK(std::abs(sol.objective - (-1.0 + 2.0)) < 1e-8);
}

TEST_CASE("four-point instance matches a brute-force solve") {
  DualProblem pb;
  pb.loss = Loss::truncated_quadratic();
  pb.kernel = Kernel::linear();
  pb.X.resize(4, 2);
  pb.X << 1.0, 0.3, 2.0, -0.6, -1.0, 0.2, -2.2, -0.4;
  pb.y.resize(4);
  pb.y << 1, 1, -1, -1;
  pb.lambda = 1.0;

  // the two free weights a (positive class) and b (negative class)
  auto objective = [&](double a, double b) {
    VectorXd alpha(4);
    alpha << a, 1.0 - a, b, 1.0 - b;
    double sep = 0.0;
    for (int i = 0; i < 4; ++i) sep += pb.loss.conjugate(4.0 * alpha[i]) / 4.0;
    VectorXd w = VectorXd::Zero(2);
    for (int i = 0; i < 4; ++i) {
      w += static_cast<double>(pb.y[i]) * alpha[i] * pb.X.row(i).transpose();
    }
    return sep + pb.lambda * w.norm();
  };

  // oracle: dense grid then alternating golden refinement
  double best_a = 0.5, best_b = 0.5, best = objective(0.5, 0.5);
  const int n = 400;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double v = objective(static_cast<double>(i) / n, static_cast<double>(j) / n);
      if (v < best) {
        best = v;
        best_a = static_cast<double>(i) / n;
        best_b = static_cast<double>(j) / n;
      }
    }
  }
  for (int round = 0; round < 80; ++round) {
    best_a = golden_min([&](double a) { return objective(a, best_b); },
                        std::max(0.0, best_a - 0.02), std::min(1.0, best_a + 0.02), 1e-15, 200);
    best_b = golden_min([&](double b) { return objective(best_a, b); },
                        std::max(0.0, best_b - 0.02), std::min(1.0, best_b + 0.02), 1e-15, 200);
  }
  best = objective(best_a, best_b);

  const DualSolution sol = solve_dual(pb, 1e-9);
  CHECK(std::abs(sol.objective - best) <= 1e-8 * (1.0 + std::abs(best)));
}

TEST_CASE("recover_normal") {
  const DualProblem pb = singleton_problem(Loss::hinge(1.0), 1.0);
  const DualSolution sol = solve_dual(pb, 1e-9);
  const KernelExpansion f = recover_normal(pb, sol);
  // f(x) = lambda (k(x, x_p) - k(x, x_n)) / 2
  VectorXd x(2);
  x << 0.7, -0.3;
  CHECK(std::abs(f.eval(x) - 0.5 * (pb.kernel(x, pb.X.row(0).transpose()) -
                                    pb.kernel(x, pb.X.row(1).transpose()))) < 1e-8);
  CHECK(std::abs(rkhs_norm(f) - pb.lambda) < 1e-8);

  DualSolution degenerate = sol;
  degenerate.z_gap = 0.0;
  const KernelExpansion z = recover_normal(pb, degenerate);
  CHECK(z.zero());
  CHECK(rkhs_norm(z) == 0.0);
}

TEST_CASE("recover_normal scales exactly with lambda by construction") {
  const DualProblem pb = blob_problem(Loss::truncated_quadratic(), Kernel::linear(), 1.0, 5);
  const DualSolution sol = solve_dual(pb, 1e-8);
  DualProblem scaled = pb;
  scaled.lambda = 3.5;
  const KernelExpansion f1 = recover_normal(pb, sol);
  const KernelExpansion f2 = recover_normal(scaled, sol);
  CHECK((f2.coefficients - 3.5 * f1.coefficients).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("hinge dual is invariant to lambda up to scale") {
  const DualProblem pb = blob_problem(Loss::hinge(0.6), Kernel::linear(), 1.0, 77);
  const DualSolution s1 = solve_dual(pb, 1e-8);
  DualProblem pb2 = pb;
  pb2.lambda = 4.0;
  const DualSolution s2 = solve_dual(pb2, 1e-8);
  const VectorXd w1 = normal_vector(recover_normal(pb, s1));
  const VectorXd w2 = normal_vector(recover_normal(pb2, s2));
  CHECK((w2 - 4.0 * w1).norm() < 1e-4 * w2.norm());
  for (int i = 0; i < pb.m(); ++i) {
    CHECK((s1.alpha[i] > 1e-6) == (s2.alpha[i] > 1e-6));
  }
}

TEST_CASE("duality gap closes on solved instances and weak duality holds") {
  const DualProblem pb = singleton_problem(Loss::truncated_quadratic(), 1.0);
  const DualSolution d = solve_dual(pb, 1e-10);
  const PrimalSolution p = solve_primal(pb, 1e-10);
  CHECK(duality_gap(pb, p, d) <= 1e-9);

  // perturbed but feasible dual weights open a strict gap
  DualSolution perturbed = d;
  {
    DualProblem blob = blob_problem(Loss::truncated_quadratic(), Kernel::linear(), 1.0, 9);
    const DualSolution bd = solve_dual(blob, 1e-8);
    const PrimalSolution bp = solve_primal(blob, 1e-8);
    CHECK(bp.objective + bd.objective >= -1e-9);  // weak duality

    VectorXd a = bd.alpha;
    const auto idx = blob.idx_p();
    const double shift = 0.08;
    a[idx[0]] += shift;
    a[idx[1]] -= shift;
    if (a[idx[1]] < 0.0) {
      a[idx[0]] += a[idx[1]];
      a[idx[1]] = 0.0;
    }
    DualSolution worse = bd;
    worse.alpha = a;
    VectorXd delta(a.size());
    for (int i = 0; i < a.size(); ++i) delta[i] = static_cast<double>(blob.y[i]) * a[i];
    const MatrixXd G = gram(blob.kernel, blob.X);
    double sep = 0.0;
    for (int i = 0; i < a.size(); ++i) {
      sep += blob.loss.conjugate(static_cast<double>(a.size()) * a[i]) /
             static_cast<double>(a.size());
    }
    worse.objective = sep + blob.lambda * std::sqrt(delta.dot(G * delta));
    CHECK(duality_gap(blob, bp, worse) > 1e-4);
    CHECK(bp.objective + worse.objective >= -1e-9);
  }
}

TEST_CASE("duality gap on random instances, both kernels, both smooth losses") {
  int solved = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    for (const Loss& loss : {Loss::truncated_quadratic(), Loss::exponential()}) {
      for (int kk = 0; kk < 2; ++kk) {
        const Kernel kernel = kk == 0 ? Kernel::linear() : Kernel::gaussian(0.5);
        const DualProblem pb = blob_problem(loss, kernel, 1.0, seed * 13 + kk);
        const DualSolution d = solve_dual(pb, 1e-7);
        const PrimalSolution p = solve_primal(pb, 1e-7);
        const double gap = duality_gap(pb, p, d);
        INFO("loss=" << loss.name() << " kernel=" << kernel.name() << " seed=" << seed);
        CHECK(gap <= 1e-5 * (1.0 + std::abs(d.objective)));
        CHECK(p.objective + d.objective >= -1e-9);
        CHECK(p.rho >= -loss.eval(0.0) / 2.0 - 1e-8);
        ++solved;
      }
    }
  }
  CHECK(solved == 40);  // 20 truncated-quadratic + 20 exponential solves
}

TEST_CASE("hinge dual optimum equals the reduced-hull distance from the geometric oracle") {
  for (uint64_t seed : {3u, 14u, 25u}) {
    const double nu = 0.6;
    const DualProblem pb = blob_problem(Loss::hinge(nu), Kernel::linear(), 1.0, seed);
    const DualSolution sol = solve_dual(pb, 1e-9);
    const double cap = 2.0 / (pb.m() * nu);
    const MatrixXd G = gram(pb.kernel, pb.X);
    const RchResult rch = rch_min_distance(G, pb.idx_p(), pb.idx_n(), cap, cap);
    REQUIRE(rch.converged);
    INFO("seed=" << seed);
    CHECK(std::abs(sol.objective / pb.lambda - rch.distance) <= 1e-6);
  }
}

TEST_CASE("nu-SVM equivalence: lambda = ||w_hat|| reproduces the nu-SVM direction") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const double nu = 0.5;
    const DualProblem base = blob_problem(Loss::hinge(nu), Kernel::linear(), 1.0, 100 + seed);
    const NuSvmModel nusvm = nu_svm_train(base.X, base.y, nu);
    REQUIRE(nusvm.lambda > 1e-6);

    DualProblem pb = base;
    pb.lambda = nusvm.lambda;
    const DualSolution sol = solve_dual(pb, 1e-10);
    const VectorXd w = normal_vector(recover_normal(pb, sol));
    const double cosine = w.dot(nusvm.w) / (w.norm() * nusvm.w.norm());
    INFO("seed=" << seed);
    CHECK(cosine >= 1.0 - 1e-6);
    CHECK(std::abs(sol.objective / pb.lambda - nusvm.distance) <= 1e-6);
  }
}

TEST_CASE("primal solve on the singleton instance finds the bisecting boundary") {
  // lambda = ||w_hat|| from the direct nu-SVM solve; nu = 0.5 keeps the
  // bias unique (at nu = 1 the rho-slope saturates at exactly 2 and the
  // primal optimum is flat in b)
  MatrixXd X(2, 2);
  X << 0, 0, 2, 0;
  VectorXi y(2);
  y << 1, -1;
  const NuSvmModel nusvm = nu_svm_train(X, y, 0.5);
  CHECK(std::abs(nusvm.lambda - 0.5) < 1e-12);
  CHECK(std::abs(nusvm.distance - 2.0) < 1e-12);

  DualProblem pb = singleton_problem(Loss::hinge(0.5), nusvm.lambda);
  const PrimalSolution p = solve_primal(pb, 1e-10);
  const VectorXd w = normal_vector(p.f);
  // boundary w.x + b = 0 must be the perpendicular bisector x1 = 1
  CHECK(std::abs(w[1]) < 1e-8);
  CHECK(std::abs(w[0] * 1.0 + p.b) < 1e-6);
  CHECK(w[0] < 0.0);
  CHECK(p.objective <= -1.0 + 1e-8);
}

TEST_CASE("separable instance reaches zero training error after the bias step") {
  const DualProblem pb =
      blob_problem(Loss::truncated_quadratic(), Kernel::linear(), 10.0, 42, 10, 8.0);
  const DualSolution sol = solve_dual(pb, 1e-7);
  const KernelExpansion f = recover_normal(pb, sol);
  Dataset ds{pb.X, pb.y, {}};
  const DecisionModel model{f, estimate_bias(f, ds)};
  CHECK(error_rate(model, ds) == 0.0);
}

TEST_CASE("all labels identical is rejected upstream") {
  DualProblem pb;
  pb.loss = Loss::truncated_quadratic();
  pb.kernel = Kernel::linear();
  pb.X = MatrixXd::Random(4, 2);
  pb.y = VectorXi::Constant(4, 1);
  pb.lambda = 1.0;
  CHECK_THROWS_AS(solve_dual(pb), ValidationError);
}

TEST_CASE("hinge cap that empties a weight set is infeasible") {
  DualProblem pb;
  pb.loss = Loss::hinge(1.0);
  pb.kernel = Kernel::linear();
  pb.X = MatrixXd::Random(10, 2);
  pb.y.resize(10);
  // 2 positives: cap * m_o = 2/(10*1) * 2 = 0.4 < 1
  for (int i = 0; i < 10; ++i) pb.y[i] = i < 2 ? 1 : -1;
  pb.lambda = 1.0;
  CHECK_THROWS_AS(solve_dual(pb), ValidationError);
}

TEST_CASE("rho lower bound holds on every solved primal instance") {
  for (uint64_t seed : {2u, 8u, 21u}) {
    for (const Loss& loss :
         {Loss::truncated_quadratic(), Loss::exponential(), Loss::estimation_error(1.0, 1.0)}) {
      const DualProblem pb = blob_problem(loss, Kernel::gaussian(0.8), 2.0, seed);
      const PrimalSolution p = solve_primal(pb, 1e-7);
      INFO("loss=" << loss.name() << " seed=" << seed);
      CHECK(p.rho >= -loss.eval(0.0) / 2.0 - 1e-8);
    }
  }
}

TEST_CASE("estimation-error loss solves and certifies too") {
  const DualProblem pb = blob_problem(Loss::estimation_error(1.0, 1.0), Kernel::linear(), 1.0, 31);
  const DualSolution d = solve_dual(pb, 1e-7);
  const PrimalSolution p = solve_primal(pb, 1e-7);
  CHECK(duality_gap(pb, p, d) <= 1e-5 * (1.0 + std::abs(d.objective)));
}
