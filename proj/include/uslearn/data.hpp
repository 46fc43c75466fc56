#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "uslearn/rng.hpp"
#include "uslearn/util.hpp"

namespace uslearn {

using Eigen::Matrix2d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;
using Eigen::VectorXi;

struct Dataset {
  MatrixXd X;  // m x d, rows are samples
  VectorXi y;  // labels in {+1, -1}
  std::vector<std::string> feature_names;

  int m() const { return static_cast<int>(X.rows()); }
  int d() const { return static_cast<int>(X.cols()); }

  std::vector<int> positives() const { return label_indices(+1); }
  std::vector<int> negatives() const { return label_indices(-1); }

  void validate() const {
    if (X.rows() != y.size()) throw ValidationError("dataset: X/y size mismatch");
    for (int i = 0; i < m(); ++i) {
      if (y[i] != 1 && y[i] != -1) {
        throw ValidationError("dataset: label not in {+1,-1} at row " +
                              std::to_string(i + 1));
      }
    }
    if (!X.allFinite()) throw ValidationError("dataset: non-finite feature value");
  }

 private:
  std::vector<int> label_indices(int label) const {
    std::vector<int> idx;
    for (int i = 0; i < m(); ++i) {
      if (y[i] == label) idx.push_back(i);
    }
    return idx;
  }
};

inline Dataset subset(const Dataset& ds, const std::vector<int>& indices) {
  Dataset out;
  out.X.resize(static_cast<int>(indices.size()), ds.d());
  out.y.resize(static_cast<int>(indices.size()));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.X.row(static_cast<int>(r)) = ds.X.row(indices[r]);
    out.y[static_cast<int>(r)] = ds.y[indices[r]];
  }
  out.feature_names = ds.feature_names;
  return out;
}

// Two-Gaussian generator for the synthetic benchmark: positives from
// N(mu_p, sigma_p), negatives from N(mu_n, sigma_n), P(y=+1) = p_pos.
struct SynthSpec {
  Vector2d mu_p = Vector2d::Zero();
  Vector2d mu_n = Vector2d(1.0, 1.0);
  Matrix2d sigma_p = Matrix2d::Identity();
  Matrix2d sigma_n = default_sigma_n();
  double p_pos = 0.5;
  int m = 400;
  uint64_t seed = 1;

  // R' diag(0.5^2, 1.5^2) R with R the pi/3 counterclockwise rotation
  static Matrix2d default_sigma_n() {
    const double c = std::cos(M_PI / 3.0), s = std::sin(M_PI / 3.0);
    Matrix2d R;
    R << c, -s, s, c;
    Matrix2d D = Matrix2d::Zero();
    D(0, 0) = 0.25;
    D(1, 1) = 2.25;
    return R.transpose() * D * R;
  }

  void validate() const {
    if (!(p_pos > 0.0 && p_pos < 1.0)) throw ValidationError("synth: p_pos must be in (0,1)");
    if (m <= 0) throw ValidationError("synth: m must be positive");
    for (const Matrix2d& S : {sigma_p, sigma_n}) {
      if (std::abs(S(0, 1) - S(1, 0)) > 1e-12) throw ValidationError("synth: sigma not symmetric");
      Eigen::SelfAdjointEigenSolver<Matrix2d> es(S);
      if (es.eigenvalues().minCoeff() < -1e-12) throw ValidationError("synth: sigma not PSD");
    }
  }
};

inline Dataset generate_synth(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const Eigen::LLT<Matrix2d> llt_p(spec.sigma_p);
  const Eigen::LLT<Matrix2d> llt_n(spec.sigma_n);
  const Matrix2d Lp = llt_p.matrixL();
  const Matrix2d Ln = llt_n.matrixL();

  Dataset ds;
  ds.X.resize(spec.m, 2);
  ds.y.resize(spec.m);
  for (int i = 0; i < spec.m; ++i) {
    const bool pos = rng.uniform() < spec.p_pos;
    Vector2d g(rng.gaussian(), rng.gaussian());
    const Vector2d x = pos ? Vector2d(spec.mu_p + Lp * g) : Vector2d(spec.mu_n + Ln * g);
    ds.X.row(i) = x.transpose();
    ds.y[i] = pos ? 1 : -1;
  }
  return ds;
}

enum class DataFormat { kCsv, kLibsvm };

// How raw labels map to {+1,-1}.  kStrict accepts only +1/-1.
enum class LabelMap { kStrict, kZeroOne, kOneTwo };

namespace detail {

inline int map_label(double raw, LabelMap map, int line_no) {
  auto is = [&](double v) { return std::abs(raw - v) < 1e-9; };
  switch (map) {
    case LabelMap::kStrict:
      if (is(1.0)) return 1;
      if (is(-1.0)) return -1;
      break;
    case LabelMap::kZeroOne:
      if (is(1.0)) return 1;
      if (is(0.0)) return -1;
      break;
    case LabelMap::kOneTwo:
      if (is(1.0)) return 1;
      if (is(2.0)) return -1;
      break;
  }
  throw ValidationError("line " + std::to_string(line_no) +
                        ": unknown label without mapping: " + std::to_string(raw));
}

inline std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) out.push_back(field);
  return out;
}

inline double parse_double(const std::string& s, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("line " + std::to_string(line_no) + ": cannot parse number '" + s + "'");
  }
}

}  // namespace detail

struct CsvOptions {
  int label_column = -1;      // -1 means last column
  std::string label_name;     // non-empty: resolve the column via the header
  LabelMap label_map = LabelMap::kStrict;
};

inline Dataset load_csv(const std::string& path, const CsvOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<std::string> names;
  std::string line;
  int line_no = 0;
  bool checked_header = false;
  int named_column = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = detail::split_fields(line, ',');
    if (!checked_header) {
      checked_header = true;
      bool numeric = true;
      try {
        for (const auto& f : fields) detail::parse_double(f, line_no);
      } catch (const ValidationError&) {
        numeric = false;
      }
      if (!numeric) {
        names = fields;
        if (!opts.label_name.empty()) {
          const auto it = std::find(names.begin(), names.end(), opts.label_name);
          if (it == names.end()) {
            throw ValidationError(path + ": no column named '" + opts.label_name + "'");
          }
          named_column = static_cast<int>(it - names.begin());
        }
        continue;
      }
      if (!opts.label_name.empty()) {
        throw ValidationError(path + ": --label-name requires a header row");
      }
    }
    std::vector<double> vals;
    vals.reserve(fields.size());
    for (const auto& f : fields) vals.push_back(detail::parse_double(f, line_no));
    const int label_col = named_column >= 0 ? named_column
                          : opts.label_column < 0 ? static_cast<int>(vals.size()) - 1
                                                  : opts.label_column;
    if (label_col >= static_cast<int>(vals.size())) {
      throw ValidationError("line " + std::to_string(line_no) + ": label column out of range");
    }
    labels.push_back(detail::map_label(vals[label_col], opts.label_map, line_no));
    vals.erase(vals.begin() + label_col);
    if (!rows.empty() && rows.front().size() != vals.size()) {
      throw ValidationError("line " + std::to_string(line_no) + ": inconsistent column count");
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ValidationError(path + ": no data rows");

  Dataset ds;
  ds.X.resize(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  ds.y.resize(static_cast<int>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) ds.X(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    ds.y[static_cast<int>(i)] = labels[i];
  }
  if (!names.empty()) {
    const int label_col = named_column >= 0 ? named_column
                          : opts.label_column < 0 ? static_cast<int>(names.size()) - 1
                                                  : opts.label_column;
    if (label_col < static_cast<int>(names.size())) names.erase(names.begin() + label_col);
    ds.feature_names = names;
  }
  ds.validate();
  return ds;
}

// Standard sparse lines "label idx:val idx:val ..." with 1-based indices.
inline Dataset load_libsvm(const std::string& path, LabelMap label_map = LabelMap::kStrict) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<std::vector<std::pair<int, double>>> rows;
  std::vector<int> labels;
  int max_index = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string tok;
    if (!(is >> tok)) continue;
    labels.push_back(detail::map_label(detail::parse_double(tok, line_no), label_map, line_no));
    std::vector<std::pair<int, double>> feats;
    while (is >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) {
        throw ValidationError("line " + std::to_string(line_no) + ": expected idx:val, got '" + tok + "'");
      }
      const double idx_raw = detail::parse_double(tok.substr(0, colon), line_no);
      const int idx = static_cast<int>(idx_raw);
      if (idx < 1 || idx != idx_raw) {
        throw ValidationError("line " + std::to_string(line_no) + ": bad feature index '" +
                              tok.substr(0, colon) + "'");
      }
      feats.emplace_back(idx, detail::parse_double(tok.substr(colon + 1), line_no));
      max_index = std::max(max_index, idx);
    }
    rows.push_back(std::move(feats));
  }
  if (rows.empty()) throw ValidationError(path + ": no data rows");

  Dataset ds;
  ds.X = MatrixXd::Zero(static_cast<int>(rows.size()), max_index);
  ds.y.resize(static_cast<int>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ds.y[static_cast<int>(i)] = labels[i];
    for (const auto& [idx, val] : rows[i]) ds.X(static_cast<int>(i), idx - 1) = val;
  }
  ds.validate();
  return ds;
}

inline Dataset load_dataset(const std::string& path, DataFormat format,
                            const CsvOptions& opts = {}) {
  return format == DataFormat::kCsv ? load_csv(path, opts)
                                    : load_libsvm(path, opts.label_map);
}

// Features then label, shortest round-trip representation ("%.17g").
inline void save_csv(const Dataset& ds, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ValidationError("cannot write " + path);
  for (int i = 0; i < ds.m(); ++i) {
    for (int j = 0; j < ds.d(); ++j) std::fprintf(f, "%.17g,", ds.X(i, j));
    std::fprintf(f, "%d\n", ds.y[i]);
  }
  std::fclose(f);
}

namespace detail {

inline std::vector<std::vector<int>> shuffled_by_label(const Dataset& ds, Rng& rng) {
  std::vector<int> pos = ds.positives(), neg = ds.negatives();
  rng.shuffle(pos);
  rng.shuffle(neg);
  return {pos, neg};
}

}  // namespace detail

// Stratified disjoint split; both parts must contain both labels (the
// permutation is retried up to 100 times, then this is an error).
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double fraction,
                                                 uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ValidationError("split: fraction must be in (0,1)");
  }
  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto classes = detail::shuffled_by_label(ds, rng);
    std::vector<int> first, second;
    for (const auto& cls : classes) {
      const int take = static_cast<int>(std::lround(fraction * static_cast<double>(cls.size())));
      for (std::size_t i = 0; i < cls.size(); ++i) {
        (static_cast<int>(i) < take ? first : second).push_back(cls[static_cast<int>(i)]);
      }
    }
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    const Dataset a = subset(ds, first), b = subset(ds, second);
    if (!a.positives().empty() && !a.negatives().empty() && !b.positives().empty() &&
        !b.negatives().empty()) {
      return {a, b};
    }
  }
  throw ValidationError("split: cannot produce parts containing both labels");
}

struct FoldIndices {
  std::vector<int> train;
  std::vector<int> val;
};

// Stratified k-fold assignment: per-class round robin after a seeded
// shuffle, so every fold's class ratio is within one sample of global.
inline std::vector<FoldIndices> kfold(const Dataset& ds, int k, uint64_t seed) {
  if (k < 2) throw ValidationError("kfold: k must be >= 2");
  Rng rng(seed);
  auto classes = detail::shuffled_by_label(ds, rng);
  std::vector<std::vector<int>> fold_of(k);
  int start = 0;  // rotate across classes so remainders spread over folds
  for (const auto& cls : classes) {
    for (std::size_t i = 0; i < cls.size(); ++i) {
      fold_of[(start + static_cast<int>(i)) % k].push_back(cls[i]);
    }
    start = (start + static_cast<int>(cls.size())) % k;
  }
  std::vector<FoldIndices> folds(k);
  for (int f = 0; f < k; ++f) {
    for (int g = 0; g < k; ++g) {
      auto& dst = (g == f) ? folds[f].val : folds[f].train;
      dst.insert(dst.end(), fold_of[g].begin(), fold_of[g].end());
    }
    std::sort(folds[f].train.begin(), folds[f].train.end());
    std::sort(folds[f].val.begin(), folds[f].val.end());
    const Dataset tr = subset(ds, folds[f].train);
    if (tr.positives().empty() || tr.negatives().empty()) {
      throw ValidationError("kfold: fold " + std::to_string(f) + " train part lacks a label");
    }
  }
  return folds;
}

// Median pairwise squared distance, the reference scale for Gaussian
// bandwidth grids.  Uses a seeded subsample above 300 points.
inline double median_pairwise_sq_dist(const MatrixXd& X, uint64_t seed = 0) {
  const int m = static_cast<int>(X.rows());
  if (m < 2) return 1.0;
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  if (m > 300) {
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(300);
  }
  std::vector<double> d2;
  d2.reserve(idx.size() * (idx.size() - 1) / 2);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = i + 1; j < idx.size(); ++j) {
      d2.push_back((X.row(idx[i]) - X.row(idx[j])).squaredNorm());
    }
  }
  std::nth_element(d2.begin(), d2.begin() + d2.size() / 2, d2.end());
  const double med = d2[d2.size() / 2];
  return med > 0.0 ? med : 1.0;
}

}  // namespace uslearn
