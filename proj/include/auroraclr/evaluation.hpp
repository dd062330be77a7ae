// Copyright 2026 The auroraclr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

/// \file evaluation.hpp
/// Linear probe on frozen embeddings: L2-regularised multinomial logistic
/// regression, classification metrics, and k-fold cross-validation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "auroraclr/data.hpp"
#include "auroraclr/errors.hpp"
#include "auroraclr/matrix.hpp"
#include "auroraclr/trainer.hpp"

namespace auroraclr {

struct ProbeConfig {
  double l2_strength = 1e-3;
  std::size_t max_iterations = 1000;
  double convergence_tol = 1e-5;
  double optimizer_lr = 1.0;  // initial backtracking step
  bool standardize = true;    // z-score features with training statistics

  void validate() const {
    if (!(l2_strength >= 0.0)) throw ConfigError("probe: l2_strength must be non-negative");
    if (max_iterations < 1) throw ConfigError("probe: max_iterations must be at least 1");
    if (!(convergence_tol > 0.0)) throw ConfigError("probe: convergence_tol must be positive");
    if (!(optimizer_lr > 0.0)) throw ConfigError("probe: optimizer_lr must be positive");
  }
};

struct LogisticModel {
  Matrix weights;               // d x C, applied to raw features
  std::vector<double> biases;   // C
  std::size_t iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::vector<double> objective_history;  // one entry per accepted iterate, starting at zero init

  std::size_t num_classes() const { return biases.size(); }
};

namespace detail {

// Row-wise softmax of logits in place; rows are shifted by their maximum.
inline void softmax_rows(Matrix& logits) {
  for (std::size_t i = 0; i < logits.rows; ++i) {
    auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      s += v;
    }
    for (double& v : row) v /= s;
  }
}

inline Matrix logits(const Matrix& x, const Matrix& w, std::span<const double> b) {
  Matrix out(x.rows, w.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto orow = out.row(i);
    for (std::size_t c = 0; c < w.cols; ++c) orow[c] = b[c];
    for (std::size_t j = 0; j < x.cols; ++j) {
      const double xv = x(i, j);
      if (xv == 0.0) continue;
      for (std::size_t c = 0; c < w.cols; ++c) orow[c] += xv * w(j, c);
    }
  }
  return out;
}

// Mean cross-entropy plus (l2/2)|W|^2; fills `probs` with the softmax.
inline double logreg_objective(const Matrix& x, std::span<const int> y, const Matrix& w,
                               std::span<const double> b, double l2, Matrix& probs) {
  probs = logits(x, w, b);
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto row = probs.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double v : row) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    loss += lse - row[static_cast<std::size_t>(y[i])];
    for (double& v : row) v = std::exp(v - lse);
  }
  loss /= static_cast<double>(x.rows);
  double reg = 0.0;
  for (double v : w.values) reg += v * v;
  return loss + 0.5 * l2 * reg;
}

}  // namespace detail

// Full-batch gradient descent with Armijo backtracking from zero weights.
// The objective is therefore non-increasing over iterations. When
// `standardize` is set the fit runs on z-scored features and the returned
// weights are folded back so they apply to raw features.
inline LogisticModel fit_logreg(const Matrix& embeddings, std::span<const int> labels,
                                std::size_t num_classes, const ProbeConfig& cfg) {
  cfg.validate();
  const std::size_t n = embeddings.rows, d = embeddings.cols, c = num_classes;
  if (labels.size() != n) throw DimensionError("fit_logreg: one label per row required");
  if (n < c) throw ContractError("fit_logreg: fewer samples than classes");
  std::vector<std::size_t> counts(c, 0);
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= c) throw ContractError("fit_logreg: label out of range");
    ++counts[static_cast<std::size_t>(l)];
  }
  for (std::size_t k = 0; k < c; ++k) {
    if (counts[k] == 0) throw ContractError("fit_logreg: class " + std::to_string(k) + " absent");
  }
  for (double v : embeddings.values) {
    if (!std::isfinite(v)) throw InputError("fit_logreg: non-finite embedding value");
  }

  std::vector<double> mu(d, 0.0), sigma(d, 1.0);
  Matrix x = embeddings;
  if (cfg.standardize) {
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += x(i, j);
      mu[j] = s / static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) var += (x(i, j) - mu[j]) * (x(i, j) - mu[j]);
      var /= static_cast<double>(n);
      sigma[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
      for (std::size_t i = 0; i < n; ++i) x(i, j) = (x(i, j) - mu[j]) / sigma[j];
    }
  }

  Matrix w(d, c);
  std::vector<double> b(c, 0.0);
  Matrix probs, trial_probs;
  LogisticModel model;
  double f = detail::logreg_objective(x, labels, w, b, cfg.l2_strength, probs);
  model.objective_history.push_back(f);
  double step = cfg.optimizer_lr;
  Matrix gw(d, c);
  std::vector<double> gb(c);
  for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
    std::fill(gw.values.begin(), gw.values.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < c; ++k) {
        const double r = (probs(i, k) - (labels[i] == static_cast<int>(k) ? 1.0 : 0.0)) /
                         static_cast<double>(n);
        gb[k] += r;
        for (std::size_t j = 0; j < d; ++j) gw(j, k) += x(i, j) * r;
      }
    }
    for (std::size_t idx = 0; idx < gw.values.size(); ++idx) gw.values[idx] += cfg.l2_strength * w.values[idx];
    double gnorm2 = 0.0;
    for (double v : gw.values) gnorm2 += v * v;
    for (double v : gb) gnorm2 += v * v;
    model.gradient_norm = std::sqrt(gnorm2);
    if (model.gradient_norm < cfg.convergence_tol) {
      model.converged = true;
      break;
    }
    bool accepted = false;
    for (int halvings = 0; halvings < 80; ++halvings) {
      Matrix w_try = w;
      std::vector<double> b_try = b;
      for (std::size_t idx = 0; idx < w.values.size(); ++idx) w_try.values[idx] -= step * gw.values[idx];
      for (std::size_t k = 0; k < c; ++k) b_try[k] -= step * gb[k];
      const double f_try = detail::logreg_objective(x, labels, w_try, b_try, cfg.l2_strength, trial_probs);
      if (f_try <= f - 1e-4 * step * gnorm2) {
        w = std::move(w_try);
        b = std::move(b_try);
        f = f_try;
        std::swap(probs, trial_probs);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    model.iterations = iter + 1;
    if (!accepted) {
      // No decrease representable at this precision: stationary in practice.
      model.converged = true;
      break;
    }
    model.objective_history.push_back(f);
    step = std::min(step * 2.0, 1e6);
  }

  model.weights = Matrix(d, c);
  model.biases = b;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < c; ++k) {
      model.weights(j, k) = w(j, k) / sigma[j];
      model.biases[k] -= mu[j] * w(j, k) / sigma[j];
    }
  }
  return model;
}

struct Prediction {
  std::vector<int> labels;
  Matrix probabilities;  // N x C
};

// Softmax probabilities and argmax labels; ties go to the lowest class index.
inline Prediction predict(const Matrix& weights, std::span<const double> biases,
                          const Matrix& embeddings) {
  if (embeddings.cols != weights.rows || biases.size() != weights.cols) {
    throw DimensionError("predict: embeddings have " + std::to_string(embeddings.cols) +
                         " columns, model expects " + std::to_string(weights.rows));
  }
  Prediction out;
  out.probabilities = detail::logits(embeddings, weights, biases);
  // Argmax over raw logits.
  for (std::size_t i = 0; i < embeddings.rows; ++i) {
    auto row = out.probabilities.row(i);
    std::size_t best = 0;
    for (std::size_t k = 1; k < row.size(); ++k)
      if (row[k] > row[best]) best = k;
    out.labels.push_back(static_cast<int>(best));
  }
  detail::softmax_rows(out.probabilities);
  return out;
}

inline Prediction predict(const LogisticModel& model, const Matrix& embeddings) {
  return predict(model.weights, model.biases, embeddings);
}

struct ClassificationMetrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<double> precision, recall, f1;
  // Classes with no predicted (resp. true) members; their precision (resp.
  // recall) is reported as 0.
  std::vector<int> undefined_precision;
  std::vector<int> undefined_recall;
};

inline ClassificationMetrics metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion) {
  const std::size_t c = confusion.size();
  ClassificationMetrics m;
  std::size_t total = 0, correct = 0;
  std::vector<std::size_t> predicted(c, 0), actual(c, 0);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      total += confusion[i][j];
      actual[i] += confusion[i][j];
      predicted[j] += confusion[i][j];
      if (i == j) correct += confusion[i][j];
    }
  if (total == 0) throw ContractError("classification metrics of an empty confusion matrix");
  m.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  for (std::size_t k = 0; k < c; ++k) {
    const auto tp = static_cast<double>(confusion[k][k]);
    double p = 0.0, r = 0.0;
    if (predicted[k] > 0) {
      p = tp / static_cast<double>(predicted[k]);
    } else {
      m.undefined_precision.push_back(static_cast<int>(k));
    }
    if (actual[k] > 0) {
      r = tp / static_cast<double>(actual[k]);
    } else {
      m.undefined_recall.push_back(static_cast<int>(k));
    }
    const double f = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    m.precision.push_back(p);
    m.recall.push_back(r);
    m.f1.push_back(f);
    m.macro_precision += p;
    m.macro_recall += r;
    m.macro_f1 += f;
  }
  m.macro_precision /= static_cast<double>(c);
  m.macro_recall /= static_cast<double>(c);
  m.macro_f1 /= static_cast<double>(c);
  m.confusion = std::move(confusion);
  return m;
}

inline ClassificationMetrics classification_metrics(std::span<const int> y_true,
                                                    std::span<const int> y_pred,
                                                    std::size_t num_classes) {
  if (y_true.empty()) throw ContractError("classification metrics of empty input");
  if (y_true.size() != y_pred.size()) throw DimensionError("y_true and y_pred lengths differ");
  std::vector<std::vector<std::size_t>> confusion(num_classes,
                                                  std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_pred[i] < 0 || static_cast<std::size_t>(y_true[i]) >= num_classes ||
        static_cast<std::size_t>(y_pred[i]) >= num_classes) {
      throw ContractError("label out of range in classification metrics");
    }
    ++confusion[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
  }
  return metrics_from_confusion(std::move(confusion));
}

struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  bool converged = false;
  ClassificationMetrics metrics;
};

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation across folds
};

struct EvalReport {
  std::size_t k = 0;
  std::uint64_t fold_seed = 0;
  std::size_t num_classes = 0;
  std::vector<FoldResult> per_fold;
  MetricSummary accuracy, macro_precision, macro_recall, macro_f1;
};

inline MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  for (double v : values) s.stddev += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(values.size()));
  return s;
}

// Fits one probe per fold on the other folds and scores it on the fold.
inline EvalReport cross_validate(const EmbeddingSet& set, const FoldSplit& folds,
                                 const ProbeConfig& cfg, std::size_t num_classes = 0) {
  set.validate();
  if (folds.assignments.size() != set.size()) {
    throw ContractError("fold split covers " + std::to_string(folds.assignments.size()) +
                        " records, embedding set has " + std::to_string(set.size()));
  }
  if (num_classes == 0) {
    for (int l : set.labels) num_classes = std::max(num_classes, static_cast<std::size_t>(l) + 1);
  }
  EvalReport report;
  report.k = folds.k;
  report.fold_seed = folds.seed;
  report.num_classes = num_classes;
  std::vector<double> acc, prec, rec, f1;
  for (std::size_t fold = 0; fold < folds.k; ++fold) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < set.size(); ++i) {
      (folds.assignments[i] == fold ? test_idx : train_idx).push_back(i);
    }
    if (test_idx.empty()) throw StratificationError("fold " + std::to_string(fold) + " is empty");
    auto gather = [&](const std::vector<std::size_t>& idx, Matrix& x, std::vector<int>& y) {
      x = Matrix(idx.size(), set.dim());
      y.clear();
      for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto src = set.embeddings.row(idx[r]);
        std::copy(src.begin(), src.end(), x.row(r).begin());
        y.push_back(set.labels[idx[r]]);
      }
    };
    Matrix x_train, x_test;
    std::vector<int> y_train, y_test;
    gather(train_idx, x_train, y_train);
    gather(test_idx, x_test, y_test);
    std::vector<std::size_t> present(num_classes, 0);
    for (int l : y_train) ++present[static_cast<std::size_t>(l)];
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (present[c] == 0) {
        throw StratificationError("fold " + std::to_string(fold) +
                                  ": training split has no members of class " + std::to_string(c));
      }
    }
    const LogisticModel model = fit_logreg(x_train, y_train, num_classes, cfg);
    const Prediction pred = predict(model, x_test);
    FoldResult fr;
    fr.fold = fold;
    fr.train_size = train_idx.size();
    fr.test_size = test_idx.size();
    fr.converged = model.converged;
    fr.metrics = classification_metrics(y_test, pred.labels, num_classes);
    acc.push_back(fr.metrics.accuracy);
    prec.push_back(fr.metrics.macro_precision);
    rec.push_back(fr.metrics.macro_recall);
    f1.push_back(fr.metrics.macro_f1);
    report.per_fold.push_back(std::move(fr));
  }
  report.accuracy = summarize(acc);
  report.macro_precision = summarize(prec);
  report.macro_recall = summarize(rec);
  report.macro_f1 = summarize(f1);
  return report;
}

// Mean pairwise cosine similarity within and between label groups.
struct SeparationStats {
  double within = 0.0;
  double between = 0.0;
  double margin() const { return within - between; }
};

inline SeparationStats class_separation(const EmbeddingSet& set) {
  const std::size_t n = set.size();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double v : set.embeddings.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
    if (norms[i] < 1e-12) throw DegenerateEmbeddingError("zero embedding row " + std::to_string(i));
  }
  double within = 0.0, between = 0.0;
  std::size_t nw = 0, nb = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double dot = 0.0;
      const auto a = set.embeddings.row(i), b = set.embeddings.row(j);
      for (std::size_t c = 0; c < a.size(); ++c) dot += a[c] * b[c];
      const double cs = dot / (norms[i] * norms[j]);
      if (set.labels[i] == set.labels[j]) {
        within += cs;
        ++nw;
      } else {
        between += cs;
        ++nb;
      }
    }
  SeparationStats s;
  s.within = nw ? within / static_cast<double>(nw) : 0.0;
  s.between = nb ? between / static_cast<double>(nb) : 0.0;
  return s;
}

// ---------------------------------------------------------------------------
// Report output

inline std::string format_eval_table(const EvalReport& r, const std::string& model_name,
                                     std::size_t parameter_count) {
  std::ostringstream out;
  auto pct = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << 100.0 * v;
    return s.str();
  };
  std::ostringstream params;
  if (parameter_count >= 1000000) {
    params << std::fixed << std::setprecision(1) << static_cast<double>(parameter_count) / 1e6 << "m";
  } else {
    params << std::fixed << std::setprecision(1) << static_cast<double>(parameter_count) / 1e3 << "k";
  }
  out << "Linear probe, " << r.k << "-fold cross-validation (fold seed " << r.fold_seed
      << "); precision/recall/F1 are macro-averaged over " << r.num_classes << " classes\n";
  const int name_w = static_cast<int>(std::max<std::size_t>(20, model_name.size() + 2));
  out << std::left << std::setw(name_w) << "Model" << std::setw(10) << "Params." << std::setw(22)
      << "Top-1 Accuracy (%)" << std::setw(8) << "Std." << std::setw(12) << "Precision"
      << std::setw(10) << "Recall" << "F1-Score\n";
  out << std::setw(name_w) << model_name << std::setw(10) << params.str() << std::setw(22)
      << pct(r.accuracy.mean) << std::setw(8) << pct(r.accuracy.stddev) << std::setw(12)
      << pct(r.macro_precision.mean) << std::setw(10) << pct(r.macro_recall.mean)
      << pct(r.macro_f1.mean) << '\n';
  return out.str();
}

inline void write_fold_metrics_csv(const EvalReport& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "fold,train_size,test_size,accuracy,macro_precision,macro_recall,macro_f1,converged\n"
      << std::setprecision(17);
  for (const auto& f : r.per_fold) {
    out << f.fold << ',' << f.train_size << ',' << f.test_size << ',' << f.metrics.accuracy << ','
        << f.metrics.macro_precision << ',' << f.metrics.macro_recall << ',' << f.metrics.macro_f1
        << ',' << (f.converged ? 1 : 0) << '\n';
  }
}

// Rows are true labels, columns predicted labels.
inline void write_confusion_csv(const ClassificationMetrics& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "true\\pred";
  for (std::size_t j = 0; j < m.confusion.size(); ++j) out << ',' << j;
  out << '\n';
  for (std::size_t i = 0; i < m.confusion.size(); ++i) {
    out << i;
    for (auto v : m.confusion[i]) out << ',' << v;
    out << '\n';
  }
}

}  // namespace auroraclr
