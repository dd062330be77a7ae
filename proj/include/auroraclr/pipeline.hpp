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

/// \file pipeline.hpp
/// Stage functions that chain the modules together and read or write the
/// artifact files each stage exchanges with the next.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include "auroraclr/config.hpp"

namespace auroraclr {

namespace artifact {
inline constexpr const char* kDatasetCache = "dataset.crds";
inline constexpr const char* kResolvedConfig = "config.txt";
inline constexpr const char* kCheckpoint = "model.crck";
inline constexpr const char* kLossHistory = "loss_history.csv";
inline constexpr const char* kEmbeddings = "embeddings.crem";
inline constexpr const char* kEmbeddingsCsv = "embeddings.csv";
inline constexpr const char* kProbeReport = "probe_report.txt";
inline constexpr const char* kFoldMetrics = "fold_metrics.csv";
inline constexpr const char* kConfusion = "confusion_total.csv";
inline constexpr const char* kSweep = "silhouette_sweep.csv";
inline constexpr const char* kAssignments = "assignments.csv";
inline constexpr const char* kCrosstab = "crosstab.csv";
inline constexpr const char* kCrosstabSamples = "crosstab_samples.txt";
inline constexpr const char* kClusterSummary = "cluster_summary.txt";
inline constexpr const char* kReport = "report.txt";
}  // namespace artifact

inline void require_artifact(const std::filesystem::path& path, const std::string& what) {
  if (!std::filesystem::is_regular_file(path)) {
    throw InputError("missing " + what + ": " + path.string());
  }
}

inline std::string read_text_file(const std::filesystem::path& path, const std::string& what) {
  require_artifact(path, what);
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

inline std::string describe_encoder(const EncoderConfig& e) {
  std::string s = "ResNet[";
  for (std::size_t i = 0; i < e.stage_channels.size(); ++i) {
    s += (i ? "," : "") + std::to_string(e.stage_channels[i]);
  }
  s += "]/[";
  for (std::size_t i = 0; i < e.blocks_per_stage.size(); ++i) {
    s += (i ? "," : "") + std::to_string(e.blocks_per_stage[i]);
  }
  return s + "]";
}

inline Dataset synthetic_dataset(const RunConfig& cfg) {
  return generate_synthetic_dataset(cfg.data.synthetic_per_class, cfg.data.image_size, cfg.seed);
}

// ---------------------------------------------------------------------------
// Training

struct TrainArtifacts {
  ModelCheckpoint checkpoint;
  std::vector<double> loss_history;
  std::size_t parameter_count = 0;
};

inline TrainArtifacts run_training(const Dataset& ds, const RunConfig& cfg,
                                   const EpochCallback& on_epoch = {}) {
  cfg.validate();
  Encoder enc(cfg.encoder, cfg.encoder_seed());
  ProjectionHead head(enc.representation_dim(), cfg.head, cfg.head_seed());
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  TrainResult result = train(ds, enc, head, cfg.augment, cfg.loss, tc, on_epoch);
  TrainArtifacts out;
  out.parameter_count = enc.parameter_count() + head.input_dim() * head.hidden_dim() +
                        head.hidden_dim() * head.projection_dim();
  out.checkpoint = capture_checkpoint(enc, head, cfg.head, result.rng_state,
                                      static_cast<std::uint32_t>(tc.epochs));
  out.checkpoint.run_config = config_to_text(cfg);
  out.loss_history = std::move(result.loss_history);
  return out;
}

struct RestoredModel {
  Encoder encoder;
  ProjectionHead head;
};

inline RestoredModel restore_model(const ModelCheckpoint& ck) {
  RestoredModel m{Encoder(ck.encoder, 0), ProjectionHead(ck.encoder.representation_dim(), ck.head, 0)};
  restore_checkpoint(ck, m.encoder, m.head);
  return m;
}

// ---------------------------------------------------------------------------
// Embedding

// Representations h, or projections z = g(h) when `space` asks for them.
inline EmbeddingSet run_embedding(const Dataset& ds, const ModelCheckpoint& ck,
                                  EmbeddingSpace space, std::size_t batch_size) {
  RestoredModel model = restore_model(ck);
  EmbeddingSet set = extract_embeddings(model.encoder, ds, batch_size);
  if (space == EmbeddingSpace::kProjection) {
    NoGradGuard no_grad;
    const Tensor z = model.head.forward(
        Tensor({set.size(), set.dim()}, set.embeddings.values));
    set.embeddings = Matrix(z.dim(0), z.dim(1), {z.data().begin(), z.data().end()});
  }
  return set;
}

// ---------------------------------------------------------------------------
// Probe

inline EvalReport run_probe(const EmbeddingSet& set, const RunConfig& cfg) {
  const FoldSplit folds = stratified_folds(set.labels, cfg.folds, cfg.fold_seed());
  return cross_validate(set, folds, cfg.probe);
}

inline ClassificationMetrics pooled_metrics(const EvalReport& r) {
  std::vector<std::vector<std::size_t>> total(r.num_classes,
                                              std::vector<std::size_t>(r.num_classes, 0));
  for (const auto& f : r.per_fold)
    for (std::size_t i = 0; i < r.num_classes; ++i)
      for (std::size_t j = 0; j < r.num_classes; ++j) total[i][j] += f.metrics.confusion[i][j];
  return metrics_from_confusion(std::move(total));
}

inline std::string format_separation(const SeparationStats& s) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << "class separation (mean cosine): within " << s.within
      << "  between " << s.between << "  margin " << s.margin() << '\n';
  return out.str();
}

inline void write_probe_artifacts(const EvalReport& r, const std::filesystem::path& dir,
                                  const std::string& model_name, std::size_t parameter_count,
                                  const SeparationStats& separation) {
  std::filesystem::create_directories(dir);
  std::ostringstream text;
  text << format_eval_table(r, model_name, parameter_count);
  text << "folds: " << r.k << "  fold seed: " << r.fold_seed << "\n";
  text << format_separation(separation);
  write_text_file(dir / artifact::kProbeReport, text.str());
  write_fold_metrics_csv(r, dir / artifact::kFoldMetrics);
  write_confusion_csv(pooled_metrics(r), dir / artifact::kConfusion);
  for (const auto& f : r.per_fold) {
    write_confusion_csv(f.metrics, dir / ("confusion_fold" + std::to_string(f.fold) + ".csv"));
  }
}

// ---------------------------------------------------------------------------
// Clustering

inline Matrix cluster_points(const EmbeddingSet& set, bool normalize) {
  Matrix points = set.embeddings;
  if (!normalize) return points;
  for (std::size_t r = 0; r < points.rows; ++r) {
    auto row = points.row(r);
    double s = 0.0;
    for (double v : row) s += v * v;
    const double n = std::sqrt(s);
    if (n < kMinRowNorm) throw DegenerateEmbeddingError("zero embedding row " + std::to_string(r));
    for (double& v : row) v /= n;
  }
  return points;
}

inline ClusterReport run_cluster(const EmbeddingSet& set, const RunConfig& cfg) {
  set.validate();
  return silhouette_sweep(cluster_points(set, cfg.cluster.normalize), cfg.cluster.sweep,
                          set.labels, set.source_ids);
}

inline std::string format_cluster_summary(const ClusterReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  out << "best k: " << r.best_k;
  for (const auto& row : r.per_k) {
    if (row.k == r.best_k) out << "  mean silhouette: " << row.mean_silhouette;
  }
  out << '\n';
  if (r.label_silhouette) out << "label silhouette: " << *r.label_silhouette << '\n';
  return out.str();
}

inline std::string format_sweep_table(const ClusterReport& r) {
  std::ostringstream head, vals;
  head << std::left << std::setw(11) << "k";
  vals << std::left << std::setw(11) << "silhouette" << std::fixed << std::setprecision(3);
  for (const auto& row : r.per_k) {
    head << std::right << std::setw(7) << row.k;
    vals << std::right << std::setw(7) << row.mean_silhouette;
  }
  return head.str() + "\n" + vals.str() + "\n";
}

inline void write_cluster_artifacts(const ClusterReport& r, const EmbeddingSet& set,
                                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_sweep_csv(r, dir / artifact::kSweep);
  write_assignments_csv(r, set.source_ids, set.labels, dir / artifact::kAssignments);
  if (r.crosstab) {
    write_crosstab_csv(*r.crosstab, dir / artifact::kCrosstab);
    write_crosstab_samples(*r.crosstab, dir / artifact::kCrosstabSamples);
  }
  write_text_file(dir / artifact::kClusterSummary, format_cluster_summary(r) + format_sweep_table(r));
}

// ---------------------------------------------------------------------------
// Report

// Joins the probe table and the cluster sweep written by earlier stages.
inline std::string collate_report(const std::filesystem::path& probe_dir,
                                  const std::filesystem::path& cluster_dir) {
  std::string out = "== Linear probe ==\n";
  out += read_text_file(probe_dir / artifact::kProbeReport, "probe report");
  out += "\n== Cluster sweep ==\n";
  out += read_text_file(cluster_dir / artifact::kClusterSummary, "cluster summary");
  return out;
}

// ---------------------------------------------------------------------------
// Whole pipeline

struct PipelineSummary {
  std::vector<double> loss_history;
  EvalReport probe;
  ClusterReport cluster;
  SeparationStats separation;
  std::string report;
};

// Runs train, embed, probe, cluster and report on `ds`, writing every
// artifact under `out_dir`. Progress lines go to `log` when given.
inline PipelineSummary run_pipeline(const Dataset& ds, const RunConfig& cfg,
                                    const std::filesystem::path& out_dir,
                                    std::ostream* log = nullptr) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir / artifact::kResolvedConfig, config_to_text(cfg));

  PipelineSummary s;
  TrainArtifacts trained = run_training(ds, cfg, [log](const EpochStats& e) {
    if (log) {
      *log << "epoch " << e.epoch + 1 << " loss " << std::setprecision(6) << e.mean_loss << '\n';
    }
  });
  save_checkpoint(trained.checkpoint, out_dir / artifact::kCheckpoint);
  write_loss_history_csv(trained.loss_history, out_dir / artifact::kLossHistory);
  s.loss_history = trained.loss_history;

  const EmbeddingSet h = run_embedding(ds, trained.checkpoint, EmbeddingSpace::kRepresentation,
                                       cfg.embed_batch);
  save_embeddings(h, out_dir / artifact::kEmbeddings);
  write_embeddings_csv(h, out_dir / artifact::kEmbeddingsCsv);
  s.separation = class_separation(h);

  s.probe = run_probe(h, cfg);
  write_probe_artifacts(s.probe, out_dir / "probe", describe_encoder(cfg.encoder),
                        trained.parameter_count, s.separation);
  if (log) *log << "probe accuracy " << std::setprecision(4) << s.probe.accuracy.mean << '\n';

  const EmbeddingSet cluster_set =
      cfg.cluster.space == EmbeddingSpace::kRepresentation
          ? h
          : run_embedding(ds, trained.checkpoint, cfg.cluster.space, cfg.embed_batch);
  s.cluster = run_cluster(cluster_set, cfg);
  write_cluster_artifacts(s.cluster, cluster_set, out_dir / "cluster");
  if (log) *log << "best k " << s.cluster.best_k << '\n';

  s.report = collate_report(out_dir / "probe", out_dir / "cluster");
  write_text_file(out_dir / artifact::kReport, s.report);
  return s;
}

}  // namespace auroraclr
