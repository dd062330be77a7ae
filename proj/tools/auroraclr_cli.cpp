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


// auroraclr command-line driver: preprocess, train, embed, probe, cluster,
// report and run (all stages in sequence).

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "auroraclr/auroraclr.hpp"

namespace fs = std::filesystem;
using namespace auroraclr;

namespace {

struct ConfigOptions {
  std::string preset = "desk";
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_config_options(CLI::App* cmd, ConfigOptions& opt) {
  cmd->add_option("--preset", opt.preset, "Base settings before overrides")
      ->check(CLI::IsMember({"desk", "full"}))
      ->capture_default_str();
  cmd->add_option("--config", opt.config_file, "Config file of 'section.key = value' lines");
  cmd->add_option("--set", opt.overrides, "Override one key, as section.key=value (repeatable)");
  cmd->add_option("--seed", opt.seed, "Seed for every stochastic component");
}

RunConfig resolve_config(const ConfigOptions& opt) {
  RunConfig cfg = opt.preset == "full" ? RunConfig::full_scale() : RunConfig{};
  if (!opt.config_file.empty()) cfg = load_config_file(opt.config_file, cfg);
  for (const auto& kv : opt.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opt.seed) cfg.seed = *opt.seed;
  cfg.propagate_seed();
  cfg.validate();
  return cfg;
}

void print_class_counts(const Dataset& ds) {
  const auto counts = ds.class_counts();
  std::cout << "records: " << ds.size() << '\n';
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::cout << "  " << kClassNames[c] << ": " << counts[c] << '\n';
  }
}

Dataset load_cache(const fs::path& path) {
  require_artifact(path, "dataset cache");
  return load_dataset_cache(path);
}

EmbeddingSet load_embedding_file(const fs::path& path) {
  require_artifact(path, "embeddings file");
  return load_embeddings(path);
}

// ---------------------------------------------------------------------------

struct PreprocessArgs {
  std::string images, labels, out;
  std::size_t synthetic = 0;
  std::uint64_t seed = 42;
  std::size_t image_size = 48;
  double crop = kDefaultCropFraction;
};

int cmd_preprocess(const PreprocessArgs& a) {
  Dataset ds;
  if (a.synthetic > 0) {
    ds = generate_synthetic_dataset(a.synthetic, a.image_size, a.seed);
  } else {
    if (a.images.empty() || a.labels.empty()) {
      throw InputError("preprocess needs --images and --labels, or --synthetic N");
    }
    LoadReport rep = load_oath_dataset(a.images, a.labels, a.crop);
    for (const auto& e : rep.errors) std::cerr << "warning: " << e << '\n';
    if (rep.degenerate > 0) std::cout << "degenerate frames: " << rep.degenerate << '\n';
    ds = std::move(rep.dataset);
  }
  save_dataset_cache(ds, a.out);
  print_class_counts(ds);
  return 0;
}

struct TrainArgs {
  ConfigOptions cfg;
  std::string data, out, history;
};

int cmd_train(const TrainArgs& a) {
  const RunConfig cfg = resolve_config(a.cfg);
  const Dataset ds = load_cache(a.data);
  std::cout << "# resolved configuration\n" << config_to_text(cfg) << std::flush;
  const TrainArtifacts t = run_training(ds, cfg, [](const EpochStats& e) {
    std::cout << "epoch " << e.epoch + 1 << " loss " << std::setprecision(6) << e.mean_loss
              << std::endl;
  });
  save_checkpoint(t.checkpoint, a.out);
  const fs::path history =
      a.history.empty() ? fs::path(a.out).replace_extension(".loss.csv") : fs::path(a.history);
  write_loss_history_csv(t.loss_history, history);
  std::cout << "checkpoint: " << a.out << "\nloss history: " << history.string() << '\n';
  return 0;
}

struct EmbedArgs {
  std::string data, checkpoint, out, csv, space = "h";
  std::size_t batch = 16;
};

int cmd_embed(const EmbedArgs& a) {
  const Dataset ds = load_cache(a.data);
  require_artifact(a.checkpoint, "checkpoint");
  const ModelCheckpoint ck = load_checkpoint(a.checkpoint);
  const EmbeddingSet set = run_embedding(
      ds, ck, a.space == "z" ? EmbeddingSpace::kProjection : EmbeddingSpace::kRepresentation,
      a.batch);
  save_embeddings(set, a.out);
  if (!a.csv.empty()) write_embeddings_csv(set, a.csv);
  std::cout << "embeddings: " << set.size() << " x " << set.dim() << " -> " << a.out << '\n';
  return 0;
}

struct ProbeArgs {
  ConfigOptions cfg;
  std::string embeddings, checkpoint, out_dir;
};

int cmd_probe(const ProbeArgs& a) {
  const RunConfig cfg = resolve_config(a.cfg);
  const EmbeddingSet set = load_embedding_file(a.embeddings);
  std::string model_name = "encoder";
  std::size_t params = 0;
  if (!a.checkpoint.empty()) {
    require_artifact(a.checkpoint, "checkpoint");
    RestoredModel m = restore_model(load_checkpoint(a.checkpoint));
    model_name = describe_encoder(m.encoder.config());
    params = m.encoder.parameter_count() + m.head.input_dim() * m.head.hidden_dim() +
             m.head.hidden_dim() * m.head.projection_dim();
  }
  const EvalReport r = run_probe(set, cfg);
  write_probe_artifacts(r, a.out_dir, model_name, params, class_separation(set));
  std::cout << read_text_file(fs::path(a.out_dir) / artifact::kProbeReport, "probe report");
  return 0;
}

struct ClusterArgs {
  ConfigOptions cfg;
  std::string embeddings, out_dir;
  std::optional<std::size_t> k_min, k_max;
  bool normalize = false;
};

int cmd_cluster(const ClusterArgs& a) {
  RunConfig cfg = resolve_config(a.cfg);
  if (a.k_min) cfg.cluster.sweep.k_min = *a.k_min;
  if (a.k_max) cfg.cluster.sweep.k_max = *a.k_max;
  if (a.normalize) cfg.cluster.normalize = true;
  cfg.validate();
  const EmbeddingSet set = load_embedding_file(a.embeddings);
  const ClusterReport r = run_cluster(set, cfg);
  write_cluster_artifacts(r, set, a.out_dir);
  std::cout << format_cluster_summary(r) << format_sweep_table(r);
  return 0;
}

struct ReportArgs {
  std::string probe_dir, cluster_dir, out;
};

int cmd_report(const ReportArgs& a) {
  const std::string text = collate_report(a.probe_dir, a.cluster_dir);
  if (!a.out.empty()) write_text_file(a.out, text);
  std::cout << text;
  return 0;
}

struct RunArgs {
  ConfigOptions cfg;
  std::string data, out_dir;
};

int cmd_run(const RunArgs& a) {
  const RunConfig cfg = resolve_config(a.cfg);
  fs::create_directories(a.out_dir);
  Dataset ds;
  if (a.data.empty()) {
    ds = synthetic_dataset(cfg);
    save_dataset_cache(ds, fs::path(a.out_dir) / artifact::kDatasetCache);
  } else {
    ds = load_cache(a.data);
  }
  print_class_counts(ds);
  const PipelineSummary s = run_pipeline(ds, cfg, a.out_dir, &std::cout);
  std::cout << s.report;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"auroraclr: contrastive representation learning for all-sky auroral images"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* c_pre = app.add_subcommand("preprocess", "Build a dataset cache from images or synthetic data");
  c_pre->add_option("--images", pre.images, "Directory of PNG/PGM frames");
  c_pre->add_option("--labels", pre.labels, "CSV with header 'filename,label'");
  c_pre->add_option("--synthetic", pre.synthetic, "Generate N synthetic images per class");
  c_pre->add_option("--seed", pre.seed, "Synthetic generator seed")->capture_default_str();
  c_pre->add_option("--image-size", pre.image_size, "Synthetic image side")->capture_default_str();
  c_pre->add_option("--crop", pre.crop, "Fraction of each dimension cropped away, split evenly between both borders")
      ->capture_default_str();
  c_pre->add_option("--out", pre.out, "Output cache file")->required();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train encoder and head with the contrastive loss");
  add_config_options(c_train, tr.cfg);
  c_train->add_option("--data", tr.data, "Dataset cache")->required();
  c_train->add_option("--out", tr.out, "Output checkpoint")->required();
  c_train->add_option("--history", tr.history, "Loss history CSV (default: checkpoint path with extension .loss.csv)");

  EmbedArgs em;
  auto* c_embed = app.add_subcommand("embed", "Extract embeddings with a trained checkpoint");
  c_embed->add_option("--data", em.data, "Dataset cache")->required();
  c_embed->add_option("--checkpoint", em.checkpoint, "Trained checkpoint")->required();
  c_embed->add_option("--out", em.out, "Output embeddings file")->required();
  c_embed->add_option("--csv", em.csv, "Also write embeddings as CSV");
  c_embed->add_option("--space", em.space, "h (representation) or z (projection)")
      ->check(CLI::IsMember({"h", "z"}))
      ->capture_default_str();
  c_embed->add_option("--batch", em.batch, "Inference batch size")->capture_default_str();

  ProbeArgs pr;
  auto* c_probe = app.add_subcommand("probe", "Cross-validated linear probe on embeddings");
  add_config_options(c_probe, pr.cfg);
  c_probe->add_option("--embeddings", pr.embeddings, "Embeddings file")->required();
  c_probe->add_option("--checkpoint", pr.checkpoint, "Checkpoint, for the parameter count");
  c_probe->add_option("--out-dir", pr.out_dir, "Output directory")->required();

  ClusterArgs cl;
  auto* c_cluster = app.add_subcommand("cluster", "K-means silhouette sweep on embeddings");
  add_config_options(c_cluster, cl.cfg);
  c_cluster->add_option("--embeddings", cl.embeddings, "Embeddings file")->required();
  c_cluster->add_option("--out-dir", cl.out_dir, "Output directory")->required();
  c_cluster->add_option("--k-min", cl.k_min, "Smallest k in the sweep");
  c_cluster->add_option("--k-max", cl.k_max, "Largest k in the sweep");
  c_cluster->add_flag("--normalize", cl.normalize, "L2-normalise embeddings first");

  ReportArgs rp;
  auto* c_report = app.add_subcommand("report", "Collate probe and cluster outputs");
  c_report->add_option("--probe-dir", rp.probe_dir, "Probe output directory")->required();
  c_report->add_option("--cluster-dir", rp.cluster_dir, "Cluster output directory")->required();
  c_report->add_option("--out", rp.out, "Write the summary here as well");

  RunArgs rn;
  auto* c_run = app.add_subcommand("run", "Run every stage end to end");
  add_config_options(c_run, rn.cfg);
  c_run->add_option("--data", rn.data, "Dataset cache (default: synthetic data from config)");
  c_run->add_option("--out-dir", rn.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*c_pre) return cmd_preprocess(pre);
    if (*c_train) return cmd_train(tr);
    if (*c_embed) return cmd_embed(em);
    if (*c_probe) return cmd_probe(pr);
    if (*c_cluster) return cmd_cluster(cl);
    if (*c_report) return cmd_report(rp);
    if (*c_run) return cmd_run(rn);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const DegenerateEmbeddingError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
