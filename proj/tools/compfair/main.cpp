/*
 * Copyright 2026 The compfair Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// compfair: train, compress and audit small CNN classifiers.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "compfair/compfair.hpp"

namespace cf = compfair;
namespace fs = std::filesystem;

namespace {

std::uint64_t stage_seed(std::uint64_t seed, const char* stage) { return cf::Rng(seed).split(stage).key(); }

struct DataOptions {
  std::string manifest;
  std::string image_root;
  double test_fraction = 0.3;
  std::string split = "test";
};

void add_data_options(CLI::App* app, DataOptions& d, bool required) {
  auto* m = app->add_option("--manifest", d.manifest, "Manifest CSV: path,label,subject_id[,attr:<name>...]");
  if (required) m->required();
  m->check(CLI::ExistingFile);
  app->add_option("--image-root", d.image_root, "Directory image paths are relative to (default: manifest's directory)");
  app->add_option("--test-fraction", d.test_fraction, "Fraction of subjects held out")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
}

cf::GroupedDataset load_for(const cf::Model& model, const DataOptions& d) {
  cf::ManifestOptions opts;
  const auto& in = model.input_shape();
  if (in.size() != 3 || (in[2] != 1 && in[2] != 3))
    throw cf::ParameterError("model input must be [H, W, 1|3] to read images, got " + cf::to_string(in));
  opts.preprocess = {in[0], in[1], in[2] == 1};
  const fs::path root = d.image_root.empty() ? fs::path(d.manifest).parent_path() : fs::path(d.image_root);
  cf::GroupedDataset ds = cf::load_manifest(d.manifest, root, opts);
  if (ds.num_classes() > model.num_classes())
    throw cf::ParameterError("manifest has " + std::to_string(ds.num_classes()) + " classes, model outputs " +
                             std::to_string(model.num_classes()));
  return ds;
}

std::pair<cf::GroupedDataset, cf::GroupedDataset> split_for(const cf::GroupedDataset& ds, const DataOptions& d,
                                                            std::uint64_t seed) {
  return cf::split_by_subject(ds, d.test_fraction, stage_seed(seed, "split"));
}

cf::GroupedDataset select_split(const cf::GroupedDataset& ds, const DataOptions& d, std::uint64_t seed) {
  if (d.split == "all") return ds;
  auto [train, test] = split_for(ds, d, seed);
  return d.split == "train" ? std::move(train) : std::move(test);
}

cf::Model resolve_arch(const std::string& arch, std::uint64_t seed) {
  if (arch == "ck48") return cf::build_ck48(seed);
  if (arch == "raf100") return cf::build_raf100(seed);
  return cf::load_architecture(arch, seed);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cf::IoError("cannot write " + path.string());
  out << text;
  if (!out) throw cf::IoError("write failed for " + path.string());
}

std::string mb(std::size_t bytes) { return cf::csv::format_fixed(static_cast<double>(bytes) / 1e6, 6); }

// ---------------------------------------------------------------------------

struct TrainArgs {
  DataOptions data;
  std::string arch = "ck48";
  std::string out = "model.nncm";
  std::string log;
  cf::TrainConfig config;
  bool no_augment = false;
  std::uint64_t seed = 0;
};

int cmd_train(const TrainArgs& a) {
  cf::Model model = resolve_arch(a.arch, stage_seed(a.seed, "init"));
  const cf::GroupedDataset ds = load_for(model, a.data);
  auto [train, val] = split_for(ds, a.data, a.seed);
  std::cout << "train: " << train.size() << " samples, validation: " << val.size() << " samples, "
            << model.trainable_parameter_count() << " trainable parameters\n";
  cf::TrainConfig config = a.config;
  config.augment = !a.no_augment;
  config.seed = stage_seed(a.seed, "train");
  const cf::FitResult r = cf::fit(std::move(model), train, val, config);
  for (const auto& e : r.log.epochs)
    std::printf("epoch %zu  train_acc %.4f  train_loss %.4f  val_acc %.4f  val_loss %.4f\n", e.epoch,
                e.train_accuracy, e.train_loss, e.val_accuracy, e.val_loss);
  const std::size_t bytes = cf::save(r.model, a.out);
  const fs::path log = a.log.empty() ? fs::path(a.out).replace_extension(".log.csv") : fs::path(a.log);
  r.log.write_csv(log);
  std::printf("best epoch %zu\nvalidation accuracy %.4f\n", r.log.best_epoch,
              r.log.epochs[r.log.best_epoch - 1].val_accuracy);
  std::cout << "wrote " << a.out << " (" << bytes << " bytes) and " << log.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct CompressArgs {
  DataOptions data;
  std::string model;
  std::vector<double> prune;
  std::vector<std::size_t> cluster;
  bool quantize = false;
  bool no_finetune = false;
  bool per_layer = false;
  bool kmeans_pp = false;
  std::string cluster_scope = "kernels";
  std::string out_dir = ".";
  cf::TrainConfig config;
  bool no_augment = false;
  std::uint64_t seed = 0;
  CLI::Option* prune_opt = nullptr;
  CLI::Option* cluster_opt = nullptr;
  CLI::Option* quantize_opt = nullptr;
};

cf::CompressionPlan plan_from_parse_order(const CLI::App& app, const CompressArgs& a) {
  cf::CompressionPlan plan;
  std::size_t pi = 0, ci = 0;
  for (const CLI::Option* opt : app.parse_order()) {
    if (opt == a.prune_opt) plan.steps.push_back(cf::CompressionStep::prune(a.prune.at(pi++) / 100.0));
    else if (opt == a.cluster_opt) plan.steps.push_back(cf::CompressionStep::cluster(a.cluster.at(ci++)));
    else if (opt == a.quantize_opt) plan.steps.push_back(cf::CompressionStep::quantize());
  }
  return plan;
}

int cmd_compress(const CLI::App& app, const CompressArgs& a) {
  const cf::CompressionPlan plan = plan_from_parse_order(app, a);
  const cf::LoadedModel input = cf::load_model(a.model);
  plan.validate(cf::history_quantized(input.compression));

  cf::PipelineOptions opts;
  // Quantization is post-training; only prune and cluster steps fine-tune.
  const bool trains = std::any_of(plan.steps.begin(), plan.steps.end(),
                                  [](const cf::CompressionStep& s) { return s.kind != cf::StepKind::Quantize; });
  opts.finetune = !a.no_finetune && trains;
  opts.finetune_config = a.config;
  opts.finetune_config.augment = !a.no_augment;
  opts.prune_scope = a.per_layer ? cf::PruneScope::PerLayer : cf::PruneScope::Global;
  opts.cluster_options.init = a.kmeans_pp ? cf::CentroidInit::KMeansPlusPlus : cf::CentroidInit::Linear;
  opts.cluster_options.scope = a.cluster_scope == "trainable" ? cf::ClusterScope::Trainable : cf::ClusterScope::Kernels;
  opts.seed = a.seed;

  std::optional<cf::GroupedDataset> train, val;
  if (opts.finetune) {
    if (a.data.manifest.empty()) throw cf::ParameterError("--manifest is required unless --no-finetune is given");
    const cf::GroupedDataset ds = load_for(input.model, a.data);
    auto parts = split_for(ds, a.data, a.seed);
    train = std::move(parts.first);
    val = std::move(parts.second);
  }

  const auto stages = cf::run_plan(input, plan, train ? &*train : nullptr, val ? &*val : nullptr, opts);
  fs::create_directories(a.out_dir);
  std::string stem = fs::path(a.model).stem().string();
  const auto in_size = cf::measure_size(a.model);
  std::cout << "input " << a.model << ": raw " << in_size.raw_bytes << " bytes, deflated " << in_size.deflated_bytes
            << " bytes (" << mb(in_size.deflated_bytes) << " MB)\n";
  for (std::size_t i = 0; i < stages.size(); ++i) {
    stem += "." + stages[i].step.tag();
    const fs::path path = fs::path(a.out_dir) / (stem + ".nncm");
    const auto bytes = cf::encode(stages[i].file);
    cf::write_bytes(path, bytes);
    const std::size_t deflated = cf::deflated_size(bytes);
    if (stages[i].finetune_log) {
      const auto& log = *stages[i].finetune_log;
      std::printf("stage %zu %s: fine-tuned %zu epochs, best val_acc %.4f\n", i + 1, stages[i].step.tag().c_str(),
                  log.epochs.size(), log.epochs[log.best_epoch - 1].val_accuracy);
    }
    std::cout << "stage " << i + 1 << " " << stages[i].step.tag() << " [" << cf::model_label(stages[i].history)
              << "]: raw " << bytes.size() << " bytes, deflated " << deflated << " bytes (" << mb(deflated)
              << " MB) -> " << path.string() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  DataOptions data;
  std::string model;
  std::string predictions;
  std::uint64_t seed = 0;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const cf::LoadedModel loaded = cf::load_model(a.model);
  const cf::GroupedDataset ds = select_split(load_for(loaded.model, a.data), a.data, a.seed);
  const cf::EvalResult r = cf::evaluate_model(loaded.model, ds);
  std::printf("samples %zu\naccuracy %.4f\nloss %.4f\n", ds.size(), r.accuracy, r.loss);
  if (!a.predictions.empty()) {
    const auto pred = cf::predict(loaded.model, ds);
    std::ostringstream out;
    out << "index,path,subject_id,label,prediction\n";
    for (std::size_t i = 0; i < ds.size(); ++i)
      cf::csv::write_row(out, {std::to_string(i), ds.samples[i].path, ds.samples[i].subject_id,
                               ds.class_names[ds.samples[i].label], ds.class_names.at(pred[i])});
    write_text(a.predictions, out.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct AuditArgs {
  DataOptions data;
  std::vector<std::string> models;
  std::vector<std::string> labels;
  std::vector<std::string> attributes;
  std::string out_csv = "audit.csv";
  std::string out_json = "audit.json";
  std::uint64_t seed = 0;
};

int cmd_audit(const AuditArgs& a) {
  if (!a.labels.empty() && a.labels.size() != a.models.size())
    throw cf::ParameterError("--label must be given once per model");
  std::vector<cf::FairnessReport> reports;
  std::optional<cf::GroupedDataset> ds;
  for (std::size_t i = 0; i < a.models.size(); ++i) {
    const cf::LoadedModel loaded = cf::load_model(a.models[i]);
    if (!ds) ds = select_split(load_for(loaded.model, a.data), a.data, a.seed);
    const auto size = cf::measure_size(a.models[i]);
    const std::string label = a.labels.empty() ? cf::model_label(loaded.compression) : a.labels[i];
    cf::FairnessReport r = cf::build_report(label, cf::predict(loaded.model, *ds), *ds, a.attributes);
    r.size_bytes = size.deflated_bytes;
    r.raw_bytes = size.raw_bytes;
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    reports.push_back(std::move(r));
  }
  const std::string table = cf::reports_to_csv(reports);
  write_text(a.out_csv, table);
  write_text(a.out_json, cf::to_json(reports).dump(2) + "\n");
  std::cout << table;
  for (const auto& r : reports)
    for (const auto& at : r.attributes)
      if (at.gap) std::printf("%s: %s gap %s\n", r.model.c_str(), at.attribute.c_str(),
                              cf::csv::format_fixed(*at.gap * 100.0, 2).c_str());
  std::cout << "wrote " << a.out_csv << " and " << a.out_json << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out = "synth";
  cf::SyntheticSpec spec;
  std::string groups = "female:0.7:0,male:0.3:0.15";
  std::string group_name = "gender";
  std::vector<std::string> attributes;
};

int cmd_synth(const SynthArgs& a) {
  cf::SyntheticSpec spec = a.spec;
  spec.attributes.push_back(cf::parse_attribute_spec(a.group_name, a.groups));
  for (const auto& item : a.attributes) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw cf::ParameterError("--attribute must look like name=value:proportion[:difficulty],...");
    spec.attributes.push_back(cf::parse_attribute_spec(item.substr(0, eq), item.substr(eq + 1)));
  }
  const cf::GroupedDataset ds = cf::generate_synthetic(spec);
  cf::write_dataset(ds, a.out);
  std::cout << "wrote " << ds.size() << " images and " << (fs::path(a.out) / "manifest.csv").string() << "\n";
  for (const auto& attr : ds.attributes)
    for (const auto& [value, count] : ds.group_counts(attr.name))
      std::cout << "  " << attr.name << "=" << value << ": " << count << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_measure(const std::string& path) {
  const cf::SizeReport s = cf::measure_size(path);
  std::cout << "raw_bytes " << s.raw_bytes << "\ndeflated_bytes " << s.deflated_bytes << "\nsize_mb "
            << cf::csv::format_fixed(s.megabytes(), 6) << "\n";
  return 0;
}

struct AnalyzeArgs {
  std::string model;
  std::string layer;
  cf::HistogramOptions hist;
  std::string out;
  double sparsity = -1.0;
};

int cmd_analyze(const AnalyzeArgs& a) {
  const cf::LoadedModel loaded = cf::load_model(a.model);
  if (a.layer.empty()) {
    for (const auto& l : loaded.model.layers())
      if (l.find("kernel")) std::cout << l.name << " " << cf::to_string(l.find("kernel")->value.shape()) << "\n";
  } else {
    const cf::Histogram h = cf::weight_histogram(loaded.model, a.layer, a.hist);
    if (a.out.empty()) std::cout << cf::histogram_csv(h);
    else write_text(a.out, cf::histogram_csv(h));
  }
  if (a.sparsity >= 0.0) {
    const cf::GapStats g = cf::pruning_gap_stats(loaded.model, a.sparsity / 100.0);
    std::printf("sparsity %.4f\npruned %zu of %zu\nthreshold %.9g\nremoved_mass %.9g\n"
                "removed_mass_per_weight %.9g\nremoved_fraction %.9g\n",
                g.sparsity, g.pruned, g.total, g.threshold, g.removed_mass, g.removed_mass_per_weight(),
                g.removed_fraction());
  }
  return 0;
}

void add_train_config(CLI::App* app, cf::TrainConfig& c, bool& no_augment) {
  app->add_option("--epochs", c.epochs, "Training epochs")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--batch-size", c.batch_size, "Mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--lr", c.learning_rate, "Adam learning rate")->capture_default_str();
  app->add_option("--beta1", c.adam_beta1, "Adam beta1")->capture_default_str();
  app->add_option("--beta2", c.adam_beta2, "Adam beta2")->capture_default_str();
  app->add_option("--adam-epsilon", c.adam_epsilon, "Adam epsilon")->capture_default_str();
  app->add_flag("--no-augment", no_augment, "Disable random flip/rotation augmentation");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compfair: train, compress (prune / cluster / quantize) and audit CNN classifiers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "compfair 0.1.0");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model on a manifest (cross-subject split)");
  add_data_options(t, train.data, true);
  t->add_option("--arch", train.arch, "ck48, raf100 or a JSON architecture file")->capture_default_str();
  t->add_option("--out", train.out, "Output model file")->capture_default_str();
  t->add_option("--log", train.log, "Training log CSV (default: <out> with extension .log.csv)");
  t->add_option("--seed", train.seed, "Seed for split, init, shuffling, augmentation and dropout")->capture_default_str();
  add_train_config(t, train.config, train.no_augment);

  CompressArgs comp;
  comp.config.epochs = cf::kFinetuneEpochs;
  auto* c = app.add_subcommand("compress", "Apply prune/cluster/quantize steps in the order given");
  c->add_option("--model", comp.model, "Input model file")->required()->check(CLI::ExistingFile);
  add_data_options(c, comp.data, false);
  comp.prune_opt = c->add_option("--prune", comp.prune, "Prune to this sparsity, in percent (e.g. 50)")
                       ->check(CLI::Range(0.0, 100.0))
                       ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
                       ->expected(1);
  comp.cluster_opt = c->add_option("--cluster", comp.cluster, "Cluster weights into this many centroids (2-256)")
                         ->check(CLI::Range(2, 256))
                         ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
                         ->expected(1);
  comp.quantize_opt = c->add_flag("--quantize", comp.quantize, "Post-training int8 quantization (must be last)");
  c->add_flag("--no-finetune", comp.no_finetune, "Skip fine-tuning after prune/cluster steps");
  c->add_flag("--per-layer", comp.per_layer, "Rank magnitudes per tensor instead of globally");
  c->add_flag("--kmeans-pp", comp.kmeans_pp, "k-means++ centroid initialization instead of linear");
  c->add_option("--cluster-scope", comp.cluster_scope, "kernels or trainable")
      ->check(CLI::IsMember({"kernels", "trainable"}))
      ->capture_default_str();
  c->add_option("--out-dir", comp.out_dir, "Directory for the per-stage model files")->capture_default_str();
  c->add_option("--seed", comp.seed, "Seed (must match training to reuse its split)")->capture_default_str();
  add_train_config(c, comp.config, comp.no_augment);

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Accuracy and loss of a model on a manifest split");
  e->add_option("--model", ev.model, "Model file")->required()->check(CLI::ExistingFile);
  add_data_options(e, ev.data, true);
  e->add_option("--split", ev.data.split, "test, train or all")->check(CLI::IsMember({"test", "train", "all"}))->capture_default_str();
  e->add_option("--seed", ev.seed, "Seed used for the split")->capture_default_str();
  e->add_option("--predictions", ev.predictions, "Write per-sample predictions to this CSV");

  AuditArgs au;
  auto* u = app.add_subcommand("audit", "Per-group accuracy report for one or more models");
  u->add_option("--model,models", au.models, "Model files (one report row each)")->required()->check(CLI::ExistingFile);
  u->add_option("--label", au.labels, "Row label per model (default: derived from compression history)");
  add_data_options(u, au.data, true);
  u->add_option("--attributes", au.attributes, "Attributes to audit (default: all)")->delimiter(',');
  u->add_option("--split", au.data.split, "test, train or all")->check(CLI::IsMember({"test", "train", "all"}))->capture_default_str();
  u->add_option("--seed", au.seed, "Seed used for the split")->capture_default_str();
  u->add_option("--out-csv", au.out_csv, "Table CSV")->capture_default_str();
  u->add_option("--out-json", au.out_json, "Nested JSON report with exact counts")->capture_default_str();

  SynthArgs sy;
  auto* s = app.add_subcommand("synth-data", "Generate a synthetic grouped image dataset");
  s->add_option("--out", sy.out, "Output directory")->capture_default_str();
  s->add_option("--samples", sy.spec.n_samples, "Number of images")->capture_default_str();
  s->add_option("--classes", sy.spec.n_classes, "Number of classes")->capture_default_str();
  s->add_option("--image-size", sy.spec.image_size, "Square image side")->capture_default_str();
  s->add_option("--samples-per-subject", sy.spec.samples_per_subject, "Images per subject")->capture_default_str();
  s->add_option("--noise", sy.spec.noise, "Base pixel noise stddev")->capture_default_str();
  s->add_option("--groups", sy.groups, "Primary attribute groups value:proportion[:difficulty],...")->capture_default_str();
  s->add_option("--group-name", sy.group_name, "Primary attribute name")->capture_default_str();
  s->add_option("--attribute", sy.attributes, "Extra attribute name=value:proportion[:difficulty],... (repeatable)");
  s->add_option("--seed", sy.spec.seed, "Seed")->capture_default_str();

  std::string measure_path;
  auto* m = app.add_subcommand("measure-size", "Raw and DEFLATE-compressed size of a file");
  m->add_option("path", measure_path, "File to measure")->required();

  AnalyzeArgs an;
  auto* w = app.add_subcommand("analyze-weights", "Kernel weight histogram and pruning gap statistics");
  w->add_option("--model", an.model, "Model file")->required()->check(CLI::ExistingFile);
  w->add_option("--layer", an.layer, "Layer name (omit to list layers with kernels)");
  w->add_option("--bins", an.hist.bins, "Number of bins")->capture_default_str()->check(CLI::PositiveNumber);
  w->add_flag("--symmetric", an.hist.symmetric, "Range centred at 0");
  w->add_option("--out", an.out, "Histogram CSV (default: stdout)");
  w->add_option("--sparsity", an.sparsity, "Report pruning gap statistics at this sparsity, in percent")
      ->check(CLI::Range(0.0, 100.0));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*t) return cmd_train(train);
    if (*c) return cmd_compress(*c, comp);
    if (*e) return cmd_evaluate(ev);
    if (*u) return cmd_audit(au);
    if (*s) return cmd_synth(sy);
    if (*m) return cmd_measure(measure_path);
    if (*w) return cmd_analyze(an);
  } catch (const cf::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 2;
}
