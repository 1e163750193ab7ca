#include "mvg/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "mvg/checkpoint.hpp"
#include "mvg/corpus_io.hpp"
#include "mvg/eval.hpp"
#include "mvg/glitchgen.hpp"
#include "mvg/train.hpp"

namespace mvg {

namespace fs = std::filesystem;

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"single0", "single1", "single2", "single3", "parallel", "merged"};
  return names;
}

ArchitectureConfig architecture_for(const std::string& name) {
  for (std::size_t d = 0; d < kViewCount; ++d)
    if (name == "single" + std::to_string(d)) return ArchitectureConfig::single_view(d);
  if (name == "parallel") return ArchitectureConfig::parallel_view();
  if (name == "merged") return ArchitectureConfig::merged_view();
  std::string valid;
  for (const auto& n : model_names()) valid += (valid.empty() ? "" : ",") + n;
  throw UsageError("unknown model '" + name + "'; valid models: " + valid);
}

namespace {

struct GenDataOptions {
  std::string out;
  std::size_t per_class = 0;
  std::uint64_t seed = 1;
  std::string scale = "desk";
};

struct TrainOptions {
  std::string data;
  std::string model;
  std::size_t epochs = 130;
  std::size_t batch = 30;
  std::uint64_t seed = 1;
  std::string out;
  std::string log;
  bool mean_reduction = false;
  std::string unit = "epoch";
};

struct EvalOptions {
  std::string ckpt;
  std::string data;
  std::string split = "test";
};

struct PredictOptions {
  std::string ckpt;
  std::vector<std::string> samples;
};

int gen_data(const GenDataOptions& o, std::ostream& out, std::ostream& err) {
  std::size_t per_class = o.per_class;
  if (o.scale != "desk" && o.scale != "paper") throw UsageError("--scale must be 'desk' or 'paper'");
  if (per_class == 0) per_class = o.scale == "paper" ? kPaperPerClass : kDeskPerClass;
  const Corpus corpus = generate_corpus(per_class, o.seed);
  export_corpus(corpus, o.out);

  const std::size_t total = corpus.samples.size();
  if (o.scale == "paper") {
    const long delta = static_cast<long>(total) - static_cast<long>(kPaperCorpusSize);
    err << "note: paper scale uses " << per_class << " samples per class = " << total << " samples ("
        << (delta >= 0 ? "+" : "") << delta << " vs the reference corpus of " << kPaperCorpusSize << ")\n";
  }
  const fs::path manifest = fs::path(o.out) / kManifestName;
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw IoError("cannot reopen '" + manifest.string() + "'");
  out << in.rdbuf();
  err << "wrote " << total << " samples to " << o.out << " (";
  for (Split s : {Split::train, Split::validation, Split::test})
    err << to_string(s) << ' ' << corpus.indices(s).size() << (s == Split::test ? ")\n" : ", ");
  return 0;
}

IterationUnit parse_unit(const std::string& unit) {
  if (unit == "epoch") return IterationUnit::epoch;
  if (unit == "batch") return IterationUnit::batch;
  throw UsageError("--iteration-unit must be 'epoch' or 'batch'");
}

int train_model(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  const ArchitectureConfig arch = architecture_for(o.model);
  TrainConfig config;
  config.epochs = o.epochs;
  config.batch = o.batch;
  config.seed = o.seed;
  config.mean_reduction = o.mean_reduction;
  config.unit = parse_unit(o.unit);

  const Corpus corpus = import_corpus(o.data);
  if (corpus.geometry.rows != arch.view_rows || corpus.geometry.cols != arch.view_cols)
    throw ValidationError("corpus views are " + std::to_string(corpus.geometry.rows) + "x" +
                          std::to_string(corpus.geometry.cols) + ", model '" + o.model + "' expects " +
                          std::to_string(arch.view_rows) + "x" + std::to_string(arch.view_cols));

  std::ofstream log_file;
  std::ostream* log = &out;
  if (!o.log.empty()) {
    log_file.open(o.log, std::ios::trunc);
    if (!log_file) throw IoError("cannot open log '" + o.log + "' for writing");
    log = &log_file;
  }
  *log << "epoch,train_loss,val_accuracy\n" << std::setprecision(9);

  const std::uint64_t init_seed = model_init_seed(o.seed);
  Model<Real> model = Model<Real>::build(arch, init_seed);
  const TrainingReport report = train(model, corpus, config, [&](const EpochRecord& r) {
    *log << r.epoch << ',' << r.train_loss << ',' << r.val_accuracy << '\n';
    log->flush();
  });

  CheckpointMeta meta;
  meta.classes = corpus.classes;
  meta.init_seed = init_seed;
  meta.corpus_seed = corpus.seed;
  meta.epochs = static_cast<std::uint32_t>(o.epochs);
  meta.batch = static_cast<std::uint32_t>(o.batch);
  meta.train_seed = o.seed;
  meta.mean_reduction = o.mean_reduction;
  meta.unit = config.unit;
  save_checkpoint(o.out, model, meta);
  err << "saved " << o.out << " (best epoch " << report.best_epoch << ", validation accuracy "
      << report.best_val_accuracy << ")\n";
  return 0;
}

void require_compatible(const CheckpointMeta& meta, const Corpus& corpus) {
  const ArchitectureConfig& a = meta.architecture;
  if (corpus.geometry.rows != a.view_rows || corpus.geometry.cols != a.view_cols)
    throw ValidationError("checkpoint expects " + std::to_string(a.view_rows) + "x" + std::to_string(a.view_cols) +
                          " views, corpus has " + std::to_string(corpus.geometry.rows) + "x" +
                          std::to_string(corpus.geometry.cols));
  if (corpus.classes != meta.classes) throw ValidationError("checkpoint and corpus class lists differ");
}

int eval_model(const EvalOptions& o, std::ostream& out, std::ostream&) {
  Split split = Split::test;
  if (o.split == "validation") split = Split::validation;
  else if (o.split != "test") throw UsageError("--split must be 'test' or 'validation'");
  const LoadedCheckpoint<Real> loaded = load_checkpoint<Real>(o.ckpt);
  const Corpus corpus = import_corpus(o.data);
  require_compatible(loaded.meta, corpus);
  out << evaluate(loaded.model, corpus, split).to_csv();
  return 0;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, ',')) parts.push_back(part);
  return parts;
}

int predict(const PredictOptions& o, std::ostream& out, std::ostream&) {
  const LoadedCheckpoint<Real> loaded = load_checkpoint<Real>(o.ckpt);
  const ArchitectureConfig& arch = loaded.meta.architecture;
  const Shape expected{1, arch.view_rows, arch.view_cols};

  out << "sample,predicted_index,predicted_class";
  for (const auto& c : loaded.meta.classes) out << ',' << c.name;
  out << '\n' << std::setprecision(9);

  for (const std::string& spec : o.samples) {
    const std::vector<std::string> paths = split_commas(spec);
    MultiViewSample sample;
    if (paths.size() == kViewCount) {
      for (std::size_t v = 0; v < kViewCount; ++v) sample.views[v] = read_view(paths[v]);
    } else if (paths.size() == 1 && arch.kind == ArchitectureKind::single_view) {
      BasicTensor<float> view = read_view(paths[0]);
      sample.views.fill(view);
    } else {
      throw UsageError("sample '" + spec + "' must list " + std::to_string(kViewCount) +
                       " comma-separated view files (0.5s,1s,2s,4s)" +
                       (arch.kind == ArchitectureKind::single_view ? " or a single view file" : ""));
    }
    for (std::size_t v = 0; v < kViewCount; ++v)
      if (!(sample.views[v].shape() == expected))
        throw ValidationError("view " + std::to_string(v) + " of '" + spec + "' is [" +
                              sample.views[v].shape().to_string() + "], model expects [" + expected.to_string() +
                              "]");
    const BasicTensor<Real> probs = loaded.model.predict(sample);
    const std::size_t best = argmax(probs);
    out << spec << ',' << best << ',' << loaded.meta.classes.at(best).name;
    for (Real p : probs.data()) out << ',' << p;
    out << '\n';
  }
  return 0;
}

int exit_code(const Error& e) {
  const std::string category = e.category();
  if (category == "usage") return 2;
  if (category == "io") return 3;
  if (category == "validation" || category == "dimension") return 4;
  if (category == "checkpoint") return 5;
  return 1;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-view CNN glitch classifier: synthetic data, training, evaluation", "mvglitch"};
  app.require_subcommand(1);

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic multi-duration spectrogram corpus");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--per-class", gen.per_class, "Samples per class (default: 40 desk, 386 paper)");
  gen_cmd->add_option("--seed", gen.seed, "Corpus seed")->capture_default_str();
  gen_cmd->add_option("--scale", gen.scale, "desk or paper")->capture_default_str();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train one of the six models and save the best checkpoint");
  train_cmd->add_option("--data", tr.data, "Corpus directory")->required();
  train_cmd->add_option("--model", tr.model, "single0|single1|single2|single3|parallel|merged")->required();
  train_cmd->add_option("--epochs", tr.epochs, "Training length")->capture_default_str();
  train_cmd->add_option("--batch", tr.batch, "Mini-batch size")->capture_default_str();
  train_cmd->add_option("--seed", tr.seed, "Initialization and shuffling seed")->capture_default_str();
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
  train_cmd->add_option("--log", tr.log, "Per-epoch CSV log path (default: stdout)");
  train_cmd->add_flag("--mean-reduction", tr.mean_reduction, "Average the batch gradient instead of summing");
  train_cmd->add_option("--iteration-unit", tr.unit, "Count --epochs as 'epoch' passes or 'batch' updates")
      ->capture_default_str();

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus split");
  eval_cmd->add_option("--ckpt", ev.ckpt, "Checkpoint path")->required();
  eval_cmd->add_option("--data", ev.data, "Corpus directory")->required();
  eval_cmd->add_option("--split", ev.split, "test or validation")->capture_default_str();

  PredictOptions pr;
  auto* predict_cmd = app.add_subcommand("predict", "Classify samples given as view files");
  predict_cmd->add_option("--ckpt", pr.ckpt, "Checkpoint path")->required();
  predict_cmd->add_option("--sample", pr.samples, "Four comma-separated view files per sample")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      throw UsageError(e.what());
    }
    if (gen_cmd->parsed()) return gen_data(gen, out, err);
    if (train_cmd->parsed()) return train_model(tr, out, err);
    if (eval_cmd->parsed()) return eval_model(ev, out, err);
    if (predict_cmd->parsed()) return predict(pr, out, err);
    throw UsageError("no command given");
  } catch (const Error& e) {
    err << "error[" << e.category() << "]: " << one_line(e.what()) << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    err << "error[internal]: " << one_line(e.what()) << '\n';
    return 1;
  }
}

}  // namespace mvg
