#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mvg/checkpoint.hpp"
#include "mvg/cli.hpp"
#include "mvg/corpus_io.hpp"
#include "mvg/eval.hpp"
#include "mvg/train.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using mvg::ArchitectureConfig;
using mvg::Split;

namespace {

// Small views and a small network, but the full 20-class catalog.
const mvg::ViewGeometry kSmallViews{12, 14};

ArchitectureConfig small_config(ArchitectureConfig c) {
  c = testutil::shrunk(c);
  c.classes = 20;
  return c;
}

const mvg::Corpus& small_corpus() {
  static const mvg::Corpus corpus = mvg::generate_corpus(8, 21, kSmallViews);
  return corpus;
}

void truncate_file(const fs::path& path, std::size_t drop) {
  const std::string bytes = testutil::read_bytes(path);
  std::ofstream(path, std::ios::binary | std::ios::trunc).write(bytes.data(), bytes.size() - drop);
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mvglitch");
  std::ostringstream out, err;
  const int code = mvg::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

bool single_error_line(const std::string& err, const std::string& category) {
  const std::string prefix = "error[" + category + "]: ";
  return err.rfind(prefix, 0) == 0 && err.find('\n') == err.size() - 1;
}

}  // namespace

TEST_CASE("corpus export and import round trip") {
  testutil::TempDir dir("corpus");
  const auto& corpus = small_corpus();
  mvg::export_corpus(corpus, dir.path());
  CHECK(mvg::import_corpus(dir.path()) == corpus);

  std::ifstream manifest(dir / mvg::kManifestName);
  std::string line;
  std::size_t records = 0;
  while (std::getline(manifest, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string field;
    std::vector<std::string> parts;
    while (std::getline(fields, field, '\t')) parts.push_back(field);
    REQUIRE(parts.size() == 7);
    CHECK(parts[0] == mvg::sample_id(records));
    CHECK(parts[1] == corpus.classes[corpus.samples[records].label].name);
    CHECK(parts[2] == mvg::to_string(corpus.splits[records]));
    for (std::size_t v = 0; v < 4; ++v) CHECK(fs::exists(dir.path() / parts[3 + v]));
    ++records;
  }
  CHECK(records == corpus.samples.size());
}

TEST_CASE("corpus import reports the offending file") {
  testutil::TempDir dir("corpus_bad");
  mvg::export_corpus(small_corpus(), dir.path());
  const fs::path victim = dir.path() / "views" / mvg::view_file_name(7, 2);
  truncate_file(victim, 5);
  try {
    mvg::import_corpus(dir.path());
    FAIL("expected an io error");
  } catch (const mvg::IoError& e) {
    CHECK(std::string(e.what()).find(victim.string()) != std::string::npos);
  }
  fs::remove(victim);
  CHECK_THROWS_AS(mvg::import_corpus(dir.path()), mvg::IoError);
  fs::remove(dir.path() / mvg::kManifestName);
  CHECK_THROWS_WITH_AS(mvg::import_corpus(dir.path()), doctest::Contains(mvg::kManifestName), mvg::IoError);
  CHECK_THROWS_AS(mvg::import_corpus(dir.path() / "missing"), mvg::IoError);
}

TEST_CASE("checkpoint save and load reproduce parameters and outputs bit for bit") {
  testutil::TempDir dir("ckpt");
  for (auto config : {ArchitectureConfig::single_view(1), ArchitectureConfig::parallel_view(),
                      ArchitectureConfig::merged_view()}) {
    const auto model = mvg::Model<float>::build(small_config(config), 77);
    mvg::CheckpointMeta meta;
    meta.classes = small_corpus().classes;
    meta.init_seed = 77;
    meta.epochs = 3;
    meta.batch = 30;
    const fs::path path = dir / "m.ckpt";
    mvg::save_checkpoint(path, model, meta);
    const auto loaded = mvg::load_checkpoint<float>(path, config.kind);
    CHECK(loaded.meta.architecture == model.config());
    CHECK(loaded.meta.classes == meta.classes);
    const auto a = model.parameters();
    const auto b = loaded.model.parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->value == b[i]->value);
    for (std::size_t i = 0; i < 5; ++i)
      CHECK(model.predict(small_corpus().samples[i * 31]) == loaded.model.predict(small_corpus().samples[i * 31]));

    mvg::save_checkpoint(dir / "again.ckpt", loaded.model, loaded.meta);
    CHECK(testutil::read_bytes(path) == testutil::read_bytes(dir / "again.ckpt"));
  }
}

TEST_CASE("checkpoint errors") {
  testutil::TempDir dir("ckpt_bad");
  const auto model = mvg::Model<float>::build(small_config(ArchitectureConfig::single_view(0)), 1);
  mvg::CheckpointMeta meta;
  meta.classes = small_corpus().classes;
  const fs::path path = dir / "m.ckpt";
  mvg::save_checkpoint(path, model, meta);

  CHECK_THROWS_WITH_AS(mvg::load_checkpoint<float>(path, mvg::ArchitectureKind::merged_view),
                       doctest::Contains("architecture mismatch"), mvg::CheckpointError);

  std::string bytes = testutil::read_bytes(path);
  const fs::path corrupt = dir / "corrupt.ckpt";
  auto write = [&](const std::string& b) { std::ofstream(corrupt, std::ios::binary).write(b.data(), b.size()); };
  std::string bad = bytes;
  bad[0] = 'X';
  write(bad);
  CHECK_THROWS_WITH_AS(mvg::read_checkpoint(corrupt), doctest::Contains("bad magic"), mvg::CheckpointError);
  bad = bytes;
  bad[4] = 9;
  write(bad);
  CHECK_THROWS_WITH_AS(mvg::read_checkpoint(corrupt), doctest::Contains("version"), mvg::CheckpointError);
  write(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_WITH_AS(mvg::read_checkpoint(corrupt), doctest::Contains("truncated"), mvg::CheckpointError);
  write(bytes + "x");
  CHECK_THROWS_WITH_AS(mvg::read_checkpoint(corrupt), doctest::Contains("trailing"), mvg::CheckpointError);
  CHECK_THROWS_AS(mvg::read_checkpoint(dir / "none.ckpt"), mvg::IoError);

  auto raw = mvg::read_checkpoint(path);
  raw.tensors[2].name = "fc.renamed";
  mvg::write_checkpoint(corrupt, raw);
  CHECK_THROWS_WITH_AS(mvg::load_checkpoint<float>(corrupt), doctest::Contains("fc.renamed"), mvg::CheckpointError);
  raw = mvg::read_checkpoint(path);
  raw.tensors[4].dims[1] += 1;
  raw.tensors[4].values.resize(raw.tensors[4].values.size() + raw.tensors[4].dims[0]);
  mvg::write_checkpoint(corrupt, raw);
  CHECK_THROWS_WITH_AS(mvg::load_checkpoint<float>(corrupt), doctest::Contains("shape mismatch"),
                       mvg::CheckpointError);
}

TEST_CASE("evaluation report is internally consistent") {
  const auto& corpus = small_corpus();
  const auto model = mvg::Model<float>::build(small_config(ArchitectureConfig::merged_view()), 5);
  for (Split split : {Split::validation, Split::test}) {
    const auto report = mvg::evaluate(model, corpus, split);
    CHECK(report.total() == corpus.indices(split).size());
    CHECK(report.overall_accuracy ==
          doctest::Approx(static_cast<double>(report.confusion.trace()) / report.total()));
    for (std::size_t c = 0; c < corpus.class_count(); ++c) {
      CHECK(report.confusion.row_total(c) == report.per_class[c].count);
      CHECK(report.confusion.count(c, c) == report.per_class[c].correct);
    }
  }
}

TEST_CASE("report CSV and duration summary on a hand-built confusion") {
  const std::vector<mvg::ClassInfo> classes{{"A", mvg::DurationCategory::short_duration},
                                            {"B", mvg::DurationCategory::long_duration},
                                            {"C", mvg::DurationCategory::long_duration}};
  const auto report = mvg::make_report(classes, {0, 0, 1, 1, 2, 2}, {0, 1, 1, 1, 0, 2});
  CHECK(report.overall_accuracy == doctest::Approx(4.0 / 6.0));
  CHECK(report.per_class[0].accuracy == doctest::Approx(0.5));
  CHECK(report.confusion.count(2, 0) == 1);
  const auto summary = mvg::duration_summary(report);
  CHECK(summary.short_mean == doctest::Approx(0.5));
  CHECK(summary.long_mean == doctest::Approx(0.75));
  const std::string csv = report.to_csv();
  CHECK(csv.rfind("metric,value\n", 0) == 0);
  CHECK(csv.find("class_index,class,duration,count,correct,accuracy") != std::string::npos);
  CHECK(csv.find("1,B,long,2,2,") != std::string::npos);
  CHECK_THROWS_AS(mvg::make_report(classes, {0, 3}, {0, 0}), mvg::ValidationError);
}

TEST_CASE("training is deterministic and keeps the best validation epoch") {
  const auto& corpus = small_corpus();
  mvg::TrainConfig config;
  config.epochs = 3;
  config.batch = 50;
  config.seed = 9;
  auto run = [&] {
    auto model = mvg::Model<float>::build(small_config(ArchitectureConfig::parallel_view()), 4);
    auto report = mvg::train(model, corpus, config);
    std::vector<mvg::BasicTensor<float>> values;
    for (const auto* p : model.parameters()) values.push_back(p->value);
    return std::make_pair(report, values);
  };
  const auto [first, params] = run();
  const auto [second, params2] = run();
  CHECK(first == second);
  CHECK(params == params2);
  REQUIRE(first.epochs.size() == 3);
  // 120 training samples in batches of 50: the last batch of 20 still counts.
  CHECK(first.epochs[0].steps == 3);
  double best = 0.0;
  for (const auto& e : first.epochs) best = std::max(best, e.val_accuracy);
  CHECK(first.best_val_accuracy == best);
  CHECK(first.epochs[first.best_epoch - 1].val_accuracy == best);
}

TEST_CASE("iteration unit counts optimizer updates") {
  mvg::TrainConfig config;
  config.epochs = 4;
  config.batch = 50;
  config.unit = mvg::IterationUnit::batch;
  auto model = mvg::Model<float>::build(small_config(ArchitectureConfig::single_view(0)), 4);
  const auto report = mvg::train(model, small_corpus(), config);
  REQUIRE(report.epochs.size() == 2);
  CHECK(report.epochs[0].steps == 3);
  CHECK(report.epochs[1].steps == 4);
}

TEST_CASE("training rejects unusable inputs") {
  auto model = mvg::Model<float>::build(small_config(ArchitectureConfig::single_view(0)), 4);
  mvg::TrainConfig config;
  config.epochs = 0;
  CHECK_THROWS_AS(mvg::train(model, small_corpus(), config), mvg::ValidationError);
  config.epochs = 1;
  mvg::Corpus empty = small_corpus();
  empty.samples.clear();
  empty.splits.clear();
  CHECK_THROWS_AS(mvg::train(model, empty, config), mvg::ValidationError);
  auto three = mvg::Model<float>::build(testutil::shrunk(ArchitectureConfig::single_view(0)), 4);
  CHECK_THROWS_AS(mvg::train(three, small_corpus(), config), mvg::ValidationError);
}

TEST_CASE("one epoch lowers the training loss") {
  int lowered = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto model = mvg::Model<float>::build(small_config(ArchitectureConfig::single_view(seed % 4)), seed);
    mvg::TrainConfig config;
    config.epochs = 1;
    config.seed = seed;
    config.measure_initial_loss = true;
    const auto report = mvg::train(model, small_corpus(), config);
    const double after = mvg::score(model, small_corpus(), small_corpus().indices(Split::train)).loss;
    lowered += after < *report.initial_train_loss;
  }
  CHECK(lowered >= 18);
}

TEST_CASE("model names map to architectures") {
  CHECK(mvg::model_names().size() == 6);
  CHECK(mvg::architecture_for("single2") == ArchitectureConfig::single_view(2));
  CHECK(mvg::architecture_for("parallel") == ArchitectureConfig::parallel_view());
  CHECK(mvg::architecture_for("merged") == ArchitectureConfig::merged_view());
  CHECK_THROWS_AS(mvg::architecture_for("single4"), mvg::UsageError);
}

TEST_CASE("cli end to end on a tiny corpus") {
  testutil::TempDir dir("cli");
  const std::string data = (dir / "data").string();
  auto gen = cli({"gen-data", "--out", data, "--per-class", "8", "--seed", "3"});
  REQUIRE(gen.code == 0);
  CHECK(gen.out == testutil::read_bytes(dir / "data" / mvg::kManifestName));
  CHECK(gen.err.find("wrote 160 samples") != std::string::npos);

  const std::string ckpt = (dir / "m.ckpt").string(), log = (dir / "log.csv").string();
  auto tr = cli({"train", "--data", data, "--model", "single0", "--epochs", "2", "--iteration-unit", "batch",
                 "--seed", "1", "--out", ckpt, "--log", log});
  REQUIRE(tr.code == 0);
  const std::string log_text = testutil::read_bytes(log);
  CHECK(log_text.rfind("epoch,train_loss,val_accuracy\n1,", 0) == 0);

  auto ev = cli({"eval", "--ckpt", ckpt, "--data", data, "--split", "validation"});
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("samples,20") != std::string::npos);

  const fs::path views = dir.path() / "data" / "views";
  std::string four;
  for (std::size_t v = 0; v < 4; ++v) four += (v ? "," : "") + (views / mvg::view_file_name(0, v)).string();
  const std::string single = (views / mvg::view_file_name(1, 0)).string();
  auto pr = cli({"predict", "--ckpt", ckpt, "--sample", four, "--sample", single});
  REQUIRE(pr.code == 0);
  std::istringstream lines(pr.out);
  std::string header;
  std::getline(lines, header);
  CHECK(header.rfind("sample,predicted_index,predicted_class,Air Compressor,", 0) == 0);

  // Rows come back in input order and match an in-memory forward exactly.
  const auto loaded = mvg::load_checkpoint<float>(ckpt);
  const auto corpus = mvg::import_corpus(data);
  const std::vector<std::pair<std::string, std::size_t>> expected{{four, 0}, {single, 1}};
  for (const auto& [spec, index] : expected) {
    std::string row;
    REQUIRE(std::getline(lines, row));
    CHECK(row.rfind(spec + ",", 0) == 0);
    std::istringstream cells(row.substr(spec.size() + 1));
    std::string cell;
    std::vector<std::string> fields;
    while (std::getline(cells, cell, ',')) fields.push_back(cell);
    REQUIRE(fields.size() == 2 + 20);
    const auto probs = loaded.model.predict(corpus.samples[index]);
    CHECK(std::stoul(fields[0]) == mvg::argmax(probs));
    CHECK(fields[1] == corpus.classes[mvg::argmax(probs)].name);
    double total = 0.0;
    for (std::size_t c = 0; c < 20; ++c) {
      const float p = std::stof(fields[2 + c]);
      CHECK(p == probs[c]);
      total += p;
    }
    CHECK(std::abs(total - 1.0) <= 1e-6);
  }
  std::string extra;
  CHECK_FALSE(std::getline(lines, extra));
}

TEST_CASE("gen-data is byte-identical across runs") {
  testutil::TempDir dir("gen_twice");
  for (const char* name : {"a", "b"})
    REQUIRE(cli({"gen-data", "--out", (dir / name).string(), "--per-class", "8", "--seed", "4"}).code == 0);
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path twin = dir / "b" / fs::relative(entry.path(), dir / "a");
    CHECK(testutil::read_bytes(entry.path()) == testutil::read_bytes(twin));
    ++files;
  }
  CHECK(files == 2 + 160 * 4);
}

TEST_CASE("degenerate and perfect predictors") {
  const auto& corpus = small_corpus();
  std::vector<std::size_t> labels;
  for (std::size_t i : corpus.indices(Split::test)) labels.push_back(corpus.samples[i].label);
  const auto zeros = mvg::make_report(corpus.classes, labels, std::vector<std::size_t>(labels.size(), 0));
  CHECK(zeros.overall_accuracy == doctest::Approx(0.05));
  const auto perfect = mvg::make_report(corpus.classes, labels, labels);
  CHECK(perfect.overall_accuracy == 1.0);
  for (std::size_t t = 0; t < 20; ++t)
    for (std::size_t p = 0; p < 20; ++p)
      if (t != p) CHECK(perfect.confusion.count(t, p) == 0);
}

TEST_CASE("cli errors are single prefixed lines with distinct exit codes") {
  testutil::TempDir dir("cli_err");
  auto r = cli({"train", "--data", "x", "--model", "single9", "--out", "y"});
  CHECK(r.code == 2);
  CHECK(single_error_line(r.err, "usage"));

  r = cli({"bogus"});
  CHECK(r.code == 2);
  CHECK(single_error_line(r.err, "usage"));

  r = cli({"eval", "--ckpt", (dir / "none.ckpt").string(), "--data", (dir / "none").string()});
  CHECK(r.code == 3);
  CHECK(single_error_line(r.err, "io"));

  std::ofstream(dir / "plain_file") << "x";
  r = cli({"gen-data", "--out", (dir / "plain_file" / "sub").string(), "--per-class", "8"});
  CHECK(r.code == 3);
  CHECK(single_error_line(r.err, "io"));

  r = cli({"predict", "--ckpt", (dir / "none.ckpt").string(), "--sample", "a.glv"});
  CHECK(r.code == 3);

  r = cli({"gen-data", "--out", (dir / "d").string(), "--per-class", "3"});
  CHECK(r.code == 4);
  CHECK(single_error_line(r.err, "validation"));

  std::ofstream(dir / "bad.ckpt") << "not a checkpoint at all";
  r = cli({"predict", "--ckpt", (dir / "bad.ckpt").string(), "--sample", "a.glv"});
  CHECK(r.code == 5);
  CHECK(single_error_line(r.err, "checkpoint"));

  // A checkpoint built for other view sizes does not fit the corpus.
  const auto model = mvg::Model<float>::build(small_config(ArchitectureConfig::single_view(0)), 1);
  mvg::CheckpointMeta meta;
  meta.classes = small_corpus().classes;
  mvg::save_checkpoint(dir / "small.ckpt", model, meta);
  mvg::export_corpus(mvg::generate_corpus(8, 1), dir / "full");
  r = cli({"eval", "--ckpt", (dir / "small.ckpt").string(), "--data", (dir / "full").string()});
  CHECK(r.code == 4);
  CHECK(single_error_line(r.err, "validation"));
}
