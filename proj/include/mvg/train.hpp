#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "mvg/adadelta.hpp"
#include "mvg/glitchgen.hpp"
#include "mvg/loss.hpp"
#include "mvg/model.hpp"

namespace mvg {

// How TrainConfig::epochs is counted: full passes, or mini-batch updates.
enum class IterationUnit : std::uint8_t { epoch, batch };

struct TrainConfig {
  std::size_t epochs = 130;
  std::size_t batch = 30;
  std::uint64_t seed = 0;
  bool mean_reduction = false;  // default: batch gradient is the sum over samples
  IterationUnit unit = IterationUnit::epoch;
  bool measure_initial_loss = false;
  AdadeltaConfig optimizer;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t steps = 0;       // optimizer updates so far
  double train_loss = 0.0;     // mean per-sample loss over the epoch's batches
  double val_accuracy = 0.0;
  double val_loss = 0.0;       // mean per-sample

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainingReport {
  std::optional<double> initial_train_loss;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
  double best_val_loss = 0.0;

  friend bool operator==(const TrainingReport&, const TrainingReport&) = default;
};

/// Accuracy, mean loss and argmax predictions of a model over some samples.
struct SplitScore {
  double accuracy = 0.0;
  double loss = 0.0;
  std::vector<std::size_t> predictions;
};

// Initialization seed used for a model trained with `train_seed`.
inline std::uint64_t model_init_seed(std::uint64_t train_seed) { return derive_seed(train_seed, {0x1417ULL}); }

template <typename T>
std::size_t argmax(const BasicTensor<T>& probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return best;
}

template <typename T>
double sample_loss(const BasicTensor<T>& probs, std::size_t label) {
  return -std::log(std::max(static_cast<double>(probs[label]), kProbabilityFloor));
}

template <typename T>
SplitScore score(const Model<T>& model, const Corpus& corpus, const std::vector<std::size_t>& indices) {
  SplitScore s;
  s.predictions.reserve(indices.size());
  std::size_t correct = 0;
  for (std::size_t i : indices) {
    const MultiViewSample& sample = corpus.samples[i];
    const BasicTensor<T> probs = model.predict(sample);
    const std::size_t predicted = argmax(probs);
    s.predictions.push_back(predicted);
    correct += predicted == sample.label;
    s.loss += sample_loss(probs, sample.label);
  }
  if (!indices.empty()) {
    s.accuracy = static_cast<double>(correct) / static_cast<double>(indices.size());
    s.loss /= static_cast<double>(indices.size());
  }
  return s;
}

/// Shuffled mini-batch Adadelta training on the corpus's train split.
/// Validation accuracy is measured after every epoch and the model is left
/// holding the parameters of the best epoch (highest validation accuracy,
/// ties to the lower validation loss). A trailing partial batch is used.
template <typename T>
TrainingReport train(Model<T>& model, const Corpus& corpus, const TrainConfig& config,
                     const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  std::vector<std::size_t> order = corpus.indices(Split::train);
  const std::vector<std::size_t> validation = corpus.indices(Split::validation);
  if (order.empty()) throw ValidationError("training split is empty");
  if (validation.empty()) throw ValidationError("validation split is empty");
  if (config.epochs == 0) throw ValidationError("epochs must be at least 1");
  if (config.batch == 0) throw ValidationError("batch size must be at least 1");
  const std::size_t classes = model.config().classes;
  if (corpus.class_count() != classes)
    throw ValidationError("corpus has " + std::to_string(corpus.class_count()) + " classes, model expects " +
                          std::to_string(classes));

  TrainingReport report;
  if (config.measure_initial_loss) report.initial_train_loss = score(model, corpus, order).loss;

  std::vector<Parameter<T>*> params = model.parameters();
  Adadelta<T> optimizer(params, config.optimizer);
  std::vector<BasicTensor<T>> best;
  double best_accuracy = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();

  Rng rng(derive_seed(config.seed, {0x5417f1eULL}));
  std::size_t steps = 0;
  const bool by_batch = config.unit == IterationUnit::batch;

  for (std::size_t epoch = 1;; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      if (by_batch && steps == config.epochs) break;
      const std::size_t stop = std::min(start + config.batch, order.size());
      model.zero_grad();
      for (std::size_t k = start; k < stop; ++k) {
        const MultiViewSample& sample = corpus.samples[order[k]];
        BasicTensor<T> probs = model.forward(sample);
        loss_sum += sample_loss(probs, sample.label);
        probs.reshape_inplace(Shape{1, classes});
        BasicTensor<T> grad = softmax_xent_grad(probs, one_hot<T>(sample.label, classes));
        grad.reshape_inplace(Shape{classes});
        model.backward_logits_deferred(grad);
      }
      model.flush_gradients();
      seen += stop - start;
      optimizer.step(config.mean_reduction ? T{1} / static_cast<T>(stop - start) : T{1});
      ++steps;
    }

    const SplitScore val = score(model, corpus, validation);
    EpochRecord record{epoch, steps, seen ? loss_sum / static_cast<double>(seen) : 0.0, val.accuracy, val.loss};
    report.epochs.push_back(record);
    if (val.accuracy > best_accuracy || (val.accuracy == best_accuracy && val.loss < best_loss)) {
      best_accuracy = val.accuracy;
      best_loss = val.loss;
      report.best_epoch = epoch;
      best.clear();
      for (const auto* p : params) best.push_back(p->value);
    }
    if (on_epoch) on_epoch(record);
    if (by_batch ? steps == config.epochs : epoch == config.epochs) break;
  }

  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  report.best_val_accuracy = best_accuracy;
  report.best_val_loss = best_loss;
  return report;
}

}  // namespace mvg
