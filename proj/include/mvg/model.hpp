#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvg/layers.hpp"
#include "mvg/rng.hpp"
#include "mvg/sample.hpp"
#include "mvg/tensor.hpp"

namespace mvg {

enum class ArchitectureKind : std::uint32_t {
  single_view = 0,
  parallel_view = 1,
  merged_view = 2,
};

inline std::string to_string(ArchitectureKind kind) {
  switch (kind) {
    case ArchitectureKind::single_view: return "single_view";
    case ArchitectureKind::parallel_view: return "parallel_view";
    case ArchitectureKind::merged_view: return "merged_view";
  }
  return "unknown";
}

/// Layer sizes of one of the three network families. The defaults are the
/// full-size networks: two 128-filter 5×5 conv stages, FC-256, 20 classes,
/// on 47×57 views.
struct ArchitectureConfig {
  ArchitectureKind kind = ArchitectureKind::single_view;
  std::size_t duration_index = 0;  // single_view only
  std::size_t view_rows = 47;
  std::size_t view_cols = 57;
  std::size_t classes = 20;
  std::size_t filters = 128;
  std::size_t kernel = 5;
  std::size_t hidden = 256;

  static ArchitectureConfig single_view(std::size_t duration_index) {
    ArchitectureConfig c;
    c.kind = ArchitectureKind::single_view;
    c.duration_index = duration_index;
    return c;
  }
  static ArchitectureConfig parallel_view() {
    ArchitectureConfig c;
    c.kind = ArchitectureKind::parallel_view;
    return c;
  }
  static ArchitectureConfig merged_view() {
    ArchitectureConfig c;
    c.kind = ArchitectureKind::merged_view;
    return c;
  }

  std::size_t branch_count() const { return kind == ArchitectureKind::parallel_view ? kViewCount : 1; }

  // Shape fed to the first convolution of each branch.
  Shape branch_input_shape() const {
    return kind == ArchitectureKind::merged_view ? Shape{1, 2 * view_rows, 2 * view_cols}
                                                 : Shape{1, view_rows, view_cols};
  }

  friend bool operator==(const ArchitectureConfig&, const ArchitectureConfig&) = default;
};

/// conv -> 2×2 max-pool -> ReLU.
template <typename T>
class ConvBlock {
 public:
  ConvBlock(std::size_t in_channels, std::size_t filters, std::size_t kernel, const std::string& prefix)
      : conv_(in_channels, filters, kernel, prefix + ".conv") {}

  void initialize(Rng& rng) { conv_.initialize(rng); }

  Conv2D<T>& conv() noexcept { return conv_; }
  const Conv2D<T>& conv() const noexcept { return conv_; }

  BasicTensor<T> forward(const BasicTensor<T>& x, std::vector<Shape>* trace = nullptr) {
    BasicTensor<T> y = conv_.forward(x);
    if (trace) trace->push_back(y.shape());
    y = pool_.forward(y);
    if (trace) trace->push_back(y.shape());
    return relu_.forward(y);
  }

  BasicTensor<T> infer(const BasicTensor<T>& x) const {
    return relu_.infer(pool_.infer(conv_.infer(x)));
  }

  BasicTensor<T> backward(const BasicTensor<T>& grad_out, bool want_input_grad) {
    return conv_.backward(pool_.backward(relu_.backward(grad_out)), want_input_grad);
  }

 private:
  Conv2D<T> conv_;
  MaxPool2<T> pool_;
  Relu<T> relu_;
};

/// One of the three classifiers.
///
///   single_view:   view[d] -> block -> block -> FC -> softmax
///   merged_view:   tile(views) -> block -> block -> FC -> softmax
///   parallel_view: view[v] -> branch_v (v = 0..3) -> channel concat (merger)
///                  -> block -> FC -> softmax
///
/// The hidden FC layer has no activation; the classifier layer is a
/// second FC layer whose outputs go through softmax.
template <typename T>
class Model {
 public:
  struct Stage {
    std::string name;
    Shape shape;
  };

  explicit Model(ArchitectureConfig config) : config_(config) {
    if (config_.kind == ArchitectureKind::single_view && config_.duration_index >= kViewCount)
      throw BuildError("single-view duration index " + std::to_string(config_.duration_index) +
                       " outside [0, " + std::to_string(kViewCount) + ")");
    if (config_.classes < 2) throw BuildError("at least two classes are required");
    plan();
  }

  static Model build(const ArchitectureConfig& config, std::uint64_t seed) {
    Model model(config);
    Rng rng(seed);
    model.initialize(rng);
    return model;
  }

  void initialize(Rng& rng) {
    for (auto& b : branches_) b.initialize(rng);
    shared_->initialize(rng);
    fc_->initialize(rng);
    classifier_->initialize(rng);
  }

  const ArchitectureConfig& config() const noexcept { return config_; }

  // Build-time shape pipeline, input first, class scores last.
  const std::vector<Stage>& pipeline() const noexcept { return stages_; }

  // Shapes seen by the most recent forward(), in pipeline order (input excluded).
  const std::vector<Shape>& last_trace() const noexcept { return trace_; }

  std::size_t branch_count() const noexcept { return branches_.size(); }
  ConvBlock<T>& branch(std::size_t i) { return branches_.at(i); }
  const ConvBlock<T>& branch(std::size_t i) const { return branches_.at(i); }

  /// Class posterior for one sample; keeps caches for backward().
  BasicTensor<T> forward(const MultiViewSample& s) {
    trace_.clear();
    std::vector<BasicTensor<T>> inputs = branch_inputs(s);
    std::vector<BasicTensor<T>> features;
    features.reserve(inputs.size());
    for (std::size_t b = 0; b < branches_.size(); ++b)
      features.push_back(branches_[b].forward(inputs[b], b == 0 ? &trace_ : nullptr));
    BasicTensor<T> x = merge(features);
    if (branches_.size() > 1) trace_.push_back(x.shape());
    x = shared_->forward(x, &trace_);
    x.reshape_inplace(Shape{x.size()});
    trace_.push_back(x.shape());
    x = fc_->forward(x);
    trace_.push_back(x.shape());
    x = classifier_->forward(x);
    trace_.push_back(x.shape());
    forwarded_ = true;
    return softmax_.forward(x);
  }

  /// Class posterior without caching; safe on a const model.
  BasicTensor<T> predict(const MultiViewSample& s) const {
    std::vector<BasicTensor<T>> inputs = branch_inputs(s);
    std::vector<BasicTensor<T>> features;
    features.reserve(inputs.size());
    for (std::size_t b = 0; b < branches_.size(); ++b) features.push_back(branches_[b].infer(inputs[b]));
    BasicTensor<T> x = shared_->infer(merge(features));
    x.reshape_inplace(Shape{x.size()});
    return softmax_.infer(classifier_->infer(fc_->infer(x)));
  }

  /// Backpropagates a gradient with respect to the posterior.
  void backward(const BasicTensor<T>& grad_probs) { backward_logits(softmax_.backward(grad_probs)); }

  /// Backpropagates a gradient with respect to the pre-softmax scores and
  /// adds every parameter gradient into Parameter::grad.
  void backward_logits(const BasicTensor<T>& grad_logits) {
    backward_logits_deferred(grad_logits);
    flush_gradients();
  }

  /// backward_logits() with the dense-layer weight gradients queued until
  /// flush_gradients(); used by the trainer once per mini-batch.
  void backward_logits_deferred(const BasicTensor<T>& grad_logits) {
    if (!forwarded_) throw StateError("model: backward called before forward");
    BasicTensor<T> g = classifier_->backward_deferred(grad_logits);
    g = fc_->backward_deferred(g);
    g.reshape_inplace(shared_output_);
    g = shared_->backward(g, true);
    if (branches_.size() == 1) {
      branches_[0].backward(g, false);
      return;
    }
    const std::size_t chunk = g.size() / branches_.size();
    for (std::size_t b = 0; b < branches_.size(); ++b) {
      BasicTensor<T> part(branch_output_);
      std::copy_n(g.raw() + b * chunk, chunk, part.raw());
      branches_[b].backward(part, false);
    }
  }

  void flush_gradients() {
    fc_->flush();
    classifier_->flush();
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    for (auto& b : branches_) {
      out.push_back(&b.conv().kernels());
      out.push_back(&b.conv().bias());
    }
    out.push_back(&shared_->conv().kernels());
    out.push_back(&shared_->conv().bias());
    out.push_back(&fc_->weights());
    out.push_back(&fc_->bias());
    out.push_back(&classifier_->weights());
    out.push_back(&classifier_->bias());
    return out;
  }

  std::vector<const Parameter<T>*> parameters() const {
    std::vector<const Parameter<T>*> out;
    for (auto* p : const_cast<Model*>(this)->parameters()) out.push_back(p);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : parameters()) n += p->value.size();
    return n;
  }

  void zero_grad() {
    flush_gradients();
    for (auto* p : parameters()) p->zero_grad();
  }

 private:
  void plan() {
    const Shape input = config_.branch_input_shape();
    const bool parallel = config_.kind == ArchitectureKind::parallel_view;
    try {
      stages_.push_back({"input", input});
      for (std::size_t b = 0; b < config_.branch_count(); ++b)
        branches_.emplace_back(1, config_.filters, config_.kernel,
                               parallel ? "branch" + std::to_string(b) : std::string("block1"));
      Shape s = branches_[0].conv().output_shape(input);
      stages_.push_back({"conv1", s});
      s = MaxPool2<T>::output_shape(s);
      stages_.push_back({"pool1", s});
      branch_output_ = s;
      if (parallel) {
        s = Shape{s[0] * kViewCount, s[1], s[2]};
        stages_.push_back({"merger", s});
      }
      shared_.emplace(s[0], config_.filters, config_.kernel, parallel ? "shared" : "block2");
      s = shared_->conv().output_shape(s);
      stages_.push_back({"conv2", s});
      s = MaxPool2<T>::output_shape(s);
      stages_.push_back({"pool2", s});
      shared_output_ = s;
      const std::size_t flat = s.numel();
      stages_.push_back({"flatten", Shape{flat}});
      fc_.emplace(flat, config_.hidden, "fc");
      stages_.push_back({"fc", Shape{config_.hidden}});
      classifier_.emplace(config_.hidden, config_.classes, "classifier");
      stages_.push_back({"softmax", Shape{config_.classes}});
    } catch (const DimensionError& e) {
      throw BuildError("input [" + input.to_string() + "] too small for " + to_string(config_.kind) +
                       " stack: " + e.what());
    }
  }

  std::vector<BasicTensor<T>> branch_inputs(const MultiViewSample& s) const {
    const Shape expected{1, config_.view_rows, config_.view_cols};
    for (std::size_t v = 0; v < kViewCount; ++v)
      if (!(s.views[v].shape() == expected))
        throw DimensionError("model expects views of shape [" + expected.to_string() + "], view " +
                             std::to_string(v) + " is [" + s.views[v].shape().to_string() + "]");
    std::vector<BasicTensor<T>> inputs;
    switch (config_.kind) {
      case ArchitectureKind::single_view:
        inputs.push_back(tensor_cast<T>(s.views[config_.duration_index]));
        break;
      case ArchitectureKind::merged_view:
        inputs.push_back(tile_views<T>(s));
        break;
      case ArchitectureKind::parallel_view:
        for (const auto& v : s.views) inputs.push_back(tensor_cast<T>(v));
        break;
    }
    return inputs;
  }

  // Merger layer: channel-wise concatenation of the branch feature maps.
  BasicTensor<T> merge(std::vector<BasicTensor<T>>& features) const {
    if (features.size() == 1) return std::move(features[0]);
    const Shape& part = features[0].shape();
    BasicTensor<T> out(Shape{part[0] * features.size(), part[1], part[2]});
    T* dst = out.raw();
    for (const auto& f : features) dst = std::copy(f.raw(), f.raw() + f.size(), dst);
    return out;
  }

  ArchitectureConfig config_;
  std::vector<Stage> stages_;
  Shape branch_output_{1};
  Shape shared_output_{1};
  std::vector<ConvBlock<T>> branches_;
  std::optional<ConvBlock<T>> shared_;
  std::optional<Dense<T>> fc_;
  std::optional<Dense<T>> classifier_;
  SoftmaxLayer<T> softmax_;
  std::vector<Shape> trace_;
  bool forwarded_ = false;
};

}  // namespace mvg
