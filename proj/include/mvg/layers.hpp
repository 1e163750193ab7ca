#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvg/rng.hpp"
#include "mvg/tensor.hpp"

namespace mvg {

/// A trainable tensor and its accumulated gradient. backward() calls add to
/// `grad`; the optimizer reads it and the trainer clears it per batch.
template <typename T>
struct Parameter {
  std::string name;
  BasicTensor<T> value;
  BasicTensor<T> grad;

  Parameter(std::string n, Shape shape)
      : name(std::move(n)), value(shape), grad(std::move(shape)) {}

  void zero_grad() { grad.fill(T{0}); }
};

// Glorot/Xavier uniform: U(-l, l), l = sqrt(6 / (fan_in + fan_out)).
template <typename T>
void glorot_uniform(BasicTensor<T>& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.data()) v = static_cast<T>(rng.uniform(-limit, limit));
}

/// Valid (unpadded) stride-1 2-D cross-correlation over a C×H×W input with
/// K filters of size f×f. Lowered to a GEMM through an im2col buffer.
template <typename T>
class Conv2D {
 public:
  Conv2D(std::size_t in_channels, std::size_t filters, std::size_t kernel_size,
         std::string prefix = "conv")
      : channels_(in_channels),
        filters_(filters),
        size_(kernel_size),
        kernels_(prefix + ".kernels", Shape{filters, in_channels, kernel_size, kernel_size}),
        bias_(prefix + ".bias", Shape{filters}) {}

  void initialize(Rng& rng) {
    glorot_uniform(kernels_.value, channels_ * size_ * size_, filters_ * size_ * size_, rng);
    bias_.value.fill(T{0});
  }

  std::size_t in_channels() const noexcept { return channels_; }
  std::size_t filters() const noexcept { return filters_; }
  std::size_t kernel_size() const noexcept { return size_; }

  Parameter<T>& kernels() noexcept { return kernels_; }
  Parameter<T>& bias() noexcept { return bias_; }
  const Parameter<T>& kernels() const noexcept { return kernels_; }
  const Parameter<T>& bias() const noexcept { return bias_; }

  Shape output_shape(const Shape& in) const {
    if (in.rank() != 3 || in[0] != channels_)
      throw DimensionError("conv: expected " + std::to_string(channels_) + "xHxW input, got [" +
                           in.to_string() + "]");
    if (in[1] < size_ || in[2] < size_)
      throw DimensionError("conv: input [" + in.to_string() + "] smaller than " +
                           std::to_string(size_) + "x" + std::to_string(size_) + " kernel");
    return Shape{filters_, in[1] - size_ + 1, in[2] - size_ + 1};
  }

  BasicTensor<T> forward(const BasicTensor<T>& x) {
    Shape out_shape = output_shape(x.shape());
    cache_ = Cache{x.shape(), im2col(x)};
    return apply(cache_->columns, out_shape);
  }

  // Forward without touching the backward cache.
  BasicTensor<T> infer(const BasicTensor<T>& x) const {
    Shape out_shape = output_shape(x.shape());
    return apply(im2col(x), out_shape);
  }

  // Accumulates kernel and bias gradients; returns the input gradient
  // (all zeros when want_input_grad is false, which skips the work).
  BasicTensor<T> backward(const BasicTensor<T>& grad_out, bool want_input_grad = true) {
    if (!cache_) throw StateError("conv: backward called before forward");
    const Shape out_shape = output_shape(cache_->input_shape);
    detail::require_same_shape(grad_out.shape(), out_shape, "conv backward");
    const std::size_t patch = channels_ * size_ * size_;
    const std::size_t positions = out_shape[1] * out_shape[2];
    const RowMatrix<T>& columns = cache_->columns;

    ConstMatrixMap<T> g(grad_out.raw(), filters_, positions);
    MatrixMap<T>(kernels_.grad.raw(), filters_, patch).noalias() += g * columns.transpose();
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(bias_.grad.raw(), filters_) +=
        g.rowwise().sum();

    BasicTensor<T> grad_in(cache_->input_shape);
    if (!want_input_grad) return grad_in;
    RowMatrix<T> grad_columns =
        ConstMatrixMap<T>(kernels_.value.raw(), filters_, patch).transpose() * g;
    col2im(grad_columns, grad_in);
    return grad_in;
  }

 private:
  struct Cache {
    Shape input_shape;
    RowMatrix<T> columns;
  };

  // Row (c, ki, kj) and column (oy, ox) of the patch matrix hold
  // x[c, oy + ki, ox + kj].
  RowMatrix<T> im2col(const BasicTensor<T>& x) const {
    const std::size_t h = x.shape()[1], w = x.shape()[2];
    const std::size_t oh = h - size_ + 1, ow = w - size_ + 1;
    RowMatrix<T> columns(channels_ * size_ * size_, oh * ow);
    T* dst = columns.data();
    for (std::size_t c = 0; c < channels_; ++c)
      for (std::size_t ki = 0; ki < size_; ++ki)
        for (std::size_t kj = 0; kj < size_; ++kj)
          for (std::size_t oy = 0; oy < oh; ++oy) {
            const T* src = x.raw() + (c * h + oy + ki) * w + kj;
            for (std::size_t ox = 0; ox < ow; ++ox) *dst++ = src[ox];
          }
    return columns;
  }

  void col2im(const RowMatrix<T>& columns, BasicTensor<T>& grad_in) const {
    const std::size_t h = grad_in.shape()[1], w = grad_in.shape()[2];
    const std::size_t oh = h - size_ + 1, ow = w - size_ + 1;
    const T* src = columns.data();
    for (std::size_t c = 0; c < channels_; ++c)
      for (std::size_t ki = 0; ki < size_; ++ki)
        for (std::size_t kj = 0; kj < size_; ++kj)
          for (std::size_t oy = 0; oy < oh; ++oy) {
            T* dst = grad_in.raw() + (c * h + oy + ki) * w + kj;
            for (std::size_t ox = 0; ox < ow; ++ox) dst[ox] += *src++;
          }
  }

  BasicTensor<T> apply(const RowMatrix<T>& columns, const Shape& out_shape) const {
    const std::size_t positions = out_shape[1] * out_shape[2];
    BasicTensor<T> out(out_shape);
    MatrixMap<T> y(out.raw(), filters_, positions);
    y.noalias() = ConstMatrixMap<T>(kernels_.value.raw(), filters_, columns.rows()) * columns;
    y.colwise() += Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(bias_.value.raw(), filters_);
    return out;
  }

  std::size_t channels_, filters_, size_;
  Parameter<T> kernels_;
  Parameter<T> bias_;
  std::optional<Cache> cache_;
};

/// 2×2 max pooling with stride 2. Odd trailing rows/columns are dropped.
/// Ties go to the first maximum in row-major order within the window.
template <typename T>
class MaxPool2 {
 public:
  static constexpr std::size_t window = 2;

  static Shape output_shape(const Shape& in) {
    if (in.rank() != 3) throw DimensionError("maxpool: expected CxHxW input, got [" + in.to_string() + "]");
    if (in[1] < window || in[2] < window)
      throw DimensionError("maxpool: spatial extent below 2 in [" + in.to_string() + "]");
    return Shape{in[0], in[1] / window, in[2] / window};
  }

  BasicTensor<T> forward(const BasicTensor<T>& x) {
    std::vector<std::uint32_t> argmax;
    BasicTensor<T> out = pool(x, &argmax);
    cache_ = Cache{x.shape(), std::move(argmax)};
    return out;
  }

  BasicTensor<T> infer(const BasicTensor<T>& x) const { return pool(x, nullptr); }

  BasicTensor<T> backward(const BasicTensor<T>& grad_out) const {
    if (!cache_) throw StateError("maxpool: backward called before forward");
    detail::require_same_shape(grad_out.shape(), output_shape(cache_->input_shape), "maxpool backward");
    BasicTensor<T> grad_in(cache_->input_shape);
    for (std::size_t i = 0; i < grad_out.size(); ++i) grad_in[cache_->argmax[i]] += grad_out[i];
    return grad_in;
  }

 private:
  struct Cache {
    Shape input_shape;
    std::vector<std::uint32_t> argmax;
  };

  static BasicTensor<T> pool(const BasicTensor<T>& x, std::vector<std::uint32_t>* argmax) {
    const Shape out_shape = output_shape(x.shape());
    const std::size_t channels = out_shape[0], oh = out_shape[1], ow = out_shape[2];
    const std::size_t h = x.shape()[1], w = x.shape()[2];
    BasicTensor<T> out(out_shape);
    if (argmax) argmax->resize(out.size());
    std::size_t o = 0;
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
          std::size_t best = (c * h + oy * window) * w + ox * window;
          for (std::size_t dy = 0; dy < window; ++dy)
            for (std::size_t dx = 0; dx < window; ++dx) {
              const std::size_t idx = (c * h + oy * window + dy) * w + ox * window + dx;
              if (x[idx] > x[best]) best = idx;
            }
          out[o] = x[best];
          if (argmax) (*argmax)[o] = static_cast<std::uint32_t>(best);
        }
    return out;
  }

  std::optional<Cache> cache_;
};

template <typename T>
class Relu {
 public:
  BasicTensor<T> forward(const BasicTensor<T>& x) {
    input_ = x;
    return infer(x);
  }

  BasicTensor<T> infer(const BasicTensor<T>& x) const {
    return detail::map(x, [](T v) { return v > T{0} ? v : T{0}; });
  }

  // Subgradient at exactly zero is zero.
  BasicTensor<T> backward(const BasicTensor<T>& grad_out) const {
    if (!input_) throw StateError("relu: backward called before forward");
    return detail::zip(grad_out, *input_, "relu backward",
                       [](T g, T x) { return x > T{0} ? g : T{0}; });
  }

 private:
  std::optional<BasicTensor<T>> input_;
};

/// Fully-connected layer y = W x + b on a rank-1 input.
template <typename T>
class Dense {
 public:
  Dense(std::size_t inputs, std::size_t outputs, std::string prefix = "dense")
      : inputs_(inputs),
        outputs_(outputs),
        weights_(prefix + ".weights", Shape{outputs, inputs}),
        bias_(prefix + ".bias", Shape{outputs}) {}

  void initialize(Rng& rng) {
    glorot_uniform(weights_.value, inputs_, outputs_, rng);
    bias_.value.fill(T{0});
  }

  std::size_t inputs() const noexcept { return inputs_; }
  std::size_t outputs() const noexcept { return outputs_; }
  Parameter<T>& weights() noexcept { return weights_; }
  Parameter<T>& bias() noexcept { return bias_; }
  const Parameter<T>& weights() const noexcept { return weights_; }
  const Parameter<T>& bias() const noexcept { return bias_; }

  BasicTensor<T> forward(const BasicTensor<T>& x) {
    BasicTensor<T> y = infer(x);
    input_ = x;
    return y;
  }

  BasicTensor<T> infer(const BasicTensor<T>& x) const {
    if (x.shape().rank() != 1 || x.size() != inputs_)
      throw DimensionError("dense: expected input of length " + std::to_string(inputs_) + ", got [" +
                           x.shape().to_string() + "]");
    BasicTensor<T> y(Shape{outputs_});
    vec(y.raw(), outputs_).noalias() =
        ConstMatrixMap<T>(weights_.value.raw(), outputs_, inputs_) * cvec(x.raw(), inputs_);
    vec(y.raw(), outputs_) += cvec(bias_.value.raw(), outputs_);
    return y;
  }

  BasicTensor<T> backward(const BasicTensor<T>& grad_out, bool want_input_grad = true) {
    BasicTensor<T> grad_in = backward_deferred(grad_out, want_input_grad);
    flush();
    return grad_in;
  }

  // Like backward(), but the weight-gradient outer product is queued and
  // only added to weights().grad by flush(). A batch then costs one GEMM
  // instead of one full pass over the weight gradient per sample.
  BasicTensor<T> backward_deferred(const BasicTensor<T>& grad_out, bool want_input_grad = true) {
    if (!input_) throw StateError("dense: backward called before forward");
    if (grad_out.shape().rank() != 1 || grad_out.size() != outputs_)
      throw DimensionError("dense backward: expected gradient of length " + std::to_string(outputs_) +
                           ", got [" + grad_out.shape().to_string() + "]");
    auto g = cvec(grad_out.raw(), outputs_);
    pending_inputs_.push_back(*input_);
    pending_grads_.push_back(grad_out);
    vec(bias_.grad.raw(), outputs_) += g;
    BasicTensor<T> grad_in(Shape{inputs_});
    if (want_input_grad)
      vec(grad_in.raw(), inputs_).noalias() =
          ConstMatrixMap<T>(weights_.value.raw(), outputs_, inputs_).transpose() * g;
    return grad_in;
  }

  void flush() {
    const std::size_t n = pending_inputs_.size();
    if (n == 1) {
      MatrixMap<T>(weights_.grad.raw(), outputs_, inputs_).noalias() +=
          cvec(pending_grads_[0].raw(), outputs_) * cvec(pending_inputs_[0].raw(), inputs_).transpose();
    } else if (n > 1) {
      // weights.grad += G^T X with G (n x outputs), X (n x inputs).
      RowMatrix<T> grads(n, outputs_), inputs(n, inputs_);
      for (std::size_t i = 0; i < n; ++i) {
        grads.row(i) = cvec(pending_grads_[i].raw(), outputs_).transpose();
        inputs.row(i) = cvec(pending_inputs_[i].raw(), inputs_).transpose();
      }
      MatrixMap<T>(weights_.grad.raw(), outputs_, inputs_).noalias() += grads.transpose() * inputs;
    }
    pending_inputs_.clear();
    pending_grads_.clear();
  }

  std::size_t pending() const noexcept { return pending_inputs_.size(); }

 private:
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  static Eigen::Map<Vec> vec(T* p, std::size_t n) { return Eigen::Map<Vec>(p, n); }
  static Eigen::Map<const Vec> cvec(const T* p, std::size_t n) { return Eigen::Map<const Vec>(p, n); }

  std::size_t inputs_, outputs_;
  Parameter<T> weights_;
  Parameter<T> bias_;
  std::optional<BasicTensor<T>> input_;
  std::vector<BasicTensor<T>> pending_inputs_;
  std::vector<BasicTensor<T>> pending_grads_;
};

/// Numerically stable softmax over a rank-1 logit vector (C >= 2).
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
  if (logits.shape().rank() != 1 || logits.size() < 2)
    throw DimensionError("softmax: expected a vector of at least 2 logits, got [" +
                         logits.shape().to_string() + "]");
  T peak = -std::numeric_limits<T>::infinity();
  for (T z : logits.data()) {
    if (!std::isfinite(z)) throw NumericError("softmax: non-finite logit");
    peak = std::max(peak, z);
  }
  BasicTensor<T> out(logits.shape());
  T total{0};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (auto& v : out.data()) v /= total;
  return out;
}

template <typename T>
class SoftmaxLayer {
 public:
  BasicTensor<T> forward(const BasicTensor<T>& logits) {
    output_ = softmax(logits);
    return *output_;
  }

  BasicTensor<T> infer(const BasicTensor<T>& logits) const { return softmax(logits); }

  // Vector-Jacobian product: dz_i = p_i (g_i - sum_j g_j p_j).
  BasicTensor<T> backward(const BasicTensor<T>& grad_out) const {
    if (!output_) throw StateError("softmax: backward called before forward");
    detail::require_same_shape(grad_out.shape(), output_->shape(), "softmax backward");
    T dot{0};
    for (std::size_t i = 0; i < grad_out.size(); ++i) dot += grad_out[i] * (*output_)[i];
    BasicTensor<T> grad_in(grad_out.shape());
    for (std::size_t i = 0; i < grad_out.size(); ++i) grad_in[i] = (*output_)[i] * (grad_out[i] - dot);
    return grad_in;
  }

 private:
  std::optional<BasicTensor<T>> output_;
};

}  // namespace mvg
