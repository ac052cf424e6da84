#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hyperwalk/error.hpp"
#include "hyperwalk/rng.hpp"

namespace hyperwalk::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { identity, relu, tanh };
enum class Mode { train, eval };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

inline Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  fail(ErrorCategory::data_format, "unknown activation '" + s + "'");
}

/// y = act(W x + b); `dropout` marks layers whose output is dropped in
/// train mode.
struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;
  Activation activation = Activation::relu;
  bool dropout = false;

  std::size_t in_width() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out_width() const { return static_cast<std::size_t>(weights.rows()); }
};

struct LayerSpec {
  std::size_t width;
  Activation activation;
  bool dropout = false;
};

struct LayerGrad {
  Matrix weights;
  Vector bias;
};

struct MlpGradients {
  std::vector<LayerGrad> layers;

  void scale(double s) {
    for (auto& g : layers) {
      g.weights *= s;
      g.bias *= s;
    }
  }
  bool all_finite() const {
    for (const auto& g : layers) {
      if (!g.weights.allFinite() || !g.bias.allFinite()) return false;
    }
    return true;
  }
};

/// Per-call state needed by backward. Columns are samples.
struct ForwardCache {
  const void* owner = nullptr;
  std::uint64_t version = 0;
  std::vector<Matrix> inputs;   // input to layer i
  std::vector<Matrix> outputs;  // activation output of layer i, before dropout
  std::vector<Matrix> masks;    // scaled keep-mask for layer i; empty when not applied
};

struct Dropout {
  double rate = 0.0;
  Rng* rng = nullptr;
};

namespace detail {

inline void activate(Matrix& z, Activation a) {
  switch (a) {
    case Activation::identity: break;
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
  }
}

// d act / d z expressed through the activation output y.
inline Matrix activation_grad(const Matrix& y, const Matrix& grad_y, Activation a) {
  switch (a) {
    case Activation::identity: return grad_y;
    case Activation::relu: return (y.array() > 0.0).select(grad_y, 0.0);
    case Activation::tanh: return (grad_y.array() * (1.0 - y.array().square())).matrix();
  }
  return grad_y;
}

}  // namespace detail

/// Feed-forward stack of dense layers. An empty stack is the identity on
/// `input_width`-wide inputs.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::size_t input_width) : input_width_(input_width) {}

  /// Layers with uniform weights in ±sqrt(6/(fan_in+fan_out)) and zero bias.
  static Mlp build(std::size_t input_width, std::span<const LayerSpec> specs, Rng& rng) {
    Mlp m(input_width);
    std::size_t in = input_width;
    for (const auto& s : specs) {
      require(s.width >= 1, "layer width must be >= 1");
      DenseLayer layer;
      const double bound = std::sqrt(6.0 / static_cast<double>(in + s.width));
      layer.weights.resize(static_cast<Eigen::Index>(s.width), static_cast<Eigen::Index>(in));
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) layer.weights(r, c) = rng.uniform(-bound, bound);
      }
      layer.bias = Vector::Zero(static_cast<Eigen::Index>(s.width));
      layer.activation = s.activation;
      layer.dropout = s.dropout;
      m.layers_.push_back(std::move(layer));
      in = s.width;
    }
    return m;
  }

  static Mlp from_layers(std::size_t input_width, std::vector<DenseLayer> layers) {
    Mlp m(input_width);
    std::size_t in = input_width;
    for (const auto& l : layers) {
      if (l.in_width() != in || static_cast<std::size_t>(l.bias.size()) != l.out_width()) {
        fail(ErrorCategory::invalid_argument, "layer shapes do not chain");
      }
      in = l.out_width();
    }
    m.layers_ = std::move(layers);
    return m;
  }

  std::size_t input_width() const { return input_width_; }
  std::size_t output_width() const { return layers_.empty() ? input_width_ : layers_.back().out_width(); }
  std::size_t depth() const { return layers_.size(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  std::uint64_t version() const { return version_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
  }

  /// Forward pass over the columns of `x`. Inverted dropout is applied after
  /// layers marked `dropout` in train mode only.
  Matrix forward(const Matrix& x, Mode mode, const Dropout& dropout = {}, ForwardCache* cache = nullptr) const {
    return run(x, cache, [&](std::size_t i, const Matrix& y) -> Matrix {
      if (mode != Mode::train || !layers_[i].dropout || dropout.rate <= 0.0) return {};
      require(dropout.rng != nullptr, "train-mode dropout needs an rng");
      require(dropout.rate < 1.0, "dropout rate must be < 1");
      const double keep = 1.0 - dropout.rate;
      Matrix mask(y.rows(), y.cols());
      for (Eigen::Index c = 0; c < mask.cols(); ++c) {
        for (Eigen::Index r = 0; r < mask.rows(); ++r) mask(r, c) = dropout.rng->uniform() < keep ? 1.0 / keep : 0.0;
      }
      return mask;
    });
  }

  /// Forward pass with caller-supplied dropout masks (empty = none).
  Matrix forward_with_masks(const Matrix& x, const std::vector<Matrix>& masks, ForwardCache* cache = nullptr) const {
    require(masks.size() == layers_.size(), "one mask slot per layer required");
    return run(x, cache, [&](std::size_t i, const Matrix&) { return masks[i]; });
  }

  /// Accumulates parameter gradients into `grads` (resized on first use) and
  /// returns the gradient with respect to the forward input.
  Matrix backward(const ForwardCache& cache, const Matrix& grad_output, MlpGradients& grads) const {
    if (cache.owner != this || cache.version != version_ || cache.inputs.size() != layers_.size()) {
      fail(ErrorCategory::invalid_argument, "backward called with a stale or foreign forward cache");
    }
    if (grads.layers.size() != layers_.size()) grads = zero_gradients();
    Matrix g = grad_output;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const auto& layer = layers_[i];
      if (g.rows() != static_cast<Eigen::Index>(layer.out_width()) || g.cols() != cache.outputs[i].cols()) {
        fail(ErrorCategory::invalid_argument, "backward gradient shape mismatch");
      }
      if (cache.masks[i].size() != 0) g = g.cwiseProduct(cache.masks[i]);
      const Matrix dz = detail::activation_grad(cache.outputs[i], g, layer.activation);
      grads.layers[i].weights.noalias() += dz * cache.inputs[i].transpose();
      grads.layers[i].bias += dz.rowwise().sum();
      g.noalias() = layer.weights.transpose() * dz;
    }
    return g;
  }

  MlpGradients zero_gradients() const {
    MlpGradients g;
    for (const auto& l : layers_) {
      g.layers.push_back({Matrix::Zero(l.weights.rows(), l.weights.cols()), Vector::Zero(l.bias.size())});
    }
    return g;
  }

  void bump_version() { ++version_; }

 private:
  template <typename MaskFn>
  Matrix run(const Matrix& x, ForwardCache* cache, MaskFn&& mask_for) const {
    if (x.rows() != static_cast<Eigen::Index>(input_width_)) {
      fail(ErrorCategory::invalid_argument, "forward input has " + std::to_string(x.rows()) + " rows, expected " +
                                                std::to_string(input_width_));
    }
    if (cache) {
      cache->owner = this;
      cache->version = version_;
      cache->inputs.clear();
      cache->outputs.clear();
      cache->masks.clear();
    }
    Matrix y = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& layer = layers_[i];
      Matrix z = layer.weights * y;
      z.colwise() += layer.bias;
      detail::activate(z, layer.activation);
      Matrix mask = mask_for(i, z);
      if (mask.size() != 0 && (mask.rows() != z.rows() || mask.cols() != z.cols())) {
        fail(ErrorCategory::invalid_argument, "dropout mask shape mismatch");
      }
      if (cache) {
        cache->inputs.push_back(std::move(y));
        cache->outputs.push_back(z);
        cache->masks.push_back(mask);
      }
      y = mask.size() != 0 ? Matrix(z.cwiseProduct(mask)) : std::move(z);
    }
    return y;
  }

  std::size_t input_width_ = 0;
  std::vector<DenseLayer> layers_;
  std::uint64_t version_ = 0;
};

/// p <- p - lr * g. Rejects non-finite gradients before touching parameters.
inline void sgd_step(Mlp& net, const MlpGradients& grads, double lr) {
  if (grads.layers.size() != net.depth()) fail(ErrorCategory::invalid_argument, "gradient/parameter shape mismatch");
  if (!grads.all_finite()) fail(ErrorCategory::numeric, "non-finite gradient in sgd_step");
  for (std::size_t i = 0; i < net.depth(); ++i) {
    auto& layer = net.layers()[i];
    const auto& g = grads.layers[i];
    if (g.weights.rows() != layer.weights.rows() || g.weights.cols() != layer.weights.cols() ||
        g.bias.size() != layer.bias.size()) {
      fail(ErrorCategory::invalid_argument, "gradient/parameter shape mismatch");
    }
    layer.weights.noalias() -= lr * g.weights;
    layer.bias.noalias() -= lr * g.bias;
  }
  net.bump_version();
}

inline Vector softmax(const Vector& logits) {
  Vector p = (logits.array() - logits.maxCoeff()).exp().matrix();
  return p / p.sum();
}

struct CrossEntropy {
  double loss;
  Vector grad;  // d loss / d logits
};

/// -log softmax(logits)[label], computed with max subtraction.
inline CrossEntropy softmax_cross_entropy(const Vector& logits, std::size_t label) {
  if (logits.size() < 2) fail(ErrorCategory::invalid_argument, "softmax_cross_entropy needs >= 2 classes");
  if (label >= static_cast<std::size_t>(logits.size())) {
    fail(ErrorCategory::invalid_argument, "label " + std::to_string(label) + " out of range");
  }
  const double mx = logits.maxCoeff();
  const Vector shifted = logits.array() - mx;
  const double log_z = std::log(shifted.array().exp().sum());
  CrossEntropy ce;
  ce.loss = log_z - shifted(static_cast<Eigen::Index>(label));
  ce.grad = (shifted.array() - log_z).exp().matrix();
  ce.grad(static_cast<Eigen::Index>(label)) -= 1.0;
  return ce;
}

// Checkpoint text format, versioned. Reals are written as hexadecimal
// floating point so a save/load cycle is bit-exact.
//   mlp 1 <input_width> <layer_count>
//   layer <out> <in> <activation> <dropout>
//   <out*in weights, row-major>
//   <out biases>

namespace detail {

inline void write_hex(std::ostream& out, double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::hex);
  out.write(buf, r.ptr - buf);
}

inline double read_hex(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) fail(ErrorCategory::data_format, "checkpoint truncated");
  double x = 0.0;
  auto r = std::from_chars(tok.data(), tok.data() + tok.size(), x, std::chars_format::hex);
  if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) {
    fail(ErrorCategory::data_format, "checkpoint has malformed real '" + tok + "'");
  }
  return x;
}

}  // namespace detail

inline void write_mlp(std::ostream& out, const Mlp& net) {
  out << "mlp 1 " << net.input_width() << ' ' << net.depth() << '\n';
  for (const auto& l : net.layers()) {
    out << "layer " << l.out_width() << ' ' << l.in_width() << ' ' << activation_name(l.activation) << ' '
        << (l.dropout ? 1 : 0) << '\n';
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        if (c) out << ' ';
        detail::write_hex(out, l.weights(r, c));
      }
      out << '\n';
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
      if (r) out << ' ';
      detail::write_hex(out, l.bias(r));
    }
    out << '\n';
  }
}

inline Mlp read_mlp(std::istream& in) {
  std::string tag;
  int version = 0;
  std::size_t input_width = 0, depth = 0;
  if (!(in >> tag >> version >> input_width >> depth) || tag != "mlp") {
    fail(ErrorCategory::data_format, "checkpoint: expected mlp header");
  }
  if (version != 1) fail(ErrorCategory::data_format, "checkpoint: unsupported mlp version " + std::to_string(version));
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i < depth; ++i) {
    std::size_t out_w = 0, in_w = 0;
    std::string act;
    int dropout = 0;
    if (!(in >> tag >> out_w >> in_w >> act >> dropout) || tag != "layer") {
      fail(ErrorCategory::data_format, "checkpoint: malformed layer header");
    }
    DenseLayer l;
    l.activation = parse_activation(act);
    l.dropout = dropout != 0;
    l.weights.resize(static_cast<Eigen::Index>(out_w), static_cast<Eigen::Index>(in_w));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = detail::read_hex(in);
    }
    l.bias.resize(static_cast<Eigen::Index>(out_w));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = detail::read_hex(in);
    layers.push_back(std::move(l));
  }
  return Mlp::from_layers(input_width, std::move(layers));
}

}  // namespace hyperwalk::nn
