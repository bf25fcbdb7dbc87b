#pragma once

// Feed-forward stacks of dense, convolution, transpose-convolution and reshape layers.

#include "gdvae/diffcore/ops.hpp"
#include "gdvae/diffcore/tape.hpp"

#include <json.hpp>

#include <random>
#include <string>
#include <vector>

namespace gdvae::model {

using diff::Shape;

enum class LayerKind { dense, conv, tconv, reshape };

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  std::size_t units = 0;  // dense width or output channels
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  diff::Activation activation = diff::Activation::none();
  bool bias = true;
  Shape shape;  // reshape target, per sample

  static LayerSpec dense(std::size_t units, diff::Activation a, bool bias = true);
  static LayerSpec conv(std::size_t channels, std::size_t kernel, std::size_t stride, std::size_t padding,
                        diff::Activation a);
  static LayerSpec tconv(std::size_t channels, std::size_t kernel, std::size_t stride, std::size_t padding,
                         diff::Activation a);
  static LayerSpec reshape(Shape s);

  nlohmann::json to_json() const;
  static LayerSpec from_json(const nlohmann::json& j);
};

/// Sequential network on per-sample shapes; forward() takes and returns a leading batch axis.
class Network {
 public:
  Network() = default;
  /// Validates the layer chain (ConfigError on inconsistent extents) and draws
  /// weights from N(0, g/fan_in), g = 2 before a rectifier and 1 otherwise. Biases start at 0.
  Network(Shape input, std::vector<LayerSpec> layers, std::mt19937_64& rng, const std::string& prefix);

  /// `trainable` binds parameters as tape leaves that receive gradients (the
  /// parameters' grad buffers are written during backward); otherwise as constants.
  diff::Var forward(diff::Tape& tape, diff::Var x, bool trainable) const;

  const Shape& input_shape() const { return input_; }
  const Shape& output_shape() const { return shapes_.back(); }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::vector<diff::Parameter>& parameters() { return params_; }
  const std::vector<diff::Parameter>& parameters() const { return params_; }
  std::size_t parameter_count() const;

 private:
  Shape input_;
  std::vector<LayerSpec> layers_;
  std::vector<Shape> shapes_;  // shapes_[i] is the output of layer i - 1, shapes_[0] the input
  std::vector<diff::Parameter> params_;
  std::vector<int> weight_index_, bias_index_;
};

/// Parse "relu" | "leaky_relu" | "none".
diff::Activation activation_from_json(const nlohmann::json& j);
nlohmann::json activation_to_json(diff::Activation a);

}  // namespace gdvae::model
