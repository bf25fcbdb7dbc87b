#include "gdvae/model/network.hpp"

#include "gdvae/errors.hpp"

#include <cmath>

namespace gdvae::model {

namespace {

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv: return "conv";
    case LayerKind::tconv: return "tconv";
    case LayerKind::reshape: return "reshape";
  }
  return "?";
}

diff::Tensor normal_tensor(Shape shape, double stddev, std::mt19937_64& rng) {
  diff::Tensor t(std::move(shape));
  std::normal_distribution<double> n(0.0, stddev);
  for (auto& v : t.values()) v = n(rng);
  return t;
}

double gain(diff::Activation a) { return a.kind == diff::ActivationKind::identity ? 1.0 : 2.0; }

}  // namespace

LayerSpec LayerSpec::dense(std::size_t units, diff::Activation a, bool bias) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.units = units;
  s.activation = a;
  s.bias = bias;
  return s;
}

LayerSpec LayerSpec::conv(std::size_t channels, std::size_t kernel, std::size_t stride, std::size_t padding,
                          diff::Activation a) {
  LayerSpec s;
  s.kind = LayerKind::conv;
  s.units = channels;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  s.activation = a;
  return s;
}

LayerSpec LayerSpec::tconv(std::size_t channels, std::size_t kernel, std::size_t stride, std::size_t padding,
                           diff::Activation a) {
  LayerSpec s = conv(channels, kernel, stride, padding, a);
  s.kind = LayerKind::tconv;
  return s;
}

LayerSpec LayerSpec::reshape(Shape shape) {
  LayerSpec s;
  s.kind = LayerKind::reshape;
  s.shape = std::move(shape);
  s.bias = false;
  return s;
}

nlohmann::json activation_to_json(diff::Activation a) {
  switch (a.kind) {
    case diff::ActivationKind::relu: return "relu";
    case diff::ActivationKind::leaky_relu: return {{"leaky_relu", a.slope}};
    case diff::ActivationKind::identity: return "none";
  }
  return "none";
}

diff::Activation activation_from_json(const nlohmann::json& j) {
  if (j.is_object() && j.contains("leaky_relu")) return diff::Activation::leaky(j.at("leaky_relu").get<double>());
  const auto s = j.get<std::string>();
  if (s == "relu") return diff::Activation::relu();
  if (s == "none" || s == "identity") return diff::Activation::none();
  if (s == "leaky_relu") return diff::Activation::leaky(1e-6);
  throw ConfigError("architecture.activation", "unknown activation '" + s + "'");
}

nlohmann::json LayerSpec::to_json() const {
  nlohmann::json j{{"type", kind_name(kind)}};
  if (kind == LayerKind::reshape) {
    j["shape"] = shape;
    return j;
  }
  j[kind == LayerKind::dense ? "units" : "channels"] = units;
  if (kind != LayerKind::dense) {
    j["kernel"] = kernel;
    j["stride"] = stride;
    j["padding"] = padding;
  }
  j["activation"] = activation_to_json(activation);
  j["bias"] = bias;
  return j;
}

LayerSpec LayerSpec::from_json(const nlohmann::json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "reshape") return reshape(j.at("shape").get<Shape>());
    const auto act = activation_from_json(j.value("activation", nlohmann::json("none")));
    LayerSpec s;
    if (type == "dense") {
      s = dense(j.at("units").get<std::size_t>(), act);
    } else if (type == "conv" || type == "tconv") {
      const auto ch = j.at("channels").get<std::size_t>();
      const auto k = j.at("kernel").get<std::size_t>();
      const auto st = j.value("stride", std::size_t{1});
      const auto pad = j.value("padding", std::size_t{0});
      s = type == "conv" ? conv(ch, k, st, pad, act) : tconv(ch, k, st, pad, act);
    } else {
      throw ConfigError("architecture.layers.type", "unknown layer type '" + type + "'");
    }
    s.bias = j.value("bias", true);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("architecture.layers", e.what());
  }
}

Network::Network(Shape input, std::vector<LayerSpec> layers, std::mt19937_64& rng, const std::string& prefix)
    : input_(std::move(input)), layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("architecture." + prefix, "network has no layers");
  shapes_.push_back(input_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& l = layers_[i];
    const Shape& in = shapes_.back();
    const std::string where = "architecture." + prefix + ".layers[" + std::to_string(i) + "]";
    const std::string name = prefix + "." + std::to_string(i);
    int w = -1, b = -1;
    Shape out;
    switch (l.kind) {
      case LayerKind::reshape:
        if (diff::element_count(l.shape) != diff::element_count(in))
          throw ConfigError(where, "reshape " + diff::to_string(in) + " -> " + diff::to_string(l.shape) + " changes size");
        out = l.shape;
        break;
      case LayerKind::dense: {
        if (in.size() != 1) throw ConfigError(where, "dense layer needs a flat input, got " + diff::to_string(in));
        if (l.units == 0) throw ConfigError(where, "dense layer with zero units");
        const double sd = std::sqrt(gain(l.activation) / static_cast<double>(in[0]));
        w = static_cast<int>(params_.size());
        params_.emplace_back(name + ".W", normal_tensor({l.units, in[0]}, sd, rng));
        out = {l.units};
        break;
      }
      case LayerKind::conv:
      case LayerKind::tconv: {
        if (in.size() != 3) throw ConfigError(where, "convolution needs a [C,H,W] input, got " + diff::to_string(in));
        if (l.units == 0 || l.kernel == 0 || l.stride == 0) throw ConfigError(where, "zero channels, kernel or stride");
        const diff::ConvGeometry g{l.stride, l.padding};
        try {
          const bool fwd = l.kind == LayerKind::conv;
          const auto h = fwd ? diff::conv_output_extent(in[1], l.kernel, g) : diff::tconv_output_extent(in[1], l.kernel, g);
          const auto wd = fwd ? diff::conv_output_extent(in[2], l.kernel, g) : diff::tconv_output_extent(in[2], l.kernel, g);
          out = {l.units, h, wd};
        } catch (const ShapeError& e) {
          throw ConfigError(where, e.what());
        }
        const double taps = static_cast<double>(l.kernel * l.kernel);
        // a transpose convolution feeds each output from about taps / stride^2 inputs per channel
        const double fan_in = l.kind == LayerKind::conv
                                  ? static_cast<double>(in[0]) * taps
                                  : std::max(1.0, static_cast<double>(in[0]) * taps / double(l.stride * l.stride));
        const double sd = std::sqrt(gain(l.activation) / fan_in);
        const Shape ks = l.kind == LayerKind::conv ? Shape{l.units, in[0], l.kernel, l.kernel}
                                                   : Shape{in[0], l.units, l.kernel, l.kernel};
        w = static_cast<int>(params_.size());
        params_.emplace_back(name + ".K", normal_tensor(ks, sd, rng));
        break;
      }
    }
    if (l.kind != LayerKind::reshape && l.bias) {
      b = static_cast<int>(params_.size());
      params_.emplace_back(name + ".b", diff::Tensor({l.kind == LayerKind::dense ? l.units : out[0]}));
    }
    weight_index_.push_back(w);
    bias_index_.push_back(b);
    shapes_.push_back(out);
  }
}

diff::Var Network::forward(diff::Tape& tape, diff::Var x, bool trainable) const {
  auto bind = [&](int index) -> std::optional<diff::Var> {
    if (index < 0) return std::nullopt;
    const auto& p = params_[static_cast<std::size_t>(index)];
    return trainable ? tape.parameter(const_cast<diff::Parameter&>(p)) : tape.constant(p.value);
  };
  const Shape& xs = x.shape();
  if (xs.size() != input_.size() + 1 || !std::equal(input_.begin(), input_.end(), xs.begin() + 1))
    throw ShapeError("network input " + diff::to_string(xs) + " does not match [B," + diff::to_string(input_) + "]");
  const std::size_t batch = xs[0];
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& l = layers_[i];
    const auto w = bind(weight_index_[i]);
    const auto b = bind(bias_index_[i]);
    switch (l.kind) {
      case LayerKind::reshape: {
        Shape s{batch};
        s.insert(s.end(), l.shape.begin(), l.shape.end());
        x = diff::reshape(x, s);
        break;
      }
      case LayerKind::dense: x = diff::affine(x, *w, b); break;
      case LayerKind::conv: x = diff::conv2d(x, *w, b, {l.stride, l.padding}); break;
      case LayerKind::tconv: x = diff::tconv2d(x, *w, b, {l.stride, l.padding}); break;
    }
    if (l.kind != LayerKind::reshape && l.activation.kind != diff::ActivationKind::identity)
      x = diff::activation(x, l.activation);
  }
  return x;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

}  // namespace gdvae::model
