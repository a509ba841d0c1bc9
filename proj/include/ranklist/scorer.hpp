#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ranklist/errors.hpp"
#include "ranklist/rng.hpp"

namespace ranklist {

enum class Activation { relu, tanh, identity };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

inline Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + name + "' (valid: relu, tanh)");
}

struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;  // row-major, out x in
  std::vector<double> b;
  Activation act = Activation::identity;
};

struct ForwardCache {
  // acts[0] is the input; acts[l+1] is layer l's post-activation output.
  std::vector<std::vector<double>> acts;
};

// Feedforward scorer. Hidden layers share one activation, the final layer is
// linear. Built with output dimension 1 for scoring; wider final layers act
// as embedding heads. Initialization draws weights uniformly from
// [-1/sqrt(fan_in), 1/sqrt(fan_in)] layer by layer, row-major, from the
// seeded stream; biases start at zero.
class ScorerModel {
 public:
  ScorerModel() = default;

  ScorerModel(const std::vector<std::size_t>& dims, Activation hidden,
              std::uint64_t seed)
      : dims_(dims), hidden_(hidden) {
    if (dims.size() < 2) {
      throw ConfigError("scorer needs at least input and output dimensions");
    }
    for (std::size_t d : dims) {
      if (d == 0) throw ConfigError("scorer layer dimensions must be positive");
    }
    if (hidden == Activation::identity) {
      throw ConfigError("hidden activation must be relu or tanh");
    }
    Rng rng(seed);
    layers_.resize(dims.size() - 1);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Layer& layer = layers_[l];
      layer.in = dims[l];
      layer.out = dims[l + 1];
      layer.act = l + 1 == dims.size() - 1 ? Activation::identity : hidden;
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
      layer.w.resize(layer.out * layer.in);
      for (double& w : layer.w) w = rng.uniform(-bound, bound);
      layer.b.assign(layer.out, 0.0);
    }
  }

  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  Activation hidden_activation() const { return hidden_; }

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  // Used to bolt a linear read-out onto an embedding head.
  void append_identity_layer(std::vector<double> w, std::vector<double> b) {
    Layer layer;
    layer.in = dims_.back();
    layer.out = b.size();
    if (layer.out == 0 || w.size() != layer.out * layer.in) {
      throw ConfigError("appended layer has inconsistent shapes");
    }
    layer.w = std::move(w);
    layer.b = std::move(b);
    layer.act = Activation::identity;
    layers_.push_back(std::move(layer));
    dims_.push_back(layers_.back().out);
  }

  std::vector<double> forward(std::span<const double> x,
                              ForwardCache* cache = nullptr) const {
    if (x.size() != input_dim()) {
      throw ConfigError("input dimension " + std::to_string(x.size()) +
                        " does not match model input " +
                        std::to_string(input_dim()));
    }
    std::vector<double> cur(x.begin(), x.end());
    if (cache) {
      cache->acts.clear();
      cache->acts.push_back(cur);
    }
    for (const Layer& layer : layers_) {
      std::vector<double> next(layer.out);
      for (std::size_t i = 0; i < layer.out; ++i) {
        double acc = layer.b[i];
        const double* row = layer.w.data() + i * layer.in;
        for (std::size_t j = 0; j < layer.in; ++j) acc += row[j] * cur[j];
        switch (layer.act) {
          case Activation::relu: acc = acc > 0.0 ? acc : 0.0; break;
          case Activation::tanh: acc = std::tanh(acc); break;
          case Activation::identity: break;
        }
        next[i] = acc;
      }
      cur = std::move(next);
      if (cache) cache->acts.push_back(cur);
    }
    return cur;
  }

  double score(std::span<const double> x) const {
    if (output_dim() != 1) {
      throw ConfigError("score() needs a model with output dimension 1");
    }
    return forward(x)[0];
  }

 private:
  std::vector<std::size_t> dims_;
  Activation hidden_ = Activation::relu;
  std::vector<Layer> layers_;
};

using EmbeddingHead = ScorerModel;

struct Gradients {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;

  explicit Gradients(const ScorerModel& m) {
    w.resize(m.layers().size());
    b.resize(m.layers().size());
    for (std::size_t l = 0; l < m.layers().size(); ++l) {
      w[l].assign(m.layers()[l].w.size(), 0.0);
      b[l].assign(m.layers()[l].b.size(), 0.0);
    }
  }

  void zero() {
    for (auto& v : w) std::fill(v.begin(), v.end(), 0.0);
    for (auto& v : b) std::fill(v.begin(), v.end(), 0.0);
  }

  void scale(double s) {
    for (auto& v : w)
      for (double& x : v) x *= s;
    for (auto& v : b)
      for (double& x : v) x *= s;
  }

  double l2_norm() const {
    double sq = 0.0;
    for (const auto& v : w)
      for (double x : v) sq += x * x;
    for (const auto& v : b)
      for (double x : v) sq += x * x;
    return std::sqrt(sq);
  }
};

// Backpropagates d(loss)/d(output) for one cached forward pass, accumulating
// parameter gradients. Activation derivatives come from the cached
// post-activations (relu: 1 for positive outputs, tanh: 1 - a^2).
inline void backward(const ScorerModel& model, const ForwardCache& cache,
                     std::span<const double> dout, Gradients& grads) {
  const auto& layers = model.layers();
  if (cache.acts.size() != layers.size() + 1) {
    throw Error("forward cache does not match the model");
  }
  if (dout.size() != model.output_dim()) {
    throw Error("output gradient length does not match the model");
  }
  std::vector<double> dpost(dout.begin(), dout.end());
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Layer& layer = layers[l];
    const std::vector<double>& out_act = cache.acts[l + 1];
    const std::vector<double>& in_act = cache.acts[l];
    std::vector<double> dprev(layer.in, 0.0);
    for (std::size_t i = 0; i < layer.out; ++i) {
      double dpre = dpost[i];
      switch (layer.act) {
        case Activation::relu: dpre = out_act[i] > 0.0 ? dpre : 0.0; break;
        case Activation::tanh: dpre *= 1.0 - out_act[i] * out_act[i]; break;
        case Activation::identity: break;
      }
      if (dpre == 0.0) continue;
      grads.b[l][i] += dpre;
      double* grow = grads.w[l].data() + i * layer.in;
      const double* wrow = layer.w.data() + i * layer.in;
      for (std::size_t j = 0; j < layer.in; ++j) {
        grow[j] += dpre * in_act[j];
        dprev[j] += dpre * wrow[j];
      }
    }
    dpost = std::move(dprev);
  }
}

enum class OptimizerKind { sgd, adam };

inline const char* optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::sgd ? "sgd" : "adam";
}

inline OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + name + "' (valid: sgd, adam)");
}

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t t = 0;
  std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
};

inline OptimizerState make_optimizer(const ScorerModel& model, OptimizerKind kind,
                                     double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw ConfigError("learning rate must be finite and > 0");
  }
  OptimizerState st;
  st.kind = kind;
  st.lr = lr;
  if (kind == OptimizerKind::adam) {
    st.m_w.resize(model.layers().size());
    st.v_w.resize(model.layers().size());
    st.m_b.resize(model.layers().size());
    st.v_b.resize(model.layers().size());
    for (std::size_t l = 0; l < model.layers().size(); ++l) {
      st.m_w[l].assign(model.layers()[l].w.size(), 0.0);
      st.v_w[l].assign(model.layers()[l].w.size(), 0.0);
      st.m_b[l].assign(model.layers()[l].b.size(), 0.0);
      st.v_b[l].assign(model.layers()[l].b.size(), 0.0);
    }
  }
  return st;
}

// One optimizer step. Rejects non-finite gradients; a zero gradient leaves
// the parameters untouched while still advancing the step counter.
inline void step(ScorerModel& model, const Gradients& grads, OptimizerState& st) {
  for (const auto& v : grads.w)
    for (double g : v)
      if (!std::isfinite(g)) throw Error("non-finite parameter gradient");
  for (const auto& v : grads.b)
    for (double g : v)
      if (!std::isfinite(g)) throw Error("non-finite parameter gradient");

  st.t += 1;
  auto& layers = model.layers();
  if (st.kind == OptimizerKind::sgd) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t k = 0; k < layers[l].w.size(); ++k) {
        layers[l].w[k] -= st.lr * grads.w[l][k];
      }
      for (std::size_t k = 0; k < layers[l].b.size(); ++k) {
        layers[l].b[k] -= st.lr * grads.b[l][k];
      }
    }
    return;
  }

  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
  const auto adam_update = [&](std::vector<double>& param,
                               const std::vector<double>& g,
                               std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t k = 0; k < param.size(); ++k) {
      m[k] = st.beta1 * m[k] + (1.0 - st.beta1) * g[k];
      v[k] = st.beta2 * v[k] + (1.0 - st.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      param[k] -= st.lr * mhat / (std::sqrt(vhat) + st.epsilon);
    }
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    adam_update(layers[l].w, grads.w[l], st.m_w[l], st.v_w[l]);
    adam_update(layers[l].b, grads.b[l], st.m_b[l], st.v_b[l]);
  }
}

inline nlohmann::json model_to_json(const ScorerModel& model) {
  nlohmann::json layers = nlohmann::json::array();
  nlohmann::json acts = nlohmann::json::array();
  for (const Layer& layer : model.layers()) {
    layers.push_back({{"weights", layer.w}, {"bias", layer.b}});
    acts.push_back(activation_name(layer.act));
  }
  return nlohmann::json{
      {"format_version", 1},
      {"layer_dims", model.layer_dims()},
      {"activation", activation_name(model.hidden_activation())},
      {"layer_activations", acts},
      {"layers", layers}};
}

inline ScorerModel model_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != 1) {
      throw ParseError("unsupported model format_version " +
                       std::to_string(version));
    }
    const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    const Activation hidden = parse_activation(j.at("activation").get<std::string>());
    ScorerModel model(dims, hidden, 0);
    const auto& layer_json = j.at("layers");
    if (layer_json.size() != model.layers().size()) {
      throw ParseError("model layer count does not match layer_dims");
    }
    if (j.contains("layer_activations")) {
      const auto acts = j.at("layer_activations").get<std::vector<std::string>>();
      if (acts.size() != model.layers().size()) {
        throw ParseError("layer_activations length does not match layer_dims");
      }
      for (std::size_t l = 0; l < acts.size(); ++l) {
        model.layers()[l].act = parse_activation(acts[l]);
      }
    }
    for (std::size_t l = 0; l < model.layers().size(); ++l) {
      Layer& layer = model.layers()[l];
      const auto w = layer_json[l].at("weights").get<std::vector<double>>();
      const auto b = layer_json[l].at("bias").get<std::vector<double>>();
      if (w.size() != layer.w.size() || b.size() != layer.b.size()) {
        throw ParseError("layer " + std::to_string(l) +
                         " parameter shapes do not match layer_dims");
      }
      layer.w = w;
      layer.b = b;
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what());
  }
}

inline void save_model(const ScorerModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

inline ScorerModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("cannot parse model file '" + path.string() +
                     "': " + e.what());
  }
  return model_from_json(j);
}

// FNV-1a over the parameter bit patterns; used by determinism checks.
inline std::uint64_t parameter_hash(const ScorerModel& model) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  const auto mix = [&h](double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (bits >> (8 * byte)) & 0xFF;
      h *= 0x100000001B3ULL;
    }
  };
  for (const Layer& layer : model.layers()) {
    for (double v : layer.w) mix(v);
    for (double v : layer.b) mix(v);
  }
  return h;
}

}  // namespace ranklist
