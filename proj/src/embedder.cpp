#include "dca/embedder.hpp"

#include <cmath>
#include <string>

#include "dca/binary_io.hpp"
#include "dca/errors.hpp"
#include "dca/kernels.hpp"

namespace dca {

MlpModel::MlpModel(std::vector<DenseLayer> layers, bool normalize_output)
    : layers_(std::move(layers)), normalize_output_(normalize_output) {
  validate(*this);
}

MlpModel MlpModel::create(std::span<const std::size_t> widths, Rng& rng, bool normalize_output) {
  if (widths.size() < 2) throw ValidationError("an MLP needs at least input and output widths");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    if (in == 0 || out == 0) throw ValidationError("layer widths must be at least 1");
    DenseLayer layer{Matrix(out, in), std::vector<double>(out, 0.0)};
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    for (double& w : layer.weights.values()) w = scale * rng.normal();
    layers.push_back(std::move(layer));
  }
  return MlpModel(std::move(layers), normalize_output);
}

std::size_t MlpModel::input_dim() const { return layers_.front().inputs(); }
std::size_t MlpModel::output_dim() const { return layers_.back().outputs(); }

std::size_t MlpModel::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

bool operator==(const MlpModel& a, const MlpModel& b) {
  if (a.normalize_output_ != b.normalize_output_ || a.layers_.size() != b.layers_.size()) {
    return false;
  }
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (!(a.layers_[l].weights == b.layers_[l].weights) || a.layers_[l].bias != b.layers_[l].bias) {
      return false;
    }
  }
  return true;
}

void validate(const MlpModel& model) {
  const auto& layers = model.layers();
  if (layers.empty()) throw ValidationError("MLP has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.inputs() == 0 || layer.outputs() == 0) {
      throw ValidationError("layer " + std::to_string(l) + " has zero width");
    }
    if (layer.bias.size() != layer.outputs()) {
      throw ValidationError("layer " + std::to_string(l) + " bias length mismatch");
    }
    if (l > 0 && layer.inputs() != layers[l - 1].outputs()) {
      throw ValidationError("layer " + std::to_string(l) + " input width does not match layer " +
                            std::to_string(l - 1));
    }
    for (double v : layer.weights.values())
      if (!std::isfinite(v)) throw ValidationError("non-finite weight in layer " + std::to_string(l));
    for (double v : layer.bias)
      if (!std::isfinite(v)) throw ValidationError("non-finite bias in layer " + std::to_string(l));
  }
}

Matrix forward(const MlpModel& model, const Matrix& inputs) {
  ForwardCache cache;
  return forward(model, inputs, cache);
}

Matrix forward(const MlpModel& model, const Matrix& inputs, ForwardCache& cache) {
  if (inputs.cols() != model.input_dim()) {
    throw ValidationError("input width " + std::to_string(inputs.cols()) +
                          " does not match model input " + std::to_string(model.input_dim()));
  }
  cache = ForwardCache{};
  const auto& layers = model.layers();
  const std::size_t batch = inputs.rows();
  Matrix current = inputs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    Matrix pre(batch, layer.outputs());
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t o = 0; o < layer.outputs(); ++o) {
        pre(b, o) = kernels::dot(layer.weights.row(o), current.row(b)) + layer.bias[o];
      }
    }
    Matrix act = pre;
    if (l + 1 < layers.size()) {
      for (double& v : act.values()) v = v > 0.0 ? v : 0.0;
    }
    cache.inputs.push_back(std::move(current));
    cache.preactivations.push_back(std::move(pre));
    current = std::move(act);
  }
  cache.raw_output = current;
  if (model.normalize_output()) {
    for (std::size_t b = 0; b < batch; ++b) {
      auto row = current.row(b);
      const double norm = std::sqrt(kernels::dot(row, row));
      for (double& v : row) v = norm > 0.0 ? v / norm : 0.0;
    }
  }
  cache.output = current;
  return current;
}

MlpGradients backward(const MlpModel& model, const ForwardCache& cache, const Matrix& upstream) {
  const auto& layers = model.layers();
  if (cache.inputs.size() != layers.size() || cache.preactivations.size() != layers.size()) {
    throw ValidationError("backward called without a matching forward cache");
  }
  if (upstream.rows() != cache.output.rows() || upstream.cols() != cache.output.cols()) {
    throw ValidationError("upstream gradient shape does not match the cached output");
  }
  const std::size_t batch = upstream.rows();

  Matrix delta = upstream;
  if (model.normalize_output()) {
    // y = z / |z|  =>  dz = (g - y (y . g)) / |z|
    for (std::size_t b = 0; b < batch; ++b) {
      const auto z = cache.raw_output.row(b);
      const auto y = cache.output.row(b);
      auto g = delta.row(b);
      const double norm = std::sqrt(kernels::dot(z, z));
      if (norm == 0.0) {
        for (double& v : g) v = 0.0;
        continue;
      }
      const double proj = kernels::dot(y, g);
      for (std::size_t c = 0; c < g.size(); ++c) g[c] = (g[c] - y[c] * proj) / norm;
    }
  }

  MlpGradients grads;
  grads.weights.resize(layers.size());
  grads.bias.resize(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    const DenseLayer& layer = layers[l];
    const Matrix& in = cache.inputs[l];
    if (l + 1 < layers.size()) {
      const Matrix& pre = cache.preactivations[l];
      for (std::size_t k = 0; k < delta.size(); ++k) {
        if (!(pre.values()[k] > 0.0)) delta.values()[k] = 0.0;
      }
    }
    Matrix gw(layer.outputs(), layer.inputs());
    std::vector<double> gb(layer.outputs(), 0.0);
    Matrix gin(batch, layer.inputs());
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t o = 0; o < layer.outputs(); ++o) {
        const double d = delta(b, o);
        if (d == 0.0) continue;
        gb[o] += d;
        kernels::axpy(d, in.row(b), gw.row(o));
        kernels::axpy(d, layer.weights.row(o), gin.row(b));
      }
    }
    grads.weights[l] = std::move(gw);
    grads.bias[l] = std::move(gb);
    delta = std::move(gin);
  }
  grads.inputs = std::move(delta);
  return grads;
}

void adam_update(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
                 std::size_t step, double lr, const AdamConfig& cfg) {
  if (grads.size() != params.size()) throw ValidationError("Adam gradient size mismatch");
  if (moments.first.empty()) moments.first.assign(params.size(), 0.0);
  if (moments.second.empty()) moments.second.assign(params.size(), 0.0);
  if (moments.first.size() != params.size() || moments.second.size() != params.size()) {
    throw ValidationError("Adam state size mismatch");
  }
  if (step == 0) throw ValidationError("Adam step index is 1-based");
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    double& m = moments.first[k];
    double& v = moments.second[k];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[k] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

AdamState make_adam_state(const MlpModel& model) {
  AdamState state;
  for (const auto& layer : model.layers()) {
    state.weights.push_back({std::vector<double>(layer.weights.size(), 0.0),
                             std::vector<double>(layer.weights.size(), 0.0)});
    state.bias.push_back(
        {std::vector<double>(layer.bias.size(), 0.0), std::vector<double>(layer.bias.size(), 0.0)});
  }
  return state;
}

void adam_step(MlpModel& model, const MlpGradients& grads, AdamState& state, double lr,
               const AdamConfig& cfg) {
  auto& layers = model.layers();
  if (grads.weights.size() != layers.size() || grads.bias.size() != layers.size()) {
    throw ValidationError("gradient layer count does not match the model");
  }
  if (state.weights.empty()) state = make_adam_state(model);
  if (state.weights.size() != layers.size()) throw ValidationError("Adam state layer mismatch");
  ++state.step;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    adam_update(layers[l].weights.values(), grads.weights[l].values(), state.weights[l],
                state.step, lr, cfg);
    adam_update(layers[l].bias, grads.bias[l], state.bias[l], state.step, lr, cfg);
  }
}

std::vector<char> encode_checkpoint(const MlpModel& model, const std::string& metadata) {
  validate(model);
  binary::Writer w;
  w.bytes(std::string_view(kCheckpointMagic, 4));
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.layers().size()));
  w.put<std::uint32_t>(model.normalize_output() ? 1u : 0u);
  for (const auto& layer : model.layers()) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(layer.outputs()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(layer.inputs()));
    for (double v : layer.weights.values()) w.put<double>(v);
    for (double v : layer.bias) w.put<double>(v);
  }
  w.text_block(metadata);
  return w.buffer();
}

MlpModel decode_checkpoint(const std::vector<char>& bytes, std::string* metadata) {
  binary::Reader r(bytes, "checkpoint");
  r.expect_magic(std::string_view(kCheckpointMagic, 4));
  const auto version = r.get<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint: unsupported format version " + std::to_string(version) +
                       " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto count = r.get<std::uint32_t>();
  const auto flags = r.get<std::uint32_t>();
  if (flags > 1u) throw FormatError("checkpoint: unknown flag bits " + std::to_string(flags));
  // each layer needs at least its two dims
  r.need_items(count, 8);
  std::vector<DenseLayer> layers;
  for (std::uint32_t l = 0; l < count; ++l) {
    const auto out = r.get<std::uint32_t>();
    const auto in = r.get<std::uint32_t>();
    const std::uint64_t values = static_cast<std::uint64_t>(out) * in + out;
    r.need_items(values, sizeof(double));
    DenseLayer layer{Matrix(out, in), std::vector<double>(out)};
    for (double& v : layer.weights.values()) v = r.get<double>();
    for (double& v : layer.bias) v = r.get<double>();
    layers.push_back(std::move(layer));
  }
  std::string meta = r.text_block();
  r.expect_end();
  if (metadata != nullptr) *metadata = std::move(meta);
  return MlpModel(std::move(layers), (flags & 1u) != 0);
}

void save_checkpoint(const MlpModel& model, const std::string& path, const std::string& metadata) {
  binary::write_file(path, encode_checkpoint(model, metadata));
}

MlpModel load_checkpoint(const std::string& path, std::string* metadata) {
  return decode_checkpoint(binary::read_file(path), metadata);
}

}  // namespace dca
