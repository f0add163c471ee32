#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dca/matrix.hpp"
#include "dca/rng.hpp"

namespace dca {

/// Affine layer; weights are out x in, row-major.
struct DenseLayer {
  Matrix weights;
  std::vector<double> bias;

  std::size_t inputs() const noexcept { return weights.cols(); }
  std::size_t outputs() const noexcept { return weights.rows(); }
};

/// Multilayer perceptron: rectifier on hidden layers, identity on the output,
/// optional L2 normalisation of each output row.
class MlpModel {
 public:
  MlpModel() = default;
  explicit MlpModel(std::vector<DenseLayer> layers, bool normalize_output = false);

  /// He-scaled Gaussian weights, zero biases. widths = {D_in, hidden..., D_emb}.
  static MlpModel create(std::span<const std::size_t> widths, Rng& rng,
                         bool normalize_output = false);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const noexcept;

  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  bool normalize_output() const noexcept { return normalize_output_; }

  friend bool operator==(const MlpModel& a, const MlpModel& b);

 private:
  std::vector<DenseLayer> layers_;
  bool normalize_output_ = false;
};

void validate(const MlpModel& model);

/// Intermediates recorded by forward() for backward().
struct ForwardCache {
  std::vector<Matrix> inputs;       // input to each layer
  std::vector<Matrix> preactivations;
  Matrix raw_output;                // before normalisation
  Matrix output;
};

Matrix forward(const MlpModel& model, const Matrix& inputs);
Matrix forward(const MlpModel& model, const Matrix& inputs, ForwardCache& cache);

struct MlpGradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> bias;
  Matrix inputs;
};

/// Reverse-mode pass for the cached forward call. Rectifier slope at 0 is 0.
MlpGradients backward(const MlpModel& model, const ForwardCache& cache, const Matrix& upstream);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates for one parameter tensor.
struct AdamMoments {
  std::vector<double> first;
  std::vector<double> second;
};

/// One bias-corrected Adam update of `params` in place. `step` is the 1-based
/// index of this update.
void adam_update(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
                 std::size_t step, double lr, const AdamConfig& cfg = {});

struct AdamState {
  std::size_t step = 0;
  std::vector<AdamMoments> weights;
  std::vector<AdamMoments> bias;
};

AdamState make_adam_state(const MlpModel& model);

void adam_step(MlpModel& model, const MlpGradients& grads, AdamState& state, double lr,
               const AdamConfig& cfg = {});

inline constexpr char kCheckpointMagic[] = "DCAM";
inline constexpr std::uint16_t kCheckpointVersion = 1;

/// Versioned binary checkpoint:
///   "DCAM" | u16 version | u32 layer count | u32 flags (bit 0: normalise)
///   per layer: u32 outputs | u32 inputs | f64 weights (row-major) | f64 biases
///   u32 length | metadata text
/// All little-endian.
void save_checkpoint(const MlpModel& model, const std::string& path,
                     const std::string& metadata = {});
MlpModel load_checkpoint(const std::string& path, std::string* metadata = nullptr);

std::vector<char> encode_checkpoint(const MlpModel& model, const std::string& metadata = {});
MlpModel decode_checkpoint(const std::vector<char>& bytes, std::string* metadata = nullptr);

}  // namespace dca
