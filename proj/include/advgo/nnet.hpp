#pragma once

// Policy/value networks with a convolutional or vision-transformer backbone
// feeding shared policy and value heads.

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "advgo/features.hpp"
#include "advgo/tensor.hpp"

namespace advgo {

enum class Backbone { cnn, vit };

struct NetworkConfig {
  Backbone backbone = Backbone::cnn;
  int blocks = 4;
  int channels = 32;  // residual width for cnn, embedding dim for vit
  int patch_size = 2;
  int heads = 4;
  int mlp_dim = 128;
  int head_channels = 32;  // hidden width of the value head
  int input_planes = kNumSpatialPlanes;
  int input_globals = kNumGlobalFeatures;
  int max_board = 19;

  int input_channels() const { return input_planes + input_globals; }
  /// Throws std::invalid_argument on inconsistent fields.
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;

  /// key=value lines, one per field.
  std::string to_text() const;
  static NetworkConfig from_text(const std::string& text);

  static NetworkConfig desk_cnn();
  static NetworkConfig desk_vit();
};

class ShapeMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class CorruptCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class VersionMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
using TensorMap = std::map<std::string, ad::Matrix<Scalar>>;

/// Expected tensor names and shapes for a configuration.
std::map<std::string, std::pair<int, int>> parameter_shapes(const NetworkConfig& config);

struct NetworkParameters {
  NetworkConfig config;
  TensorMap<float> tensors;
  std::int64_t step_count = 0;

  template <typename Scalar>
  TensorMap<Scalar> cast() const {
    TensorMap<Scalar> out;
    for (const auto& [name, t] : tensors) out.emplace(name, t.template cast<Scalar>());
    return out;
  }
  std::size_t parameter_count() const;
  bool all_finite() const;
};

/// Deterministic initialisation from a seed.
NetworkParameters init_network(const NetworkConfig& config, std::uint64_t seed);

struct NetworkOutput {
  std::vector<float> policy_logits;  // area plays then pass
  float value = 0.0f;                // mover's expected outcome in [-1, 1]
};

/// One stored training example.
struct TrainingRow {
  int board_size = 0;
  std::vector<std::uint8_t> planes;  // vertex-major, board_size^2 * input_planes
  std::vector<float> globals;
  std::vector<float> policy_target;  // area + 1
  float value_target = 0.0f;
  float weight = 1.0f;
  std::int64_t tag = 0;  // provenance, not used by training
};

TrainingRow make_row(const EncodedPosition& encoded, std::vector<float> policy_target,
                     float value_target, float weight = 1.0f);

struct TrainingBatch {
  std::vector<TrainingRow> rows;
  bool empty() const { return rows.empty(); }
};

/// Stacked network input for a group of same-size boards.
template <typename Scalar>
struct InputBatch {
  int board_size = 0;
  int count = 0;
  ad::Matrix<Scalar> spatial;  // (count * size^2) x planes
  ad::Matrix<Scalar> globals;  // count x globals
};

template <typename Scalar>
InputBatch<Scalar> stack_inputs(const std::vector<const TrainingRow*>& rows);
InputBatch<float> stack_encoded(const std::vector<const EncodedPosition*>& positions);

template <typename Scalar>
struct BatchOutput {
  ad::Matrix<Scalar> logits;  // count x (area + 1)
  ad::Matrix<Scalar> value;   // count x 1
};

/// Batched forward pass. Throws ShapeMismatch on incompatible input.
template <typename Scalar>
BatchOutput<Scalar> forward_batch(const NetworkConfig& config, const TensorMap<Scalar>& tensors,
                                  const InputBatch<Scalar>& input);

NetworkOutput forward(const NetworkParameters& params, const EncodedPosition& features);
NetworkOutput forward(const NetworkParameters& params, const BoardState& state);

/// Backbone embedding grid for one position: (size^2) x channels, row-major over vertices.
ad::Matrix<float> backbone_embedding(const NetworkParameters& params, const EncodedPosition& features);

inline constexpr double kDefaultValueWeight = 1.5;

/// Policy cross-entropy against the target plus value_weight * squared value error.
double loss(const NetworkOutput& output, const std::vector<float>& policy_target, double value_target,
            double value_weight = kDefaultValueWeight);

template <typename Scalar>
struct LossAndGradients {
  Scalar loss = 0;
  TensorMap<Scalar> gradients;
};

/// Mean weighted loss over the batch and its exact gradient with respect to every tensor.
template <typename Scalar>
LossAndGradients<Scalar> loss_and_gradients(const NetworkConfig& config, const TensorMap<Scalar>& tensors,
                                            const TrainingBatch& batch,
                                            Scalar value_weight = Scalar(kDefaultValueWeight));

/// Mean weighted batch loss without gradients.
template <typename Scalar>
Scalar batch_loss(const NetworkConfig& config, const TensorMap<Scalar>& tensors, const TrainingBatch& batch,
                  Scalar value_weight = Scalar(kDefaultValueWeight));

TensorMap<float> gradients(const NetworkParameters& params, const TrainingBatch& batch,
                           double value_weight = kDefaultValueWeight);

/// Momentum buffers live beside the parameters they update.
struct SgdState {
  TensorMap<float> velocity;
};

/// v <- momentum * v + (g + l2 * w); w <- w - lr * v; step_count += 1.
void sgd_step(NetworkParameters& params, const TensorMap<float>& grads, double lr, double momentum,
              SgdState& state, double l2 = 0.0);

void save_checkpoint(const NetworkParameters& params, const std::string& path);
NetworkParameters load_checkpoint(const std::string& path);
/// Also checks the stored configuration equals `expected` (ShapeMismatch otherwise).
NetworkParameters load_checkpoint(const std::string& path, const NetworkConfig& expected);

}  // namespace advgo
