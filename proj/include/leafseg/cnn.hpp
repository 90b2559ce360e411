#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "leafseg/classes.hpp"
#include "leafseg/patchgen.hpp"

namespace leafseg {

enum class LayerKind : std::uint8_t { Conv = 0, MaxPool = 1, Dense = 2, Relu = 3, Softmax = 4 };

/// Conv is valid (no padding) with stride 1; MaxPool is 2x2 with stride 2.
struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  int units = 0;   // filters (Conv) or outputs (Dense)
  int kernel = 0;  // Conv only

  static LayerSpec conv(int filters, int kernel) { return {LayerKind::Conv, filters, kernel}; }
  static LayerSpec max_pool() { return {LayerKind::MaxPool, 0, 0}; }
  static LayerSpec dense(int units) { return {LayerKind::Dense, units, 0}; }
  static LayerSpec relu() { return {LayerKind::Relu, 0, 0}; }
  static LayerSpec softmax() { return {LayerKind::Softmax, 0, 0}; }

  bool parametric() const noexcept { return kind == LayerKind::Conv || kind == LayerKind::Dense; }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct Shape3 {
  int channels = 0;
  int height = 0;
  int width = 0;

  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(channels) * height * width; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

/// Conv(16,5) Relu Pool Conv(32,3) Relu Pool Dense(arity) Softmax for 16x16
/// inputs. Smaller inputs shrink the kernels and drop pools that would not
/// fit, so every patch size gets the same alternating layout.
std::vector<LayerSpec> default_architecture(Shape3 input, int arity, int final_filters = 32);

/// Conv1 Pool1 Pool2 Conv2 Pool3 Pool4 variant (each conv followed by two pools).
std::vector<LayerSpec> double_pooling_architecture(Shape3 input, int arity);

/// Feed-forward network over channel-major inputs, templated on the scalar
/// used for storage and arithmetic. Softmax, when present, must be last.
template <typename Scalar>
class Network {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  /// Weights of one layer; empty for Relu/MaxPool/Softmax.
  /// Conv: filters x (channels*k*k). Dense: units x inputs.
  struct Parameters {
    Matrix weights;
    Vector bias;
  };

  Network() = default;
  /// Validates the layer chain; all parameters start at zero.
  Network(Shape3 input, std::vector<LayerSpec> layers);

  /// Glorot-uniform weights (bound scaled by `init_scale`), zero biases.
  static Network initialized(Shape3 input, std::vector<LayerSpec> layers, std::uint64_t seed, double init_scale = 1.0);

  const Shape3& input_shape() const noexcept { return input_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  /// Output shape of every layer.
  const std::vector<Shape3>& shapes() const noexcept { return shapes_; }
  int arity() const noexcept { return arity_; }

  std::vector<Parameters>& parameters() noexcept { return params_; }
  const std::vector<Parameters>& parameters() const noexcept { return params_; }
  Eigen::Index parameter_count() const;

  /// Class probabilities, normalised in double precision.
  Eigen::VectorXd forward(const Eigen::Ref<const Vector>& input) const;
  /// Pre-softmax scores.
  Eigen::VectorXd logits(const Eigen::Ref<const Vector>& input) const;

  /// Zero-valued gradient buffers shaped like the parameters.
  std::vector<Parameters> zero_like() const;

  template <typename Other>
  Network<Other> cast() const {
    Network<Other> out(input_, layers_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      out.parameters()[i].weights = params_[i].weights.template cast<Other>();
      out.parameters()[i].bias = params_[i].bias.template cast<Other>();
    }
    return out;
  }

  /// Scratch state of one forward pass, reused by backpropagation.
  struct Trace {
    std::vector<Matrix> activations;  // channels x (h*w); [0] is the input
    std::vector<Matrix> columns;      // im2col buffers of Conv layers
    std::vector<std::vector<int>> argmax;
  };

  /// Runs every layer up to (not including) a trailing Softmax.
  void run(const Eigen::Ref<const Vector>& input, Trace& trace) const;

  /// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(logits).
  void backpropagate(Trace& trace, const Eigen::Ref<const Vector>& logit_grad, std::vector<Parameters>& grads) const;

 private:
  Shape3 input_;
  std::vector<LayerSpec> layers_;
  std::vector<Shape3> shapes_;
  std::vector<Parameters> params_;
  int arity_ = 0;
};

using Model = Network<float>;

/// One training example: a pointer into caller-owned patch storage.
struct Example {
  const Eigen::VectorXf* input = nullptr;
  int target = 0;
};

template <typename Scalar>
struct LossGradients {
  double loss = 0.0;  // mean cross-entropy
  std::vector<typename Network<Scalar>::Parameters> gradients;
  int correct = 0;  // argmax hits, measured before any update
};

template <typename Scalar>
LossGradients<Scalar> loss_and_gradients(const Network<Scalar>& net, std::span<const Example> batch);

/// Convenience form over labelled patches (targets are the four-way class indices).
template <typename Scalar>
LossGradients<Scalar> loss_and_gradients(const Network<Scalar>& net, std::span<const LabeledPatch> batch);

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  int epochs = 50;
  int batch_size = 64;
  std::uint64_t seed = 1;
  double init_scale = 1.0;

  void validate() const;
};

struct TrainLog {
  std::vector<double> epoch_loss;      // mean batch loss, measured before each update
  std::vector<double> epoch_accuracy;  // fraction of examples already classified correctly
};

/// Mini-batch SGD with momentum (v = mu v - lr g; w += v). Shuffling is
/// seeded by cfg.seed, so identical inputs give bit-identical networks.
template <typename Scalar>
Network<Scalar> train(Network<Scalar> net, std::span<const Example> data, const TrainConfig& cfg,
                      TrainLog* log = nullptr);

template <typename Scalar>
Network<Scalar> train(Network<Scalar> net, const PatchDataset& data, const TrainConfig& cfg, TrainLog* log = nullptr);

/// Index of the largest entry; ties go to the lowest index.
int argmax(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Three binary networks with one shared input shape.
/// split: 0 = external (Background/PlantEdge), 1 = internal (LeafEdge/InternalNoise)
/// internal: 0 = LeafEdge, 1 = InternalNoise
/// external: 0 = Background, 1 = PlantEdge
struct ClassifierTree {
  Model split;
  Model internal;
  Model external;
};

EdgeClass classify_fourway(const Model& net, const Patch& patch);
EdgeClass classify_tree(const ClassifierTree& tree, const Patch& patch);

/// Target of `c` for each tree network; -1 when the network does not see that class.
int split_target(EdgeClass c) noexcept;
int internal_target(EdgeClass c) noexcept;
int external_target(EdgeClass c) noexcept;

struct TreeTrainLog {
  TrainLog split;
  TrainLog internal;
  TrainLog external;
};

/// Trains the three networks from one four-class dataset; the child networks
/// see only the examples of their branch.
ClassifierTree train_tree(const PatchDataset& data, const std::vector<LayerSpec>& binary_layers,
                          const TrainConfig& cfg, TreeTrainLog* log = nullptr);

Model train_fourway(const PatchDataset& data, const std::vector<LayerSpec>& layers, const TrainConfig& cfg,
                    TrainLog* log = nullptr);

Shape3 patch_shape(const PatchDataset& data);
Shape3 patch_shape(const Patch& patch);

extern template class Network<float>;
extern template class Network<double>;

}  // namespace leafseg
