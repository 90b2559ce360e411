#include "leafseg/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <type_traits>

#include "leafseg/error.hpp"
#include "leafseg/rng.hpp"

namespace leafseg {

namespace {

void add_pool_if_fits(std::vector<LayerSpec>& layers, int& h, int& w) {
  if (h >= 2 && w >= 2) {
    layers.push_back(LayerSpec::max_pool());
    h /= 2;
    w /= 2;
  }
}

void add_conv(std::vector<LayerSpec>& layers, int filters, int preferred, int& h, int& w) {
  const int k = std::max(1, std::min({preferred, h, w}));
  layers.push_back(LayerSpec::conv(filters, k));
  layers.push_back(LayerSpec::relu());
  h -= k - 1;
  w -= k - 1;
}

}  // namespace

std::vector<LayerSpec> default_architecture(Shape3 input, int arity, int final_filters) {
  std::vector<LayerSpec> layers;
  int h = input.height;
  int w = input.width;
  add_conv(layers, 16, std::min(h, w) >= 12 ? 5 : 3, h, w);
  add_pool_if_fits(layers, h, w);
  add_conv(layers, final_filters, 3, h, w);
  add_pool_if_fits(layers, h, w);
  layers.push_back(LayerSpec::dense(arity));
  layers.push_back(LayerSpec::softmax());
  return layers;
}

std::vector<LayerSpec> double_pooling_architecture(Shape3 input, int arity) {
  std::vector<LayerSpec> layers;
  int h = input.height;
  int w = input.width;
  add_conv(layers, 16, std::min(h, w) >= 12 ? 5 : 3, h, w);
  add_pool_if_fits(layers, h, w);
  add_pool_if_fits(layers, h, w);
  add_conv(layers, 32, 3, h, w);
  add_pool_if_fits(layers, h, w);
  add_pool_if_fits(layers, h, w);
  layers.push_back(LayerSpec::dense(arity));
  layers.push_back(LayerSpec::softmax());
  return layers;
}

template <typename Scalar>
Network<Scalar>::Network(Shape3 input, std::vector<LayerSpec> layers) : input_(input), layers_(std::move(layers)) {
  if (input.channels < 1 || input.height < 1 || input.width < 1) {
    throw Error(ErrorCode::ShapeMismatch, "input shape must be positive");
  }
  if (layers_.empty()) throw Error(ErrorCode::ShapeMismatch, "network has no layers");
  Shape3 s = input;
  bool flattened = false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& l = layers_[i];
    Parameters p;
    switch (l.kind) {
      case LayerKind::Conv:
        if (flattened) throw Error(ErrorCode::ShapeMismatch, "Conv after Dense");
        if (l.units < 1 || l.kernel < 1 || l.kernel > s.height || l.kernel > s.width) {
          throw Error(ErrorCode::ShapeMismatch, "Conv kernel does not fit its input");
        }
        p.weights = Matrix::Zero(l.units, s.channels * l.kernel * l.kernel);
        p.bias = Vector::Zero(l.units);
        s = {l.units, s.height - l.kernel + 1, s.width - l.kernel + 1};
        break;
      case LayerKind::MaxPool:
        if (flattened || s.height < 2 || s.width < 2) throw Error(ErrorCode::ShapeMismatch, "MaxPool needs 2x2 input");
        s = {s.channels, s.height / 2, s.width / 2};
        break;
      case LayerKind::Dense:
        if (l.units < 1) throw Error(ErrorCode::ShapeMismatch, "Dense needs units");
        p.weights = Matrix::Zero(l.units, s.size());
        p.bias = Vector::Zero(l.units);
        s = {l.units, 1, 1};
        flattened = true;
        break;
      case LayerKind::Relu:
        break;
      case LayerKind::Softmax:
        if (i + 1 != layers_.size()) throw Error(ErrorCode::ShapeMismatch, "Softmax must be the last layer");
        break;
    }
    shapes_.push_back(s);
    params_.push_back(std::move(p));
  }
  const std::size_t last_dense = layers_.back().kind == LayerKind::Softmax ? layers_.size() - 2 : layers_.size() - 1;
  if (layers_.size() < 1 || last_dense >= layers_.size() || layers_[last_dense].kind != LayerKind::Dense) {
    throw Error(ErrorCode::ShapeMismatch, "network must end in Dense (optionally followed by Softmax)");
  }
  arity_ = layers_[last_dense].units;
  if (arity_ < 2) throw Error(ErrorCode::ShapeMismatch, "output arity must be >= 2");
}

template <typename Scalar>
Network<Scalar> Network<Scalar>::initialized(Shape3 input, std::vector<LayerSpec> layers, std::uint64_t seed,
                                             double init_scale) {
  Network net(input, std::move(layers));
  Rng rng(seed);
  for (std::size_t i = 0; i < net.layers_.size(); ++i) {
    const LayerSpec& l = net.layers_[i];
    if (!l.parametric()) continue;
    auto& w = net.params_[i].weights;
    const double fan_in = static_cast<double>(w.cols());
    const double fan_out = l.kind == LayerKind::Conv ? static_cast<double>(l.units) * l.kernel * l.kernel
                                                     : static_cast<double>(l.units);
    const double bound = init_scale * std::sqrt(6.0 / (fan_in + fan_out));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<Scalar>(rng.uniform(-bound, bound));
    }
  }
  return net;
}

template <typename Scalar>
Eigen::Index Network<Scalar>::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& p : params_) n += p.weights.size() + p.bias.size();
  return n;
}

template <typename Scalar>
std::vector<typename Network<Scalar>::Parameters> Network<Scalar>::zero_like() const {
  std::vector<Parameters> out(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out[i].weights = Matrix::Zero(params_[i].weights.rows(), params_[i].weights.cols());
    out[i].bias = Vector::Zero(params_[i].bias.size());
  }
  return out;
}

template <typename Scalar>
void Network<Scalar>::run(const Eigen::Ref<const Vector>& input, Trace& trace) const {
  if (input.size() != input_.size()) throw Error(ErrorCode::ShapeMismatch, "input does not match network shape");
  const std::size_t n = layers_.size();
  trace.activations.resize(n + 1);
  trace.columns.resize(n);
  trace.argmax.resize(n);
  trace.activations[0] = Eigen::Map<const Matrix>(input.data(), input_.channels,
                                                  static_cast<Eigen::Index>(input_.height) * input_.width);
  Shape3 in = input_;
  for (std::size_t i = 0; i < n; ++i) {
    const LayerSpec& l = layers_[i];
    const Shape3& out_shape = shapes_[i];
    const Matrix& x = trace.activations[i];
    Matrix& y = trace.activations[i + 1];
    switch (l.kind) {
      case LayerKind::Conv: {
        const int k = l.kernel;
        const int oh = out_shape.height;
        const int ow = out_shape.width;
        Matrix& cols = trace.columns[i];
        cols.resize(static_cast<Eigen::Index>(in.channels) * k * k, static_cast<Eigen::Index>(oh) * ow);
        for (int c = 0; c < in.channels; ++c) {
          for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
              const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + ki) * k + kj;
              for (int oy = 0; oy < oh; ++oy) {
                const Scalar* src = x.row(c).data() + static_cast<Eigen::Index>(oy + ki) * in.width + kj;
                Scalar* dst = cols.row(row).data() + static_cast<Eigen::Index>(oy) * ow;
                std::copy(src, src + ow, dst);
              }
            }
          }
        }
        y.noalias() = params_[i].weights * cols;
        y.colwise() += params_[i].bias;
        break;
      }
      case LayerKind::MaxPool: {
        const int oh = out_shape.height;
        const int ow = out_shape.width;
        y.resize(in.channels, static_cast<Eigen::Index>(oh) * ow);
        auto& arg = trace.argmax[i];
        arg.resize(static_cast<std::size_t>(y.size()));
        for (int c = 0; c < in.channels; ++c) {
          for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
              int best = (2 * oy) * in.width + 2 * ox;
              for (const int off : {1, in.width, in.width + 1}) {
                const int cand = (2 * oy) * in.width + 2 * ox + off;
                if (x(c, cand) > x(c, best)) best = cand;
              }
              const Eigen::Index o = static_cast<Eigen::Index>(oy) * ow + ox;
              y(c, o) = x(c, best);
              arg[static_cast<std::size_t>(c * oh * ow + o)] = best;
            }
          }
        }
        break;
      }
      case LayerKind::Dense: {
        const Eigen::Map<const Vector> flat(x.data(), x.size());
        y.resize(l.units, 1);
        y.col(0).noalias() = params_[i].weights * flat;
        y.col(0) += params_[i].bias;
        break;
      }
      case LayerKind::Relu:
        y = x.cwiseMax(Scalar(0));
        break;
      case LayerKind::Softmax:
        y = x;  // normalisation happens in double precision in forward()/loss
        break;
    }
    in = out_shape;
  }
}

template <typename Scalar>
void Network<Scalar>::backpropagate(Trace& trace, const Eigen::Ref<const Vector>& logit_grad,
                                    std::vector<Parameters>& grads) const {
  const std::size_t n = layers_.size();
  Matrix grad = Eigen::Map<const Matrix>(logit_grad.data(), logit_grad.size(), 1);
  for (std::size_t idx = n; idx-- > 0;) {
    const LayerSpec& l = layers_[idx];
    const Shape3 in = idx == 0 ? input_ : shapes_[idx - 1];
    const Matrix& x = trace.activations[idx];
    const bool need_input_grad = idx > 0;
    switch (l.kind) {
      case LayerKind::Softmax:
        break;
      case LayerKind::Dense: {
        const Eigen::Map<const Vector> flat(x.data(), x.size());
        grads[idx].weights.noalias() += grad.col(0) * flat.transpose();
        grads[idx].bias += grad.col(0);
        if (need_input_grad) {
          Vector dx = params_[idx].weights.transpose() * grad.col(0);
          grad = Eigen::Map<const Matrix>(dx.data(), in.channels, static_cast<Eigen::Index>(in.height) * in.width);
        }
        break;
      }
      case LayerKind::Relu:
        grad = (x.array() > Scalar(0)).select(grad, Scalar(0));
        break;
      case LayerKind::MaxPool: {
        Matrix dx = Matrix::Zero(in.channels, static_cast<Eigen::Index>(in.height) * in.width);
        const auto& arg = trace.argmax[idx];
        const Eigen::Index plane = grad.cols();
        for (int c = 0; c < in.channels; ++c) {
          for (Eigen::Index o = 0; o < plane; ++o) dx(c, arg[static_cast<std::size_t>(c * plane + o)]) += grad(c, o);
        }
        grad = std::move(dx);
        break;
      }
      case LayerKind::Conv: {
        const Matrix& cols = trace.columns[idx];
        grads[idx].weights.noalias() += grad * cols.transpose();
        grads[idx].bias += grad.rowwise().sum().transpose();
        if (need_input_grad) {
          const Matrix dcols = params_[idx].weights.transpose() * grad;
          const int k = l.kernel;
          const int oh = shapes_[idx].height;
          const int ow = shapes_[idx].width;
          Matrix dx = Matrix::Zero(in.channels, static_cast<Eigen::Index>(in.height) * in.width);
          for (int c = 0; c < in.channels; ++c) {
            for (int ki = 0; ki < k; ++ki) {
              for (int kj = 0; kj < k; ++kj) {
                const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + ki) * k + kj;
                for (int oy = 0; oy < oh; ++oy) {
                  const Scalar* src = dcols.row(row).data() + static_cast<Eigen::Index>(oy) * ow;
                  Scalar* dst = dx.row(c).data() + static_cast<Eigen::Index>(oy + ki) * in.width + kj;
                  for (int ox = 0; ox < ow; ++ox) dst[ox] += src[ox];
                }
              }
            }
          }
          grad = std::move(dx);
        }
        break;
      }
    }
  }
}

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  const Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

template <typename Scalar>
Eigen::VectorXd Network<Scalar>::logits(const Eigen::Ref<const Vector>& input) const {
  Trace trace;
  run(input, trace);
  return trace.activations.back().col(0).template cast<double>();
}

template <typename Scalar>
Eigen::VectorXd Network<Scalar>::forward(const Eigen::Ref<const Vector>& input) const {
  return softmax(logits(input));
}

int argmax(const Eigen::Ref<const Eigen::VectorXd>& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

template <typename Scalar>
LossGradients<Scalar> loss_and_gradients(const Network<Scalar>& net, std::span<const Example> batch) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "loss over an empty batch");
  using Vector = typename Network<Scalar>::Vector;
  LossGradients<Scalar> out;
  out.gradients = net.zero_like();
  typename Network<Scalar>::Trace trace;
  Vector converted;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const Example& ex : batch) {
    if (ex.target < 0 || ex.target >= net.arity()) throw Error(ErrorCode::LabelOutOfRange, "target >= arity");
    if constexpr (std::is_same_v<Scalar, float>) {
      net.run(*ex.input, trace);
    } else {
      converted = ex.input->template cast<Scalar>();
      net.run(converted, trace);
    }
    const Eigen::VectorXd z = trace.activations.back().col(0).template cast<double>();
    const Eigen::VectorXd p = softmax(z);
    out.loss -= std::log(std::max(p(ex.target), 1e-300)) * inv_n;
    if (argmax(p) == ex.target) ++out.correct;
    Eigen::VectorXd dz = p * inv_n;
    dz(ex.target) -= inv_n;
    const Vector dz_s = dz.template cast<Scalar>();
    net.backpropagate(trace, dz_s, out.gradients);
  }
  return out;
}

template <typename Scalar>
LossGradients<Scalar> loss_and_gradients(const Network<Scalar>& net, std::span<const LabeledPatch> batch) {
  std::vector<Example> examples;
  examples.reserve(batch.size());
  for (const auto& item : batch) examples.push_back({&item.patch.values, index_of(item.label)});
  return loss_and_gradients(net, std::span<const Example>(examples));
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorCode::InvalidArgument, "momentum must be in [0, 1)");
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch size must be >= 1");
}

template <typename Scalar>
Network<Scalar> train(Network<Scalar> net, std::span<const Example> data, const TrainConfig& cfg, TrainLog* log) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to train on");
  for (const Example& ex : data) {
    if (ex.target < 0 || ex.target >= net.arity()) {
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(ex.target) + " outside network arity");
    }
    if (ex.input->size() != net.input_shape().size()) throw Error(ErrorCode::ShapeMismatch, "example shape");
  }
  auto velocity = net.zero_like();
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.seed);
  std::vector<Example> batch;
  const auto lr = static_cast<Scalar>(cfg.learning_rate);
  const auto mu = static_cast<Scalar>(cfg.momentum);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
      const auto lg = loss_and_gradients(net, std::span<const Example>(batch));
      loss_sum += lg.loss * static_cast<double>(batch.size());
      correct += static_cast<std::size_t>(lg.correct);
      auto& params = net.parameters();
      for (std::size_t l = 0; l < params.size(); ++l) {
        velocity[l].weights = mu * velocity[l].weights - lr * lg.gradients[l].weights;
        velocity[l].bias = mu * velocity[l].bias - lr * lg.gradients[l].bias;
        params[l].weights += velocity[l].weights;
        params[l].bias += velocity[l].bias;
      }
    }
    if (log != nullptr) {
      log->epoch_loss.push_back(loss_sum / static_cast<double>(data.size()));
      log->epoch_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(data.size()));
    }
  }
  return net;
}

template <typename Scalar>
Network<Scalar> train(Network<Scalar> net, const PatchDataset& data, const TrainConfig& cfg, TrainLog* log) {
  std::vector<Example> examples;
  examples.reserve(data.size());
  for (const auto& item : data.items) examples.push_back({&item.patch.values, index_of(item.label)});
  return train(std::move(net), std::span<const Example>(examples), cfg, log);
}

int split_target(EdgeClass c) noexcept {
  return (c == EdgeClass::LeafEdge || c == EdgeClass::InternalNoise) ? 1 : 0;
}

int internal_target(EdgeClass c) noexcept {
  if (c == EdgeClass::LeafEdge) return 0;
  if (c == EdgeClass::InternalNoise) return 1;
  return -1;
}

int external_target(EdgeClass c) noexcept {
  if (c == EdgeClass::Background) return 0;
  if (c == EdgeClass::PlantEdge) return 1;
  return -1;
}

namespace {

void require_patch_shape(const Model& net, const Patch& patch) {
  if (net.input_shape() != patch_shape(patch)) throw Error(ErrorCode::ShapeMismatch, "patch does not fit network");
}

}  // namespace

EdgeClass classify_fourway(const Model& net, const Patch& patch) {
  if (net.arity() != kEdgeClassCount) throw Error(ErrorCode::ShapeMismatch, "four-way classification needs arity 4");
  require_patch_shape(net, patch);
  return static_cast<EdgeClass>(argmax(net.forward(patch.values)));
}

EdgeClass classify_tree(const ClassifierTree& tree, const Patch& patch) {
  require_patch_shape(tree.split, patch);
  if (argmax(tree.split.forward(patch.values)) == 1) {
    return argmax(tree.internal.forward(patch.values)) == 0 ? EdgeClass::LeafEdge : EdgeClass::InternalNoise;
  }
  return argmax(tree.external.forward(patch.values)) == 0 ? EdgeClass::Background : EdgeClass::PlantEdge;
}

Shape3 patch_shape(const PatchDataset& data) { return {data.channels, data.side, data.cols()}; }

Shape3 patch_shape(const Patch& patch) { return {patch.channels, patch.rows, patch.cols}; }

namespace {

std::vector<Example> examples_for(const PatchDataset& data, int (*target)(EdgeClass)) {
  std::vector<Example> out;
  for (const auto& item : data.items) {
    const int t = target(item.label);
    if (t >= 0) out.push_back({&item.patch.values, t});
  }
  return out;
}

Model train_binary(const PatchDataset& data, int (*target)(EdgeClass), const std::vector<LayerSpec>& layers,
                   const TrainConfig& cfg, std::uint64_t salt, TrainLog* log) {
  const std::vector<Example> examples = examples_for(data, target);
  TrainConfig local = cfg;
  local.seed = cfg.seed ^ salt;
  Model net = Model::initialized(patch_shape(data), layers, local.seed, cfg.init_scale);
  if (examples.empty()) return net;
  return train(std::move(net), std::span<const Example>(examples), local, log);
}

}  // namespace

ClassifierTree train_tree(const PatchDataset& data, const std::vector<LayerSpec>& binary_layers,
                          const TrainConfig& cfg, TreeTrainLog* log) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no patches to train on");
  ClassifierTree tree;
  tree.split = train_binary(data, split_target, binary_layers, cfg, 0x5011u, log ? &log->split : nullptr);
  tree.internal = train_binary(data, internal_target, binary_layers, cfg, 0x1e7au, log ? &log->internal : nullptr);
  tree.external = train_binary(data, external_target, binary_layers, cfg, 0xe87au, log ? &log->external : nullptr);
  return tree;
}

Model train_fourway(const PatchDataset& data, const std::vector<LayerSpec>& layers, const TrainConfig& cfg,
                    TrainLog* log) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no patches to train on");
  Model net = Model::initialized(patch_shape(data), layers, cfg.seed, cfg.init_scale);
  return train(std::move(net), data, cfg, log);
}

template class Network<float>;
template class Network<double>;

template LossGradients<float> loss_and_gradients(const Network<float>&, std::span<const Example>);
template LossGradients<double> loss_and_gradients(const Network<double>&, std::span<const Example>);
template LossGradients<float> loss_and_gradients(const Network<float>&, std::span<const LabeledPatch>);
template LossGradients<double> loss_and_gradients(const Network<double>&, std::span<const LabeledPatch>);
template Network<float> train(Network<float>, std::span<const Example>, const TrainConfig&, TrainLog*);
template Network<double> train(Network<double>, std::span<const Example>, const TrainConfig&, TrainLog*);
template Network<float> train(Network<float>, const PatchDataset&, const TrainConfig&, TrainLog*);
template Network<double> train(Network<double>, const PatchDataset&, const TrainConfig&, TrainLog*);

}  // namespace leafseg
