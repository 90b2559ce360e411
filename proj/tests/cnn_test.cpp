#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "leafseg/cnn.hpp"
#include "leafseg/error.hpp"
#include "leafseg/rng.hpp"

namespace leafseg {
namespace {

using testing::gradient_check;
using testing::random_batch;
using testing::random_small_network;

Eigen::VectorXf ramp_input(int n) {
  Eigen::VectorXf v(n);
  for (int i = 0; i < n; ++i) v(i) = static_cast<float>(i + 1);
  return v;
}

Patch zero_patch(int channels, int rows, int cols) {
  Patch p;
  p.channels = channels;
  p.rows = rows;
  p.cols = cols;
  p.values = Eigen::VectorXf::Zero(static_cast<Eigen::Index>(channels) * rows * cols);
  return p;
}

/// Dense-only net whose output is fixed by its bias.
Model constant_model(Shape3 shape, const std::vector<double>& logits) {
  Model net(shape, {LayerSpec::dense(static_cast<int>(logits.size())), LayerSpec::softmax()});
  for (std::size_t i = 0; i < logits.size(); ++i) net.parameters()[0].bias(static_cast<Eigen::Index>(i)) = static_cast<float>(logits[i]);
  return net;
}

TEST(Architecture, DefaultFor16x16) {
  const auto layers = default_architecture({3, 16, 16}, 4);
  const std::vector<LayerSpec> expected = {LayerSpec::conv(16, 5), LayerSpec::relu(), LayerSpec::max_pool(),
                                           LayerSpec::conv(32, 3), LayerSpec::relu(), LayerSpec::max_pool(),
                                           LayerSpec::dense(4),    LayerSpec::softmax()};
  EXPECT_EQ(layers, expected);
  const Model net({3, 16, 16}, layers);
  EXPECT_EQ(net.shapes()[5], (Shape3{32, 2, 2}));
}

TEST(Architecture, EverySupportedInputBuilds) {
  for (int h = 1; h <= 24; ++h) {
    for (const int w : {1, 3, 5, 8, 16}) {
      EXPECT_NO_THROW(Model({3, h, w}, default_architecture({3, h, w}, 2))) << h << "x" << w;
    }
  }
}

TEST(Architecture, DoublePoolingVariant) {
  const auto layers = double_pooling_architecture({3, 32, 32}, 4);
  const Model net({3, 32, 32}, layers);
  EXPECT_EQ(net.arity(), 4);
  int pools = 0;
  for (const auto& l : layers) pools += l.kind == LayerKind::MaxPool ? 1 : 0;
  EXPECT_EQ(pools, 4);
}

TEST(NetworkShape, InvalidChainsRejected) {
  EXPECT_THROW(Model({3, 4, 4}, {}), Error);
  EXPECT_THROW(Model({3, 4, 4}, {LayerSpec::softmax(), LayerSpec::dense(2)}), Error);
  EXPECT_THROW(Model({3, 4, 4}, {LayerSpec::conv(2, 5), LayerSpec::dense(2)}), Error);
  EXPECT_THROW(Model({3, 4, 4}, {LayerSpec::dense(1), LayerSpec::softmax()}), Error);
  EXPECT_THROW(Model({3, 1, 4}, {LayerSpec::max_pool(), LayerSpec::dense(2)}), Error);
  EXPECT_THROW(Model({3, 4, 4}, {LayerSpec::dense(3), LayerSpec::conv(1, 1), LayerSpec::dense(2)}), Error);
  EXPECT_THROW(Model({0, 4, 4}, {LayerSpec::dense(2)}), Error);
  try {
    Model({3, 4, 4}, {LayerSpec::conv(2, 5), LayerSpec::dense(2)});
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(Forward, HandComputedConvDense) {
  Network<double> net({1, 4, 4}, {LayerSpec::conv(1, 2), LayerSpec::dense(2), LayerSpec::softmax()});
  net.parameters()[0].weights << 1, 2, 3, 4;
  net.parameters()[0].bias << 0.5;
  auto& dense = net.parameters()[1].weights;
  dense.setZero();
  dense.row(0).setOnes();
  dense(1, 4) = 1.0;
  // conv output at (oy, ox) is 10 v + 34.5 with v = 4 oy + ox + 1
  const Eigen::VectorXd logits = net.logits(ramp_input(16).cast<double>());
  EXPECT_DOUBLE_EQ(logits(0), 850.5);
  EXPECT_DOUBLE_EQ(logits(1), 94.5);
  const Eigen::VectorXd p = net.forward(ramp_input(16).cast<double>());
  EXPECT_NEAR(p.sum(), 1.0, 1e-15);
  EXPECT_GT(p(0), p(1));
}

TEST(Forward, HandComputedMaxPoolAndRelu) {
  Network<double> net({1, 4, 4}, {LayerSpec::max_pool(), LayerSpec::relu(), LayerSpec::dense(4)});
  auto& w = net.parameters()[2].weights;
  w.setIdentity();
  Eigen::VectorXd x(16);
  x << 1, -2, 3, -4,   //
      -5, 0.5, -7, 2,  //
      -9, -10, -11, -12, -13, -14, -15, -16;
  const Eigen::VectorXd z = net.logits(x);
  EXPECT_DOUBLE_EQ(z(0), 1.0);
  EXPECT_DOUBLE_EQ(z(1), 3.0);
  EXPECT_DOUBLE_EQ(z(2), 0.0);
  EXPECT_DOUBLE_EQ(z(3), 0.0);
}

TEST(Forward, ZeroFinalDenseGivesUniformOutput) {
  Rng rng(3);
  const Shape3 shape{3, 16, 16};
  Model net = Model::initialized(shape, default_architecture(shape, 4), 7);
  auto& last = net.parameters()[6];
  last.weights.setZero();
  last.bias.setZero();
  const auto batch = random_batch(rng, net.cast<double>(), 5);
  const Eigen::VectorXd p = net.forward(batch.inputs[0]);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(p(i), 0.25, 1e-12);
  const auto lg = loss_and_gradients(net, std::span<const Example>(batch.examples));
  EXPECT_NEAR(lg.loss, std::log(4.0), 1e-9);
}

TEST(Forward, SoftmaxIgnoresLogitShift) {
  const Shape3 shape{3, 2, 2};
  const Model a = constant_model(shape, {0.3, -1.0, 2.0, 0.5});
  const Model b = constant_model(shape, {10.3, 9.0, 12.0, 10.5});
  const Eigen::VectorXf x = Eigen::VectorXf::Zero(12);
  EXPECT_TRUE(a.forward(x).isApprox(b.forward(x), 1e-6));
}

TEST(Forward, InputSizeChecked) {
  const Model net = constant_model({3, 2, 2}, {0, 0});
  EXPECT_THROW(net.forward(Eigen::VectorXf::Zero(11)), Error);
}

TEST(Argmax, TiesGoToLowestIndex) {
  Eigen::VectorXd v(4);
  v << 1, 3, 3, 2;
  EXPECT_EQ(argmax(v), 1);
  v << 5, 5, 5, 5;
  EXPECT_EQ(argmax(v), 0);
  v << -3, -1, -2, -1;
  EXPECT_EQ(argmax(v), 1);
}

TEST(Classify, FourwayPicksMostProbableClass) {
  const Shape3 shape{3, 2, 2};
  const Model net = constant_model(shape, {std::log(0.1), std::log(0.2), std::log(0.6), std::log(0.1)});
  EXPECT_EQ(classify_fourway(net, zero_patch(3, 2, 2)), EdgeClass::LeafEdge);
  const Model noise = constant_model(shape, {0, 0, 0, 1});
  EXPECT_EQ(classify_fourway(noise, zero_patch(3, 2, 2)), EdgeClass::InternalNoise);
}

TEST(Classify, FourwayChecksArityAndShape) {
  const Model binary = constant_model({3, 2, 2}, {0, 1});
  EXPECT_THROW(classify_fourway(binary, zero_patch(3, 2, 2)), Error);
  const Model net = constant_model({3, 2, 2}, {0, 1, 0, 0});
  EXPECT_THROW(classify_fourway(net, zero_patch(3, 3, 3)), Error);
}

TEST(Classify, TreeFollowsBranches) {
  const Shape3 shape{3, 2, 2};
  const Patch p = zero_patch(3, 2, 2);
  const Model go_internal = constant_model(shape, {0, 1});
  const Model go_external = constant_model(shape, {1, 0});
  EXPECT_EQ(classify_tree({go_internal, go_external, go_external}, p), EdgeClass::LeafEdge);
  EXPECT_EQ(classify_tree({go_internal, go_internal, go_external}, p), EdgeClass::InternalNoise);
  EXPECT_EQ(classify_tree({go_external, go_internal, go_external}, p), EdgeClass::Background);
  EXPECT_EQ(classify_tree({go_external, go_internal, go_internal}, p), EdgeClass::PlantEdge);
}

TEST(Classify, TreeMatchesManualCompositionOnRandomNets) {
  const Shape3 shape{3, 8, 8};
  const auto layers = default_architecture(shape, 2);
  const ClassifierTree tree{Model::initialized(shape, layers, 1, 3.0), Model::initialized(shape, layers, 2, 3.0),
                            Model::initialized(shape, layers, 3, 3.0)};
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    Patch p = zero_patch(3, 8, 8);
    for (Eigen::Index k = 0; k < p.size(); ++k) p.values(k) = static_cast<float>(rng.uniform(-1, 1));
    const auto sp = tree.split.forward(p.values);
    EdgeClass expected;
    if (sp(1) > sp(0)) {
      const auto ip = tree.internal.forward(p.values);
      expected = ip(1) > ip(0) ? EdgeClass::InternalNoise : EdgeClass::LeafEdge;
    } else {
      const auto ep = tree.external.forward(p.values);
      expected = ep(1) > ep(0) ? EdgeClass::PlantEdge : EdgeClass::Background;
    }
    EXPECT_EQ(classify_tree(tree, p), expected);
  }
}

TEST(TreeTargets, BranchAssignment) {
  EXPECT_EQ(split_target(EdgeClass::Background), 0);
  EXPECT_EQ(split_target(EdgeClass::PlantEdge), 0);
  EXPECT_EQ(split_target(EdgeClass::LeafEdge), 1);
  EXPECT_EQ(split_target(EdgeClass::InternalNoise), 1);
  EXPECT_EQ(internal_target(EdgeClass::LeafEdge), 0);
  EXPECT_EQ(internal_target(EdgeClass::InternalNoise), 1);
  EXPECT_EQ(internal_target(EdgeClass::PlantEdge), -1);
  EXPECT_EQ(external_target(EdgeClass::Background), 0);
  EXPECT_EQ(external_target(EdgeClass::PlantEdge), 1);
  EXPECT_EQ(external_target(EdgeClass::LeafEdge), -1);
}

TEST(Gradients, MatchFiniteDifferences) {
  Rng rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const auto net = random_small_network(rng);
    const auto batch = random_batch(rng, net, 3);
    const auto r = gradient_check(net, std::span<const Example>(batch.examples), 1e-3);
    EXPECT_LE(r.max_rel_error, 1e-4) << "trial " << trial;
    EXPECT_GT(r.checked, r.skipped) << "trial " << trial;
  }
}

TEST(Gradients, MaxPoolRoutesToWinner) {
  Network<double> net({1, 2, 2}, {LayerSpec::conv(1, 1), LayerSpec::max_pool(), LayerSpec::dense(2)});
  net.parameters()[0].weights << 1.0;
  net.parameters()[2].weights << 1.0, -1.0;
  Eigen::VectorXf x(4);
  x << 0.25f, 0.875f, 0.5f, 0.125f;
  const std::vector<Example> batch = {{&x, 0}};
  const auto lg = loss_and_gradients(net, std::span<const Example>(batch));
  // logits (0.875, -0.875); dL/dz0 = p0 - 1, dL/dz1 = p1; the pooled value comes only from x = 0.875
  const double p0 = 1.0 / (1.0 + std::exp(-1.75));
  const double dpool = (p0 - 1.0) - (1.0 - p0);
  EXPECT_NEAR(lg.gradients[0].weights(0, 0), dpool * 0.875, 1e-12);
  EXPECT_NEAR(lg.gradients[0].bias(0), dpool, 1e-12);
}

TEST(Gradients, ErrorsOnBadBatches) {
  const Model net = constant_model({3, 2, 2}, {0, 0, 0, 0});
  const Eigen::VectorXf x = Eigen::VectorXf::Zero(12);
  try {
    loss_and_gradients(net, std::span<const Example>());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyBatch);
  }
  const std::vector<Example> bad = {{&x, 4}};
  try {
    loss_and_gradients(net, std::span<const Example>(bad));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LabelOutOfRange);
  }
}

class TrainingTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(5);
    for (int i = 0; i < 40; ++i) {
      Eigen::VectorXf v(3 * 6 * 6);
      const int label = i % 2;
      for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = static_cast<float>(rng.uniform() + 0.3 * label);
      inputs.push_back(v);
      labels.push_back(label);
    }
    for (std::size_t i = 0; i < inputs.size(); ++i) examples.push_back({&inputs[i], labels[i]});
  }

  Model fresh(std::uint64_t seed = 11) const { return Model::initialized(shape, default_architecture(shape, 2), seed); }

  const Shape3 shape{3, 6, 6};
  std::vector<Eigen::VectorXf> inputs;
  std::vector<int> labels;
  std::vector<Example> examples;
};

bool same_parameters(const Model& a, const Model& b) {
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    if (a.parameters()[i].weights != b.parameters()[i].weights) return false;
    if (a.parameters()[i].bias != b.parameters()[i].bias) return false;
  }
  return true;
}

TEST_F(TrainingTest, ZeroLearningRateLeavesWeights) {
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  const Model before = fresh();
  const Model after = train(before, std::span<const Example>(examples), cfg);
  EXPECT_TRUE(same_parameters(before, after));
}

TEST_F(TrainingTest, DeterministicPerSeed) {
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 7;
  const Model a = train(fresh(), std::span<const Example>(examples), cfg);
  const Model b = train(fresh(), std::span<const Example>(examples), cfg);
  EXPECT_TRUE(same_parameters(a, b));
  cfg.seed = 2;
  const Model c = train(fresh(), std::span<const Example>(examples), cfg);
  EXPECT_FALSE(same_parameters(a, c));
}

TEST_F(TrainingTest, FullBatchLossDecreasesAtSmallRate) {
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.momentum = 0.0;
  cfg.epochs = 30;
  cfg.batch_size = static_cast<int>(examples.size());
  TrainLog log;
  train(fresh(), std::span<const Example>(examples), cfg, &log);
  ASSERT_EQ(log.epoch_loss.size(), 30u);
  for (std::size_t e = 1; e < log.epoch_loss.size(); ++e) EXPECT_LT(log.epoch_loss[e], log.epoch_loss[e - 1]) << e;
}

TEST_F(TrainingTest, LearnsSeparableData) {
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.batch_size = 8;
  TrainLog log;
  const Model net = train(fresh(), std::span<const Example>(examples), cfg, &log);
  int correct = 0;
  for (const auto& ex : examples) correct += argmax(net.forward(*ex.input)) == ex.target ? 1 : 0;
  EXPECT_GE(correct, 38);
  EXPECT_LT(log.epoch_loss.back(), log.epoch_loss.front());
}

TEST_F(TrainingTest, RejectsBadInput) {
  TrainConfig cfg;
  cfg.epochs = 1;
  auto code_of = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code_of([&] { train(fresh(), std::span<const Example>(), cfg); }), ErrorCode::EmptyDataset);
  std::vector<Example> bad = examples;
  bad[3].target = 2;
  EXPECT_EQ(code_of([&] { train(fresh(), std::span<const Example>(bad), cfg); }), ErrorCode::LabelOutOfRange);
  const Eigen::VectorXf small = Eigen::VectorXf::Zero(5);
  bad = examples;
  bad[0].input = &small;
  EXPECT_EQ(code_of([&] { train(fresh(), std::span<const Example>(bad), cfg); }), ErrorCode::ShapeMismatch);
  TrainConfig neg;
  neg.learning_rate = -1.0;
  EXPECT_THROW(neg.validate(), Error);
  neg = TrainConfig{};
  neg.momentum = 1.0;
  EXPECT_THROW(neg.validate(), Error);
}

TEST(TrainTree, ChildrenSeeOnlyTheirBranch) {
  PatchDataset data;
  data.side = 4;
  Rng rng(8);
  for (const EdgeClass c : {EdgeClass::Background, EdgeClass::PlantEdge, EdgeClass::Background}) {
    for (int i = 0; i < 4; ++i) {
      LabeledPatch item;
      item.patch = zero_patch(3, 4, 4);
      for (Eigen::Index k = 0; k < item.patch.size(); ++k) item.patch.values(k) = static_cast<float>(rng.uniform());
      item.label = c;
      data.items.push_back(item);
    }
  }
  TrainConfig cfg;
  cfg.epochs = 2;
  TreeTrainLog log;
  const auto layers = default_architecture({3, 4, 4}, 2);
  const ClassifierTree tree = train_tree(data, layers, cfg, &log);
  EXPECT_EQ(log.split.epoch_loss.size(), 2u);
  EXPECT_TRUE(log.internal.epoch_loss.empty());
  EXPECT_EQ(log.external.epoch_loss.size(), 2u);
  EXPECT_EQ(tree.internal.arity(), 2);
  EXPECT_THROW(train_tree(PatchDataset{}, layers, cfg), Error);
  EXPECT_THROW(train_fourway(PatchDataset{}, default_architecture({3, 4, 4}, 4), cfg), Error);
}

}  // namespace
}  // namespace leafseg
