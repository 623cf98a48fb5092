#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "advtex/diff/grad_check.hpp"
#include "advtex/policy/expert.hpp"
#include "advtex/policy/gradcam.hpp"
#include "advtex/policy/policy.hpp"
#include "advtex/policy/train.hpp"
#include "advtex/scene/desk.hpp"
#include "advtex/util/rng.hpp"

namespace advtex::policy {
namespace {

using diff::Tensor;
using scene::EEState;
using scene::Vec3;

Tensor random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t({h, w, 3});
  for (double& v : t.values()) v = uniform(rng, 0.0, 1.0);
  return t;
}

Tensor random_tensor(diff::Shape s, std::uint64_t seed, double lo, double hi) {
  Rng rng(seed);
  Tensor t(std::move(s));
  for (double& v : t.values()) v = uniform(rng, lo, hi);
  return t;
}

TEST(Expert, ConvergedGivesZeroAction) {
  const EEState s = scene::to_pose({0.4, 0.2, 0.5}, Vec3::Zero());
  const Action6 a = scripted_expert(s, s.p);
  EXPECT_EQ(a.dp, Vec3::Zero());
  EXPECT_EQ(a.drot, Vec3::Zero());
}

TEST(Expert, FarGoalSaturatesStep) {
  const Action6 a = scripted_expert(EEState{}, Vec3(1, 0, 0));
  EXPECT_NEAR((a.dp - Vec3(0.02, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(Expert, AlignedAxisNeedsNoRotation) {
  const Action6 a = scripted_expert(EEState{}, Vec3(0, 0, -0.5));
  EXPECT_EQ(a.drot, Vec3::Zero());
}

TEST(Expert, TurnsTowardGoalWithinLimit) {
  const EEState s;
  const Vec3 goal(0.5, 0, -0.5);
  const Action6 a = scripted_expert(s, goal);
  EXPECT_NEAR(a.drot.norm(), 0.1, 1e-12);
  const EEState n = scene::apply_action(s, Action6{Vec3::Zero(), a.drot}, scene::ActionLimits{});
  const Vec3 to_goal = (goal - s.p).normalized();
  EXPECT_GT(n.approach_axis().dot(to_goal), s.approach_axis().dot(to_goal));
}

TEST(Expert, DrivesEndEffectorToGoal) {
  EEState s = scene::to_pose({0.6, 1.0, 1.0}, Vec3::Zero());
  const Vec3 goal(0.2, -0.1, 0.05);
  for (int t = 0; t < 60; ++t) s = scene::apply_action(s, scripted_expert(s, goal), scene::ActionLimits{});
  EXPECT_LT((s.p - goal).norm(), 1e-6);
}

// 1x1 conv from 3 to `channels` channels on a 2x2 input, no hidden layer.
Architecture toy_arch(int channels) {
  Architecture a;
  a.id = 99;
  a.input_height = 2;
  a.input_width = 2;
  a.convs = {{3, channels, 1, 1}};
  a.hidden = {};
  a.action_scale = {1.0, 2.0, 0.5, 1.0, 1.5, 1.0};
  return a;
}

TEST(GradCam, ToyNetMatchesClosedForm) {
  const Tensor wc = random_tensor({2, 3, 1, 1}, 1, 0.1, 1.0);
  const Tensor bc = random_tensor({2}, 2, -0.2, 0.2);
  const Tensor wd = random_tensor({8, 6}, 3, -1.0, 1.0);
  const Tensor bd = random_tensor({1, 6}, 4, -0.5, 0.5);
  const Architecture arch = toy_arch(2);
  const PolicyNet net(arch, std::vector<Tensor>{wc, bc, wd, bd});
  const Tensor img = random_image(2, 2, 5);

  // Hand evaluation of the toy net and of Grad-CAM on its feature map.
  Eigen::Matrix<double, 2, 4> A;
  for (int k = 0; k < 2; ++k) {
    for (int p = 0; p < 4; ++p) {
      double z = bc[k];
      for (int c = 0; c < 3; ++c) z += wc[k * 3 + c] * img[p * 3 + c];
      A(k, p) = std::max(0.0, z);
    }
  }
  Eigen::Matrix<double, 6, 1> a;
  for (int o = 0; o < 6; ++o) {
    double s = bd[o];
    for (int m = 0; m < 8; ++m) s += A(m / 4, m % 4) * wd[m * 6 + o];
    a(o) = s * arch.action_scale[o];
  }
  const double norm = a.norm();
  std::array<double, 2> w{0, 0};
  for (int m = 0; m < 8; ++m) {
    double g = 0;
    for (int o = 0; o < 6; ++o) g += a(o) / norm * arch.action_scale[o] * wd[m * 6 + o];
    w[m / 4] += g / 4.0;
  }
  const SaliencyMap s = gradcam(net, img);
  ASSERT_EQ(s.values.shape(), (diff::Shape{2, 2}));
  EXPECT_NEAR(s.channel_weights[0], w[0], 1e-12);
  EXPECT_NEAR(s.channel_weights[1], w[1], 1e-12);
  for (int p = 0; p < 4; ++p) EXPECT_NEAR(s.values[p], std::max(0.0, w[0] * A(0, p) + w[1] * A(1, p)), 1e-8);
}

TEST(GradCam, SingleConstantChannelWithUnitWeight) {
  const PolicyNet net(toy_arch(1), std::vector<Tensor>{Tensor({1, 3, 1, 1}, 0.0), Tensor({1}, 0.7),
                                                       random_tensor({4, 6}, 1, -1, 1), Tensor({1, 6}, 0.0)});
  diff::Tape tape;
  const auto fwd = net.forward(tape, tape.constant(random_image(2, 2, 1)));
  const SaliencyGraph g = saliency_graph_fixed(tape, fwd, Tensor::vector({1.0}), 2, 2);
  for (double v : g.map.value().values()) EXPECT_EQ(v, 0.7);
}

TEST(GradCam, NegativeEvidenceIsZeroed) {
  const PolicyNet net(toy_arch(1), std::vector<Tensor>{Tensor({1, 3, 1, 1}, 0.0), Tensor({1}, 0.7),
                                                       random_tensor({4, 6}, 1, -1, 1), Tensor({1, 6}, 0.0)});
  diff::Tape tape;
  const auto fwd = net.forward(tape, tape.constant(random_image(2, 2, 1)));
  const SaliencyGraph g = saliency_graph_fixed(tape, fwd, Tensor::vector({-2.0}), 2, 2);
  for (double v : g.map.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(GradCam, ZeroActionGivesZeroMap) {
  const PolicyNet net(toy_arch(1), std::vector<Tensor>{random_tensor({1, 3, 1, 1}, 2, 0.1, 1), Tensor({1}, 0.1),
                                                       Tensor({4, 6}, 0.0), Tensor({1, 6}, 0.0)});
  diff::Tape tape;
  const auto fwd = net.forward(tape, tape.constant(random_image(2, 2, 1)));
  const SaliencyGraph g = saliency_graph(tape, fwd, 2, 2);
  EXPECT_TRUE(g.degenerate);
  for (double v : g.map.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(GradCam, ChannelWithZeroWeightChangesNothing) {
  const Tensor wc = random_tensor({2, 3, 1, 1}, 1, 0.1, 1.0);
  const Tensor bc = random_tensor({2}, 2, -0.2, 0.2);
  const Tensor wd = random_tensor({8, 6}, 3, -1.0, 1.0);
  const Tensor bd = random_tensor({1, 6}, 4, -0.5, 0.5);
  const PolicyNet two(toy_arch(2), std::vector<Tensor>{wc, bc, wd, bd});
  // Third channel is active but never read by the head, so its weight is zero.
  Tensor wc3({3, 3, 1, 1}), bc3({3}), wd3({12, 6});
  std::copy(wc.values().begin(), wc.values().end(), wc3.values().begin());
  for (int c = 0; c < 3; ++c) wc3[6 + c] = 0.5;
  bc3[0] = bc[0];
  bc3[1] = bc[1];
  bc3[2] = 0.3;
  std::copy(wd.values().begin(), wd.values().end(), wd3.values().begin());
  const PolicyNet three(toy_arch(3), std::vector<Tensor>{wc3, bc3, wd3, bd});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor img = random_image(2, 2, seed);
    const SaliencyMap s2 = gradcam(two, img);
    const SaliencyMap s3 = gradcam(three, img);
    EXPECT_EQ(s3.channel_weights[2], 0.0);
    for (std::size_t p = 0; p < 4; ++p) EXPECT_NEAR(s3.values[p], s2.values[p], 1e-15);
  }
}

TEST(GradCam, MapIsNonNegativeAndImageSized) {
  const PolicyNet net(Architecture::standard(), 3);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SaliencyMap s = gradcam(net, random_image(64, 64, seed));
    ASSERT_EQ(s.values.shape(), (diff::Shape{64, 64}));
    for (double v : s.values.values()) ASSERT_GE(v, 0.0);
  }
}

TEST(GradCam, MeanSaliencyGradientWithFrozenWeights) {
  const PolicyNet net(Architecture::compact({}, 16), 5);
  const Tensor img = random_image(16, 16, 6);
  const Tensor w = gradcam(net, img).channel_weights;
  auto f = [&](diff::Tape& tape, diff::Var x) {
    const auto fwd = net.forward(tape, x);
    return diff::mean(saliency_graph_fixed(tape, fwd, w, 16, 16).map);
  };
  EXPECT_LT(diff::grad_check(f, img, 1e-6), 1e-3);
}

TEST(PolicyNetTest, StandardFeatureShape) {
  EXPECT_EQ(Architecture::standard().feature_shape(), (diff::Shape{16, 13, 13}));
  EXPECT_THROW(Architecture::by_name("resnet"), std::invalid_argument);
}

TEST(PolicyNetTest, ActIsDeterministicAndFinite) {
  const PolicyNet net(Architecture::standard(), 1);
  const Tensor img = random_image(64, 64, 2);
  const Action6 a = net.act(img), b = net.act(img);
  EXPECT_EQ(a.dp, b.dp);
  EXPECT_EQ(a.drot, b.drot);
  EXPECT_TRUE(scene::action_finite(a));
  EXPECT_THROW(net.act(random_image(32, 32, 2)), std::invalid_argument);
}

TEST(PolicyNetTest, SameSeedSameWeights) {
  EXPECT_EQ(PolicyNet(Architecture::compact(), 4), PolicyNet(Architecture::compact(), 4));
  EXPECT_NE(PolicyNet(Architecture::compact(), 4), PolicyNet(Architecture::compact(), 5));
}

TEST(PolicyNetTest, CheckpointRoundTrip) {
  const PolicyNet net(Architecture::compact(), 7);
  const auto path = std::filesystem::temp_directory_path() / "advtex_policy_test.bin";
  net.save(path);
  EXPECT_EQ(PolicyNet::load(path), net);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("NOTAPOLI", 8);
  }
  EXPECT_THROW(PolicyNet::load(path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST(PolicyNetTest, ParameterShapesChecked) {
  EXPECT_THROW(PolicyNet(toy_arch(2), std::vector<Tensor>{Tensor({2, 3, 1, 1})}), std::invalid_argument);
}

class BehaviorCloning : public ::testing::Test {
 protected:
  Architecture arch = Architecture::compact({}, 16);
  std::vector<BcSample> one_sample() const {
    BcSample s{random_image(16, 16, 1), {}};
    s.label.dp = Vec3(0.01, -0.005, 0.002);
    s.label.drot = Vec3(0.03, 0.0, -0.02);
    return std::vector<BcSample>(8, s);
  }
};

TEST_F(BehaviorCloning, MemorizesRepeatedSample) {
  PolicyNet net(arch, 1);
  const auto data = one_sample();
  TrainParams p;
  p.epochs = 150;
  p.batch_size = 8;
  p.lr = 3e-3;
  const TrainResult r = train_bc(net, data, p, 2);
  EXPECT_LT(r.final_loss, 1e-4);
  EXPECT_EQ(r.final_loss, dataset_loss(net, data));
  EXPECT_EQ(r.epoch_loss.size(), 150u);
}

TEST_F(BehaviorCloning, ZeroLearningRateIsNoOp) {
  PolicyNet net(arch, 1);
  const PolicyNet before = net;
  const auto data = one_sample();
  TrainParams p;
  p.epochs = 3;
  p.lr = 0.0;
  const TrainResult r = train_bc(net, data, p, 2);
  EXPECT_EQ(net, before);
  EXPECT_EQ(r.final_loss, dataset_loss(before, data));
}

TEST_F(BehaviorCloning, SameSeedSameResult) {
  std::vector<BcSample> data;
  for (int i = 0; i < 10; ++i) {
    BcSample s{random_image(16, 16, 10 + i), {}};
    s.label.dp = Vec3(0.001 * i, 0, 0);
    data.push_back(s);
  }
  TrainParams p;
  p.epochs = 2;
  p.batch_size = 4;
  PolicyNet a(arch, 1), b(arch, 1);
  train_bc(a, data, p, 9);
  train_bc(b, data, p, 9);
  EXPECT_EQ(a, b);
}

TEST_F(BehaviorCloning, EmptyDatasetRejected) {
  PolicyNet net(arch, 1);
  EXPECT_THROW(train_bc(net, {}, TrainParams{}, 1), std::invalid_argument);
}

TEST(ExpertDataset, DeterministicAndLabelledWithinLimits) {
  const scene::SceneAssets assets = scene::make_desk_assets(scene::DeskLayout{});
  render::ViewSettings view;
  view.intrinsics = {16, 16, 12.0, 8.0, 8.0};
  CollectParams p;
  p.scenes = 2;
  p.horizon = 10;
  const auto a = collect_expert_dataset(assets, view, p, 3);
  const auto b = collect_expert_dataset(assets, view, p, 3);
  ASSERT_EQ(a.size(), b.size());
  ASSERT_FALSE(a.empty());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].label.dp, b[i].label.dp);
    EXPECT_LE(a[i].label.dp.norm(), p.expert.limits.step_max + 1e-12);
    EXPECT_LE(a[i].label.drot.norm(), p.expert.limits.rot_max + 1e-12);
  }
}

}  // namespace
}  // namespace advtex::policy
