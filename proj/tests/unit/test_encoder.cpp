// Copyright 2026 The invlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <functional>

#include <gtest/gtest.h>

#include "invlab/core/shapes.hpp"
#include "invlab/encoder/checkpoint.hpp"
#include "invlab/encoder/train.hpp"
#include "test_util.hpp"

namespace invlab {
namespace {

using nn::Matrix;
using nn::Vector;
using Md = Matrix<double>;
using Vd = Vector<double>;

Md random_matrix(Eigen::Index r, Eigen::Index c, SeededRng& rng, double sd = 1.0) {
  Md m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal(0.0, sd);
  return m;
}

/// Central differences of a scalar function with respect to every entry of `x`.
Md numeric_grad(const std::function<double()>& f, Md& x, double h = 1e-6) {
  Md g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + h;
    const double up = f();
    x.data()[i] = keep - h;
    const double down = f();
    x.data()[i] = keep;
    g.data()[i] = (up - down) / (2 * h);
  }
  return g;
}

double rel_err(const Md& analytic, const Md& numeric) {
  const double scale = std::max({analytic.norm(), numeric.norm(), 1e-10});
  return (analytic - numeric).norm() / scale;
}

constexpr double kGradTol = 1e-4;
constexpr int kInstances = 20;

TEST(GradientCheck, Convolution) {
  SeededRng rng(1);
  for (int t = 0; t < kInstances; ++t) {
    nn::ConvShape s{1 + static_cast<int>(rng.below(3)), 1 + static_cast<int>(rng.below(3)),
                    t % 3 == 0 ? 1 : 3,  1 + static_cast<int>(rng.below(2)),
                    3 + static_cast<int>(rng.below(4)), 3 + static_cast<int>(rng.below(4))};
    Md in = random_matrix(s.in_channels, static_cast<Eigen::Index>(s.in_h) * s.in_w, rng);
    Md w = random_matrix(s.out_channels, s.patch(), rng);
    Md b = random_matrix(s.out_channels, 1, rng);
    const Md r = random_matrix(s.out_channels, static_cast<Eigen::Index>(s.out_h()) * s.out_w(), rng);
    auto loss = [&] { return (nn::conv_forward<double>(in, w, b, s).array() * r.array()).sum(); };
    Md cols;
    nn::conv_forward<double>(in, w, b, s, &cols);
    const auto g = nn::conv_backward<double>(r, cols, w, s);
    EXPECT_LT(rel_err(g.input, numeric_grad(loss, in)), kGradTol);
    EXPECT_LT(rel_err(g.weight, numeric_grad(loss, w)), kGradTol);
    EXPECT_LT(rel_err(g.bias, numeric_grad(loss, b)), kGradTol);
  }
}

TEST(GradientCheck, ReluAwayFromKink) {
  SeededRng rng(2);
  for (int t = 0; t < kInstances; ++t) {
    Md x = random_matrix(3, 5, rng);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (std::abs(x.data()[i]) < 1e-3) x.data()[i] = 0.5;
    const Md r = random_matrix(3, 5, rng);
    auto loss = [&] { return (nn::relu<double>(x).array() * r.array()).sum(); };
    const Md pre = x;
    EXPECT_LT(rel_err(nn::relu_backward<double>(r, pre), numeric_grad(loss, x)), kGradTol);
  }
}

TEST(GradientCheck, GlobalAveragePool) {
  SeededRng rng(3);
  for (int t = 0; t < kInstances; ++t) {
    Md x = random_matrix(1 + t % 4, 1 + t, rng);
    const Vd r = random_matrix(x.rows(), 1, rng);
    auto loss = [&] { return nn::global_avg_pool<double>(x).dot(r); };
    EXPECT_LT(rel_err(nn::global_avg_pool_backward<double>(r, x.cols()), numeric_grad(loss, x)), kGradTol);
  }
}

TEST(GradientCheck, Linear) {
  SeededRng rng(4);
  for (int t = 0; t < kInstances; ++t) {
    const Eigen::Index in = 1 + t % 5, out = 1 + (t * 3) % 4;
    Md x = random_matrix(in, 1, rng), w = random_matrix(out, in, rng), b = random_matrix(out, 1, rng);
    const Vd r = random_matrix(out, 1, rng);
    auto loss = [&] { return nn::linear_forward<double>(x.col(0), w, b).dot(r); };
    const auto g = nn::linear_backward<double>(r, x.col(0), w);
    EXPECT_LT(rel_err(g.input, numeric_grad(loss, x)), kGradTol);
    EXPECT_LT(rel_err(g.weight, numeric_grad(loss, w)), kGradTol);
    EXPECT_LT(rel_err(g.bias, numeric_grad(loss, b)), kGradTol);
  }
}

TEST(GradientCheck, L2Normalize) {
  SeededRng rng(5);
  for (int t = 0; t < kInstances; ++t) {
    Md x = random_matrix(2 + t % 6, 1, rng);
    const Vd r = random_matrix(x.rows(), 1, rng);
    auto loss = [&] { return nn::l2_normalize<double>(x.col(0)).dot(r); };
    EXPECT_LT(rel_err(nn::l2_normalize_backward<double>(r, x.col(0)), numeric_grad(loss, x)), kGradTol);
  }
}

TEST(GradientCheck, InfoNce) {
  SeededRng rng(6);
  for (int t = 0; t < kInstances; ++t) {
    const Eigen::Index d = 2 + t % 5, k = t % 4;
    Md a = random_matrix(d, 1, rng), p = random_matrix(d, 1, rng), n = random_matrix(k, d, rng);
    const double tau = 0.1 + 0.1 * (t % 5);
    auto loss = [&] { return nn::info_nce_loss<double>(a.col(0), p.col(0), n, tau).loss; };
    const auto r = nn::info_nce_loss<double>(a.col(0), p.col(0), n, tau);
    EXPECT_LT(rel_err(r.grad_anchor, numeric_grad(loss, a)), kGradTol);
    EXPECT_LT(rel_err(r.grad_positive, numeric_grad(loss, p)), kGradTol);
    if (k > 0) EXPECT_LT(rel_err(r.grad_negatives, numeric_grad(loss, n)), kGradTol);
  }
}

EncoderConfig tiny_config(bool coords = true) {
  EncoderConfig c;
  c.input_size = 7;
  c.channels = {3, 4};
  c.coord_channels = coords;
  c.head_dims = {5, 3};
  return c;
}

TEST(GradientCheck, FullNetworkThroughInfoNce) {
  SeededRng rng(7);
  for (int t = 0; t < kInstances; ++t) {
    auto cfg = tiny_config(t % 2 == 0);
    cfg.stride = 1 + t % 2;
    SeededRng init(100 + t);
    auto p = nn::init_params<double>(cfg, cfg.head_dims, init);
    for (auto& b : p.tensors)
      if (b.cols() == 1) b = random_matrix(b.rows(), 1, rng, 0.1);
    const Md input = random_matrix(cfg.input_channels(), 49, rng);
    const Vd key = random_matrix(3, 1, rng);
    const Md negs = random_matrix(4, 3, rng);
    auto loss = [&] {
      return nn::info_nce_loss<double>(nn::forward<double>(cfg, p, input).output, key, negs, 0.5).loss;
    };
    nn::ForwardCache<double> cache;
    const auto out = nn::forward<double>(cfg, p, input, &cache).output;
    auto grads = p.zeros_like();
    nn::backward<double>(cfg, p, cache, nn::info_nce_loss<double>(out, key, negs, 0.5).grad_anchor, grads);
    for (std::size_t i = 0; i < p.size(); ++i)
      EXPECT_LT(rel_err(grads.tensors[i], numeric_grad(loss, p.tensors[i])), kGradTol) << p.names[i] << " " << t;
  }
}

TEST(GradientCheck, CrossEntropy) {
  SeededRng rng(8);
  for (int t = 0; t < kInstances; ++t) {
    Md z = random_matrix(2 + t % 5, 1, rng);
    const int label = static_cast<int>(t % z.rows());
    Vd g;
    nn::cross_entropy<double>(z.col(0), label, g);
    auto loss = [&] {
      Vd unused;
      return nn::cross_entropy<double>(z.col(0), label, unused);
    };
    EXPECT_LT(rel_err(g, numeric_grad(loss, z)), kGradTol);
  }
}

Vd unit(Eigen::Index d, Eigen::Index i) { return Vd::Unit(d, i); }

TEST(InfoNce, UniformLogitsGiveLogKPlusOne) {
  Md negs(4, 6);
  for (int k = 0; k < 4; ++k) negs.row(k) = unit(6, 2 + k).transpose();
  const auto r = nn::info_nce_loss<double>(unit(6, 0), unit(6, 1), negs, 0.2);
  EXPECT_NEAR(r.loss, std::log(5.0), 1e-12);
}

TEST(InfoNce, ClosedFormTwoNegatives) {
  Md negs(2, 3);
  negs.row(0) = unit(3, 1).transpose();
  negs.row(1) = unit(3, 2).transpose();
  // logits (1, 0, 0) at tau = 1
  const auto r = nn::info_nce_loss<double>(unit(3, 0) * 3.0, unit(3, 0), negs, 1.0);
  EXPECT_NEAR(r.loss, 0.5514447139320511, 1e-12);
}

TEST(InfoNce, SharpPositiveDrivesLossToZero) {
  Md negs(3, 3);
  negs.setZero();
  negs.col(1).setOnes();
  EXPECT_LT(nn::info_nce_loss<double>(unit(3, 0), unit(3, 0), negs, 1e-3).loss, 1e-12);
}

TEST(InfoNce, ZeroNormIsNumericError) {
  try {
    nn::info_nce_loss<double>(Vd::Zero(3), unit(3, 0), Md(0, 3), 0.2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::numeric);
  }
}

TEST(NegativeQueue, FifoOrderAndOccupancy) {
  nn::NegativeQueue q(5);
  for (int i = 1; i <= 7; ++i) {
    q.push(Eigen::VectorXf::Constant(2, static_cast<float>(i)));
    EXPECT_EQ(q.size(), std::min<std::size_t>(i, 5));
  }
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(q.at(i)(0), static_cast<float>(i + 3));
}

EncoderConfig small_config() {
  EncoderConfig c;
  c.input_size = 16;
  c.channels = {8, 16, 16};
  c.head_dims = {16, 8};
  return c;
}

const LabeledDataset& shapes16() {
  static const auto ds = make_shapes_dataset(16, 5, ShapesConfig{.width = 32, .height = 32});
  return ds;
}

ContrastiveConfig small_contrastive(std::size_t queue = 8) {
  ContrastiveConfig cc;
  cc.policy = default_policy();
  cc.queue_size = queue;
  cc.batch_size = 4;
  cc.seed = 3;
  return cc;
}

TEST(ContrastiveTrainer, QueueOccupancyIsMinOfKeysAndCapacity) {
  ContrastiveTrainer tr(shapes16(), small_config(), small_contrastive(10));
  EXPECT_EQ(tr.queue().size(), 0u);
  for (std::size_t s = 1; s <= 4; ++s) {
    tr.step();
    EXPECT_EQ(tr.queue().size(), std::min<std::size_t>(s * 4, 10));
  }
}

TEST(ContrastiveTrainer, UnitMomentumFreezesKeyEncoder) {
  auto cc = small_contrastive();
  cc.momentum = 1.0;
  ContrastiveTrainer tr(shapes16(), small_config(), cc);
  const auto key0 = tr.key();
  for (int s = 0; s < 5; ++s) tr.step();
  EXPECT_EQ(tr.key(), key0);
  EXPECT_FALSE(tr.query() == key0);
}

TEST(ContrastiveTrainer, LossOnFixedBatchDecreases) {
  const auto ds = make_shapes_dataset(128, 5, ShapesConfig{.width = 32, .height = 32});
  auto cc = small_contrastive(32);
  cc.policy = spatial_policy();
  cc.batch_size = 16;
  cc.learning_rate = 0.01;
  auto pol = cc.policy;
  pol.output_size = 16;
  std::vector<Image> v1, v2;
  SeededRng rng(99);
  for (std::size_t i = 0; i < 16; ++i) {
    v1.push_back(apply_policy(ds.images[i], pol, rng));
    v2.push_back(apply_policy(ds.images[i], pol, rng));
  }
  ContrastiveTrainer tr(ds, small_config(), cc);
  const double initial = tr.probe_loss(v1, v2);
  for (int s = 0; s < 50; ++s) tr.step();
  EXPECT_LT(tr.probe_loss(v1, v2), initial);
}

TEST(ContrastiveTrainer, DivergenceCarriesStepIndex) {
  auto cc = small_contrastive();
  cc.learning_rate = 1e30;
  ContrastiveTrainer tr(shapes16(), small_config(), cc);
  try {
    for (int s = 0; s < 20; ++s) tr.step();
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::training);
    EXPECT_NE(std::string(e.what()).find("at step"), std::string::npos);
  }
}

TEST(ContrastiveTrainer, SeededRunsAreIdentical) {
  auto cc = small_contrastive();
  cc.epochs = 1;
  const auto a = train_contrastive(shapes16(), small_config(), cc);
  const auto b = train_contrastive(shapes16(), small_config(), cc);
  EXPECT_EQ(a.weights(), b.weights());
  EXPECT_EQ(a.weights().size(), 6u);  // head stripped
  EXPECT_EQ(a.meta().at("policy"), "Default");
}

LabeledDataset red_blue(std::size_t n, std::uint64_t seed) {
  LabeledDataset ds;
  ds.labels.emplace();
  SeededRng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    std::vector<double> px(32 * 32 * 3);
    for (std::size_t p = 0; p < px.size(); p += 3) {
      const double noise = rng.uniform(-0.1, 0.1);
      px[p] = (label ? 0.15 : 0.8) + noise;
      px[p + 1] = 0.2 + noise;
      px[p + 2] = (label ? 0.8 : 0.15) + noise;
    }
    ds.images.push_back(Image::from_unclamped(32, 32, px));
    ds.labels->push_back(label);
  }
  return ds;
}

SupervisedConfig small_supervised() {
  SupervisedConfig sc;
  sc.epochs = 5;
  sc.batch_size = 8;
  sc.learning_rate = 0.05;
  sc.seed = 11;
  return sc;
}

TEST(Supervised, SeparableDataReachesHighAccuracy) {
  const auto enc = train_supervised(red_blue(40, 1), small_config(), small_supervised());
  EXPECT_GE(std::stod(enc.meta().at("train_accuracy")), 0.95);
}

TEST(Supervised, ZeroLearningRateKeepsInitialWeights) {
  auto sc = small_supervised();
  sc.learning_rate = 0.0;
  const auto enc = train_supervised(red_blue(8, 1), small_config(), sc);
  SeededRng init = SeededRng(sc.seed).derive(0x1417);
  EXPECT_EQ(enc.weights(), nn::init_params<float>(small_config(), {}, init));
}

TEST(Supervised, SeededRerunIsIdentical) {
  auto sc = small_supervised();
  sc.epochs = 1;
  EXPECT_EQ(train_supervised(red_blue(16, 2), small_config(), sc).weights(),
            train_supervised(red_blue(16, 2), small_config(), sc).weights());
}

TEST(Supervised, MissingLabelsRejected) {
  auto ds = red_blue(4, 1);
  ds.labels.reset();
  EXPECT_THROW(train_supervised(ds, small_config(), small_supervised()), Error);
}

TEST(RandomEncoder, SeedControlsWeights) {
  const auto cfg = small_config();
  EXPECT_EQ(random_encoder(cfg, 4).weights(), random_encoder(cfg, 4).weights());
  const auto& probe = shapes16().images[0];
  EXPECT_NE(random_encoder(cfg, 4).embed_one(probe), random_encoder(cfg, 5).embed_one(probe));
  EXPECT_EQ(random_encoder(cfg, 4).embed_one(probe).size(), 16);
  EXPECT_EQ(random_encoder(EncoderConfig{}, 4).dim(), 64);
}

TEST(Embed, IdenticalImagesGiveIdenticalRows) {
  const auto enc = random_encoder(small_config(), 1);
  const std::vector<Image> imgs = {shapes16().images[3], shapes16().images[3]};
  const auto f = enc.embed(imgs);
  for (std::size_t c = 0; c < f.cols(); ++c) EXPECT_EQ(f(0, c), f(1, c));
}

TEST(Embed, BatchPartitioningDoesNotChangeRows) {
  const auto enc = random_encoder(small_config(), 2);
  const auto& imgs = shapes16().images;
  const auto all = enc.embed(imgs);
  const auto threaded = enc.embed(imgs, 3);
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    const auto single = enc.embed(std::span<const Image>(&imgs[i], 1));
    for (std::size_t c = 0; c < all.cols(); ++c) {
      EXPECT_NEAR(single(0, c), all(i, c), 1e-6);
      EXPECT_NEAR(threaded(i, c), all(i, c), 1e-6);
    }
  }
}

TEST(Embed, ResizesOtherInputSizes) {
  const auto enc = random_encoder(small_config(), 2);
  const auto big = make_shapes_dataset(1, 1, ShapesConfig{.width = 48, .height = 40});
  EXPECT_EQ(enc.embed(big.images).cols(), 16u);
}

TEST(EncoderConfig, RejectsBadShapes) {
  EncoderConfig c;
  c.channels = {8, 1};
  EXPECT_THROW(c.validate(), Error);
  c = EncoderConfig{};
  c.kernel = 2;
  EXPECT_THROW(c.validate(), Error);
  c = EncoderConfig{};
  c.input_size = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Checkpoint, RoundTripAndDeterministicBytes) {
  const auto enc = random_encoder(small_config(), 9, "Probe");
  const auto bytes = encode_checkpoint(enc);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "ENCK");
  EXPECT_EQ(bytes, encode_checkpoint(random_encoder(small_config(), 9, "Probe")));
  testing::TempDir dir;
  write_checkpoint(enc, dir.path() / "probe.enck");
  const auto back = read_checkpoint(dir.path() / "probe.enck");
  EXPECT_EQ(back.weights(), enc.weights());
  EXPECT_EQ(back.meta(), enc.meta());
  EXPECT_EQ(back.config().channels, enc.config().channels);
  EXPECT_EQ(back.embed_one(shapes16().images[0]), enc.embed_one(shapes16().images[0]));
}

TEST(Checkpoint, CorruptInputsAreRejected) {
  auto bytes = encode_checkpoint(random_encoder(small_config(), 9));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(binary::Reader(bad, "x")), Error);
  bad = bytes;
  bad.resize(bad.size() - 3);
  try {
    decode_checkpoint(binary::Reader(bad, "x"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::corruption);
  }
}

}  // namespace
}  // namespace invlab
