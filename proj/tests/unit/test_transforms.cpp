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
#include <set>

#include <gtest/gtest.h>

#include "invlab/core/shapes.hpp"
#include "invlab/transforms/policy_json.hpp"
#include "invlab/transforms/transform.hpp"
#include "test_util.hpp"

namespace invlab {
namespace {

Image noise_image(int w, int h, std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<double> px(static_cast<std::size_t>(w) * h * 3);
  for (double& v : px) v = rng.uniform();
  return Image::from_unclamped(w, h, px);
}

Image shape_image(std::uint64_t seed, int size = 32) {
  return make_shapes_dataset(1, seed, ShapesConfig{.width = size, .height = size}).images[0];
}

Image apply(const Image& img, TransformKind k, const TransformParam& p, std::uint64_t seed = 1) {
  SeededRng rng(seed);
  return apply_transform(img, k, p, rng);
}

TEST(Transforms, FullTurnRotationIsIdentity) {
  const auto img = shape_image(3);
  EXPECT_LE(max_abs_diff(apply(img, TransformKind::rotation, {360.0}), img), 1e-6);
  EXPECT_EQ(apply(img, TransformKind::rotation, {0.0}), img);
}

TEST(Transforms, InvolutionsAreExact) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto img = seed % 2 ? noise_image(9, 7, seed) : shape_image(seed);
    EXPECT_EQ(apply(apply(img, TransformKind::h_flip, {}), TransformKind::h_flip, {}), img);
    EXPECT_EQ(apply(apply(img, TransformKind::v_flip, {}), TransformKind::v_flip, {}), img);
    EXPECT_EQ(apply(apply(img, TransformKind::invert, {}), TransformKind::invert, {}), img);
  }
}

TEST(Transforms, IdempotentsAreExact) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto img = seed % 2 ? noise_image(16, 16, seed) : shape_image(seed);
    const auto gray = apply(img, TransformKind::grayscale, {});
    EXPECT_EQ(apply(gray, TransformKind::grayscale, {}), gray);
    const auto eq = apply(img, TransformKind::equalize, {});
    EXPECT_EQ(apply(eq, TransformKind::equalize, {}), eq);
  }
}

TEST(Transforms, NeutralParametersAreIdentity) {
  const auto img = noise_image(12, 10, 5);
  EXPECT_EQ(apply(img, TransformKind::posterize, {8.0}), img);
  EXPECT_EQ(apply(img, TransformKind::brightness, {1.0}), img);
  for (auto k : {TransformKind::scale, TransformKind::shear, TransformKind::rotation, TransformKind::translation,
                 TransformKind::contrast, TransformKind::saturation, TransformKind::sharpness, TransformKind::hue})
    EXPECT_EQ(apply(img, k, identity_param(k)), img) << transform_name(k);
}

TEST(Transforms, TranslationMovesLitPixel) {
  std::vector<float> px(static_cast<std::size_t>(40 * 10 * 3), 0.f);
  const int x0 = 5, y0 = 4;
  for (int c = 0; c < 3; ++c) px[(static_cast<std::size_t>(y0) * 40 + x0) * 3 + c] = 1.f;
  const Image img(40, 10, px);
  const auto out = apply(img, TransformKind::translation, {16.0, 0.0});
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 40; ++x)
      EXPECT_EQ(out.at(x, y, 0), (x == x0 + 16 && y == y0) ? 1.f : 0.f) << x << "," << y;
}

TEST(Transforms, GridCardinalities) {
  const auto scale = sample_grid(TransformKind::scale);
  ASSERT_EQ(scale.size(), 256u);
  EXPECT_EQ(scale.front()[0], 0.25);
  EXPECT_EQ(scale.back()[0], 2.0);
  std::vector<double> bits;
  for (const auto& p : sample_grid(TransformKind::posterize)) bits.push_back(p[0]);
  EXPECT_EQ(bits, (std::vector<double>{1, 2, 3, 4, 5, 6, 7}));
  EXPECT_EQ(sample_grid(TransformKind::h_flip).size(), 1u);
  EXPECT_EQ(sample_grid(TransformKind::hue).size(), 5u);
  for (auto k : kAllTransforms) {
    const auto grid = sample_grid(k);
    const std::set<std::string> distinct = [&] {
      std::set<std::string> s;
      for (const auto& p : grid) s.insert(p.to_string());
      return s;
    }();
    EXPECT_EQ(distinct.size(), grid.size()) << transform_name(k);
    for (const auto& p : grid) EXPECT_NO_THROW(check_param(k, p)) << transform_name(k);
    const bool one_shot = k == TransformKind::h_flip || k == TransformKind::v_flip ||
                          k == TransformKind::grayscale || k == TransformKind::equalize ||
                          k == TransformKind::invert;
    if (one_shot) EXPECT_EQ(grid.size(), 1u);
    else if (k != TransformKind::posterize && k != TransformKind::hue) EXPECT_EQ(grid.size(), 256u);
  }
}

TEST(Transforms, FamilyAssignment) {
  int spatial = 0;
  for (auto k : kAllTransforms) spatial += transform_family(k) == TransformFamily::spatial;
  EXPECT_EQ(spatial, 8);
  EXPECT_EQ(transform_family(TransformKind::deform), TransformFamily::spatial);
  EXPECT_EQ(transform_family(TransformKind::grayscale), TransformFamily::appearance);
  EXPECT_EQ(transform_family(TransformKind::invert), TransformFamily::appearance);
}

TEST(Transforms, OutOfRangeParameterIsRejected) {
  const auto img = shape_image(1);
  for (auto [k, p] : std::vector<std::pair<TransformKind, TransformParam>>{
           {TransformKind::scale, {3.0}},
           {TransformKind::rotation, {-1.0}},
           {TransformKind::posterize, {0.0}},
           {TransformKind::translation, {17.0, 0.0}},
           {TransformKind::brightness, {0.1}},
           {TransformKind::blur, {0.0}},
           {TransformKind::h_flip, {1.0}}}) {
    try {
      apply(img, k, p);
      ADD_FAILURE() << transform_name(k);
    } catch (const Error& e) {
      EXPECT_EQ(e.category(), ErrorCategory::parameter);
    }
  }
}

TEST(Transforms, OutputsStayInRangeAndAreDeterministic) {
  const auto img = shape_image(8);
  for (auto k : kAllTransforms) {
    const auto grid = sample_grid(k, 16);
    for (std::size_t i = 0; i < grid.size(); i += 3) {
      const auto a = apply(img, k, grid[i], 99);
      const auto b = apply(img, k, grid[i], 99);
      EXPECT_EQ(a, b) << transform_name(k);
      EXPECT_EQ(a.width(), img.width());
      for (float v : a.data()) ASSERT_TRUE(v >= 0.f && v <= 1.f);
    }
  }
}

TEST(Transforms, SpatialKindsCommuteWithGrayscale) {
  const auto img = shape_image(21);
  for (auto k : kAllTransforms) {
    if (transform_family(k) != TransformFamily::spatial) continue;
    const auto grid = sample_grid(k, 16);
    for (std::size_t i = 0; i < grid.size(); i += 5) {
      const auto a = apply(apply(img, TransformKind::grayscale, {}), k, grid[i], 4);
      const auto b = apply(apply(img, k, grid[i], 4), TransformKind::grayscale, {});
      EXPECT_LE(max_abs_diff(a, b), 1e-4) << transform_name(k) << " " << grid[i].to_string();
    }
  }
}

TEST(Transforms, DeformDependsOnSeed) {
  const auto img = shape_image(2, 64);
  EXPECT_FALSE(apply(img, TransformKind::deform, {10.0}, 1) == apply(img, TransformKind::deform, {10.0}, 2));
}

TEST(ColorJitter, ZeroMaximaLeaveImageUnchanged) {
  const auto img = noise_image(8, 8, 3);
  SeededRng rng(5);
  EXPECT_EQ(color_jitter(img, {0, 0, 0, 0}, rng), img);
}

TEST(ColorJitter, HalfTurnHueTwiceReturnsToStart) {
  const Image img(1, 1, 0.9f, 0.2f, 0.1f);
  const auto back = ops::hue_shift(ops::hue_shift(img, 0.5), 0.5);
  const auto h0 = color::rgb_to_hsv({0.9, 0.2, 0.1})[0];
  const auto h1 = color::rgb_to_hsv({back.at(0, 0, 0), back.at(0, 0, 1), back.at(0, 0, 2)})[0];
  EXPECT_NEAR(std::fmod(h1 - h0 + 1.5, 1.0) - 0.5, 0.0, 1e-4);
  EXPECT_LE(max_abs_diff(back, img), 1e-4);
}

TEST(ColorJitter, BrightnessClamps) {
  const Image img(1, 1, 0.6f, 0.6f, 0.6f);
  EXPECT_EQ(ops::brightness(img, 2.0).at(0, 0, 0), 1.0f);
}

TEST(Policy, DegenerateSpatialDrawOnlyResizes) {
  auto policy = spatial_policy(0);
  policy.steps[0].scale = {1.0, 1.0};
  policy.steps[0].ratio = {1.0, 1.0};
  policy.steps[1].probability = 0.0;
  const auto img = shape_image(4);
  SeededRng rng(1);
  EXPECT_EQ(apply_policy(img, policy, rng), img);
  policy.output_size = 16;
  EXPECT_EQ(apply_policy(img, policy, rng), ops::crop_resize(img, 0, 0, 32, 32, 16, 16));
}

TEST(Policy, AppearancePolicyKeepsPixelPositions) {
  // Coloured square off-centre on black; only values change, never positions.
  std::vector<double> px(64 * 64 * 3, 0.0);
  for (int y = 16; y < 32; ++y)
    for (int x = 12; x < 28; ++x) {
      px[(y * 64 + x) * 3 + 0] = 0.9;
      px[(y * 64 + x) * 3 + 1] = 0.3;
      px[(y * 64 + x) * 3 + 2] = 0.2;
    }
  const auto img = Image::from_unclamped(64, 64, px);
  const auto expected = testing::foreground_centroid(img);
  const auto policy = appearance_policy(64);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SeededRng rng(seed);
    const auto out = apply_policy(img, policy, rng);
    const auto c = testing::foreground_centroid(out);
    EXPECT_NEAR(c.x, expected.x, 1e-6) << seed;
    EXPECT_NEAR(c.y, expected.y, 1e-6) << seed;
  }
}

std::size_t image_hash(const Image& img) {
  std::size_t h = 1469598103934665603ULL;
  for (float v : img.data()) h = (h ^ std::hash<float>{}(v)) * 1099511628211ULL;
  return h;
}

TEST(Policy, DefaultPolicyDependsOnSeed) {
  const auto img = shape_image(6, 64);
  const auto policy = default_policy(64);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SeededRng a(2 * seed), b(2 * seed + 1);
    EXPECT_NE(image_hash(apply_policy(img, policy, a)), image_hash(apply_policy(img, policy, b))) << seed;
  }
}

TEST(Policy, SameSeedSameOutput) {
  const auto img = shape_image(6, 64);
  for (const auto& policy : {default_policy(48), spatial_policy(48), appearance_policy(48)}) {
    SeededRng a(3), b(3);
    EXPECT_EQ(apply_policy(img, policy, a), apply_policy(img, policy, b));
  }
}

TEST(Policy, BuiltinPoliciesMatchListings) {
  const auto def = default_policy();
  ASSERT_EQ(def.steps.size(), 6u);
  EXPECT_EQ(def.steps[0].kind, StepKind::random_resized_crop);
  EXPECT_EQ(def.steps[0].scale, (std::array<double, 2>{0.2, 1.0}));
  EXPECT_EQ(def.steps[1].probability, 0.8);
  EXPECT_EQ(def.steps[1].jitter.hue, 0.1);
  EXPECT_EQ(def.steps[2].probability, 0.2);
  EXPECT_EQ(def.steps[3].sigma, (std::array<double, 2>{0.1, 2.0}));
  EXPECT_EQ(def.steps[4].probability, 0.5);
  EXPECT_EQ(def.normalization()->std[2], 0.225);
  EXPECT_EQ(spatial_policy().steps.size(), 3u);
  EXPECT_EQ(appearance_policy().steps.front().kind, StepKind::resize_center_crop);
  EXPECT_THROW(builtin_policy("Nope"), Error);
}

TEST(Policy, JsonRoundTrip) {
  const auto p = default_policy(96);
  const auto back = policy_from_json(nlohmann::json::parse(policy_to_json(p).dump()));
  EXPECT_EQ(policy_to_json(back), policy_to_json(p));
  EXPECT_THROW(policy_from_json(nlohmann::json::parse(R"({"name":"x","steps":[{"kind":"warp"}]})")), Error);
}

}  // namespace
}  // namespace invlab
