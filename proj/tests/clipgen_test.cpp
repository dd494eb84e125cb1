// Copyright 2026 The advmoco Authors.
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

#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "advmoco/clipgen.hpp"
#include "advmoco/config.hpp"
#include "advmoco/rng.hpp"
#include "testing.hpp"

namespace advmoco {
namespace {

SpriteSceneSpec plain_spec() {
  SpriteSceneSpec s;
  s.size = 4;
  s.start_x = 0;
  s.start_y = 6;
  s.velocity_x = 1.0;
  s.sprite_intensity = 0.8;
  s.background_intensity = 0.1;
  return s;
}

double centroid_x(const VideoClip& c, int t) {
  double mass = 0.0, sum = 0.0;
  for (int y = 0; y < c.height; ++y)
    for (int x = 0; x < c.width; ++x) {
      const double m = c.at(t, y, x, 0) - 0.1;
      mass += m;
      sum += m * x;
    }
  return sum / mass;
}

std::uint64_t fnv1a_clip(const VideoClip& c) {
  return fnv1a64({reinterpret_cast<const char*>(c.data.data()), c.data.size() * sizeof(double)});
}

VideoClip random_clip(int t, int h, int w, int c, std::uint64_t seed) {
  auto rng = make_rng(seed, Stream::kNoise);
  VideoClip clip(t, h, w, c);
  for (double& v : clip.data) v = uniform(rng, 0.05, 0.95);
  return clip;
}

TEST(Clipgen, StaticSceneHasIdenticalFrames) {
  SpriteSceneSpec s = plain_spec();
  s.velocity_x = 0.0;
  const VideoClip c = synth_clip(s, 6, 16, 16);
  for (int t = 1; t < 6; ++t)
    EXPECT_TRUE(std::equal(c.frame(t).begin(), c.frame(t).end(), c.frame(0).begin()));
}

TEST(Clipgen, RenderIsDeterministic) {
  SpriteSceneSpec s = plain_spec();
  s.noise_std = 0.05;
  s.seed = 99;
  EXPECT_EQ(synth_clip(s, 5, 16, 16), synth_clip(s, 5, 16, 16));
}

TEST(Clipgen, CentroidAdvancesUntilReflection) {
  const SpriteSceneSpec s = plain_spec();
  const int width = 16;
  const VideoClip c = synth_clip(s, 20, 16, width);
  // Travel is width - size = 12 pixels at 1 px/frame: frames 0..12 move right.
  for (int t = 1; t <= 12; ++t) EXPECT_GT(centroid_x(c, t), centroid_x(c, t - 1)) << "frame " << t;
  EXPECT_LT(centroid_x(c, 13), centroid_x(c, 12));
}

TEST(Clipgen, ValuesStayInUnitRange) {
  SpriteSceneSpec s = plain_spec();
  s.noise_std = 0.5;
  s.seed = 3;
  const VideoClip c = synth_clip(s, 4, 12, 12);
  for (double v : c.data) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Clipgen, ReflectedPositionStaysInRange) {
  for (int t = 0; t < 200; ++t) {
    const double p = reflected_position(3.5, -1.3, t, 10.0);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 10.0);
  }
  EXPECT_DOUBLE_EQ(reflected_position(9.0, 2.0, 1, 10.0), 9.0);  // 11 reflects to 9
}

TEST(Clipgen, DirectionClasses) {
  EXPECT_EQ(direction_class(1.0, 0.0, 4), 0);
  EXPECT_EQ(direction_class(0.0, 1.0, 4), 1);
  EXPECT_EQ(direction_class(-1.0, 0.0, 4), 2);
  EXPECT_EQ(direction_class(0.0, -1.0, 4), 3);
  EXPECT_EQ(direction_class(1.0, 0.1, 4), 0);
  EXPECT_FALSE(direction_class(0.0, 0.0, 4).has_value());
}

TEST(Clipgen, SubclipSlices) {
  const VideoClip src = random_clip(16, 4, 4, 3, 1);
  EXPECT_EQ(sample_subclip(src, 16, 0), src);
  const VideoClip sub = sample_subclip(src, 8, 4);
  ASSERT_EQ(sub.frames, 8);
  for (int t = 0; t < 8; ++t)
    EXPECT_TRUE(std::equal(sub.frame(t).begin(), sub.frame(t).end(), src.frame(t + 4).begin()));
  EXPECT_THROW(sample_subclip(src, 8, 9), std::out_of_range);
  EXPECT_THROW(sample_subclip(src, 17, 0), std::out_of_range);
}

TEST(Clipgen, SlidingSubclipCount) {
  const VideoClip src = random_clip(40, 2, 2, 1, 2);
  std::set<std::vector<double>> distinct;
  for (int start = 0;; ++start) {
    try {
      distinct.insert(sample_subclip(src, 32, start).data);
    } catch (const std::out_of_range&) {
      break;
    }
  }
  EXPECT_EQ(distinct.size(), 9u);
}

TEST(Clipgen, FlipTwiceIsIdentity) {
  const VideoClip c = random_clip(3, 6, 7, 3, 4);
  AugmentParams full{0, 0, 6, 7, true, {}, false, 0};
  EXPECT_EQ(augment(augment(c, full), full), c);
}

TEST(Clipgen, DecolorizeRemovesChannelVariance) {
  const VideoClip c = random_clip(2, 5, 5, 3, 5);
  AugmentParams p{0, 0, 5, 5, false, {}, true, 0};
  const VideoClip g = augment(c, p);
  for (int t = 0; t < 2; ++t)
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 5; ++x) {
        EXPECT_EQ(g.at(t, y, x, 0), g.at(t, y, x, 1));
        EXPECT_EQ(g.at(t, y, x, 1), g.at(t, y, x, 2));
      }
}

TEST(Clipgen, JitterClampsAtOne) {
  VideoClip c(1, 1, 1, 3, 0.95);
  AugmentParams p{0, 0, 1, 1, false, {0.1, 0.0, 0.0}, false, 0};
  const VideoClip out = augment(c, p);
  EXPECT_EQ(out.at(0, 0, 0, 0), 1.0);
  EXPECT_EQ(out.at(0, 0, 0, 1), 0.95);
}

TEST(Clipgen, CropTakesWindow) {
  const VideoClip c = random_clip(2, 6, 6, 3, 6);
  AugmentParams p{1, 2, 3, 3, false, {}, false, 0};
  const VideoClip out = augment(c, p);
  ASSERT_EQ(out.height, 3);
  EXPECT_EQ(out.at(1, 0, 0, 2), c.at(1, 1, 2, 2));
  EXPECT_EQ(out.at(0, 2, 2, 0), c.at(0, 3, 4, 0));
}

TEST(Clipgen, DrawAugmentIsSeededAndInBounds) {
  const VideoClip c = random_clip(2, 10, 10, 3, 7);
  AugmentConfig cfg;
  cfg.flip_prob = 0.5;
  for (std::uint64_t i = 0; i < 50; ++i) {
    auto r1 = make_rng(1, Stream::kQueryView, {i});
    auto r2 = make_rng(1, Stream::kQueryView, {i});
    const AugmentParams a = draw_augment(r1, c, 8, cfg);
    const AugmentParams b = draw_augment(r2, c, 8, cfg);
    EXPECT_EQ(augment(c, a), augment(c, b));
    EXPECT_GE(a.crop_y, 0);
    EXPECT_LE(a.crop_y + a.crop_height, 10);
    EXPECT_LE(a.crop_x + a.crop_width, 10);
  }
}

TEST(Clipgen, OccludeEmptyIsIdentity) {
  const VideoClip c = random_clip(4, 6, 6, 3, 8);
  EXPECT_EQ(occlude(c, {}, {0, 0, 6, 6}), c);
}

TEST(Clipgen, OccludeFullFrame) {
  const VideoClip c = random_clip(5, 6, 6, 3, 9);
  const std::vector<int> ids{3};
  const VideoClip o = occlude(c, ids, {0, 0, 6, 6}, 0.0);
  for (double v : o.frame(3)) EXPECT_EQ(v, 0.0);
  for (int t : {0, 1, 2, 4}) EXPECT_TRUE(std::equal(o.frame(t).begin(), o.frame(t).end(), c.frame(t).begin()));
}

TEST(Clipgen, OccludeLeftHalfChangesExpectedPixelCount) {
  const int H = 6, W = 8, C = 3;
  const VideoClip c = random_clip(4, H, W, C, 10);
  const std::vector<int> ids{0, 2};
  const VideoClip o = occlude(c, ids, {0, 0, H, W / 2}, 0.5);
  for (int t = 0; t < 4; ++t) {
    int changed = 0;
    for (std::size_t i = 0; i < c.frame_size(); ++i) changed += o.frame(t)[i] != c.frame(t)[i];
    EXPECT_EQ(changed, (t == 0 || t == 2) ? H * (W / 2) * C : 0);
  }
}

TEST(Clipgen, DatasetIsBalancedAndLabeledByDirection) {
  DatasetConfig cfg;
  cfg.train_videos = 103;
  cfg.test_videos = 10;
  const Dataset d = build_dataset(cfg, 5);
  std::map<int, int> hist;
  for (const auto& r : d.train) {
    ++hist[r.label];
    EXPECT_EQ(direction_class(r.spec.velocity_x, r.spec.velocity_y, cfg.classes), r.label);
  }
  for (const auto& [label, n] : hist) EXPECT_NEAR(n, 103.0 / 4, 1.0);
  EXPECT_EQ(d.render(d.train[0]).label, d.train[0].label);
}

TEST(Clipgen, GrayScenesWithinIntensityRanges) {
  SpriteSceneSpec s = plain_spec();
  const VideoClip c = synth_clip(s, 3, 16, 16);
  for (std::size_t i = 0; i < c.data.size(); i += 3) {
    EXPECT_EQ(c.data[i], c.data[i + 1]);
    EXPECT_EQ(c.data[i], c.data[i + 2]);
  }
  EXPECT_DOUBLE_EQ(c.at(0, 15, 15, 0), 0.1);
  EXPECT_DOUBLE_EQ(c.at(0, 8, 1, 0), 0.8);

  DatasetConfig cfg;
  cfg.train_videos = 40;
  cfg.test_videos = 0;
  cfg.min_sprite_intensity = 0.6;
  cfg.max_sprite_intensity = 0.7;
  cfg.min_background_intensity = 0.25;
  cfg.max_background_intensity = 0.25;
  for (const auto& r : build_dataset(cfg, 3).train) {
    EXPECT_GE(r.spec.sprite_intensity, 0.6);
    EXPECT_LE(r.spec.sprite_intensity, 0.7);
    EXPECT_EQ(r.spec.background_intensity, 0.25);
  }
}

TEST(Clipgen, ManifestRoundTripRegeneratesClips) {
  DatasetConfig cfg;
  cfg.train_videos = 6;
  cfg.test_videos = 3;
  const Dataset d = build_dataset(cfg, 11);
  EXPECT_EQ(manifest_text(d), manifest_text(build_dataset(cfg, 11)));
  const Dataset back = parse_manifest(manifest_text(d));
  EXPECT_EQ(manifest_text(back), manifest_text(d));
  ASSERT_EQ(back.train.size(), 6u);
  ASSERT_EQ(back.test.size(), 3u);
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    const VideoClip a = d.render(d.train[i]);
    const VideoClip b = back.render(back.train[i]);
    EXPECT_EQ(fnv1a_clip(a), fnv1a_clip(b));
    EXPECT_EQ(a, b);
  }
}

TEST(Clipgen, ManifestFileRoundTrip) {
  const std::string dir = testing::temp_dir("manifest");
  DatasetConfig cfg;
  cfg.train_videos = 2;
  cfg.test_videos = 1;
  const Dataset d = build_dataset(cfg, 2);
  write_manifest(d, dir + "/m.jsonl");
  EXPECT_EQ(manifest_text(read_manifest(dir + "/m.jsonl")), manifest_text(d));
  EXPECT_THROW(parse_manifest("{\"kind\":\"clip\"}\n"), std::runtime_error);
}

TEST(Clipgen, ExportFramesWritesOneImagePerFrame) {
  const std::string dir = testing::temp_dir("frames");
  export_frames(random_clip(3, 4, 5, 3, 12), dir);
  int n = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) n += e.path().extension() == ".ppm";
  EXPECT_EQ(n, 3);
}

}  // namespace
}  // namespace advmoco
