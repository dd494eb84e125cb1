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

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "advmoco/evalharness.hpp"
#include "advmoco/rng.hpp"
#include "testing.hpp"

namespace advmoco {
namespace {

TEST(Entropy, KnownValues) {
  const std::vector<double> one_hot{0.0, 1.0, 0.0};
  EXPECT_EQ(entropy(one_hot), 0.0);
  const std::vector<double> uniform(4, 0.25);
  EXPECT_NEAR(entropy(uniform), std::log(4.0), 1e-15);
  const std::vector<double> mixed{0.5, 0.25, 0.25};
  EXPECT_NEAR(entropy(mixed), 1.0397207708399179, 1e-15);
}

TEST(Entropy, RejectsNonDistributions) {
  EXPECT_THROW(entropy(std::vector<double>{0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(entropy(std::vector<double>{-0.1, 1.1}), std::invalid_argument);
  EXPECT_THROW(entropy(std::vector<double>{}), std::invalid_argument);
}

TEST(Softmax, SumsToOneAndShiftInvariant) {
  Vector z(3);
  z << 1000.0, 1001.0, 999.0;
  const Vector p = softmax(z);
  EXPECT_NEAR(p.sum(), 1.0, 1e-15);
  Vector shifted = z.array() - 1000.0;
  EXPECT_LT((softmax(shifted) - p).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ClipStarts, EvenlySpacedAndRounded) {
  EXPECT_EQ(clip_starts(40, 16, 10), (std::vector<int>{0, 3, 5, 8, 11, 13, 16, 19, 21, 24}));
  EXPECT_EQ(clip_starts(16, 16, 3), (std::vector<int>{0, 0, 0}));
  EXPECT_EQ(clip_starts(20, 16, 1), (std::vector<int>{0}));
  EXPECT_THROW(clip_starts(10, 16, 2), std::invalid_argument);
}

TEST(Occlusion, Geometry) {
  OcclusionSpec spec;
  spec.frame_fraction = 0.5;
  spec.area_fraction = 0.25;
  EXPECT_EQ(occluded_frames(spec, 8), (std::vector<int>{2, 3, 4, 5}));
  const Region r = occluded_region(spec, 32, 32);
  EXPECT_EQ(r.height, 16);
  EXPECT_EQ(r.width, 16);
  EXPECT_EQ(r.y, 8);
  EXPECT_EQ(r.x, 8);
  spec.frame_fraction = 0.0;
  EXPECT_TRUE(occluded_frames(spec, 8).empty());
}

class EvalTest : public ::testing::Test {
 protected:
  ExperimentConfig cfg = testing::tiny_config();
  Encoder encoder{EncoderArch::from(cfg.model)};
  ParamSet params = encoder.init_params(5);
  Dataset data = build_dataset(cfg.dataset, 9);
};

TEST_F(EvalTest, ProbeLeavesEncoderUntouched) {
  const LabeledClips train = labeled_clips(cfg, data, data.train, 2);
  ASSERT_EQ(train.clips.size(), 2 * data.train.size());
  const ParamSet before = params;
  const FinetuneResult r = finetune(encoder, params, train.clips, train.labels, cfg.dataset.classes,
                                    probe_options(cfg));
  EXPECT_EQ(params, before);
  EXPECT_EQ(r.encoder, before);
  EXPECT_EQ(static_cast<int>(r.epoch_loss.size()), cfg.eval.probe_epochs);
  EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
}

TEST_F(EvalTest, ProbeHeadActsOnRawEmbeddings) {
  const LabeledClips train = labeled_clips(cfg, data, data.train, 1);
  const FinetuneResult r = finetune(encoder, params, train.clips, train.labels, 4, probe_options(cfg));
  int correct = 0;
  for (std::size_t i = 0; i < train.clips.size(); ++i) {
    const Vector logits = r.head.logits(encoder.encode(params, train.clips[i]));
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    correct += best == train.labels[i];
  }
  EXPECT_DOUBLE_EQ(r.train_accuracy, static_cast<double>(correct) / train.clips.size());
}

TEST_F(EvalTest, TrainingIsDeterministic) {
  const LabeledClips train = labeled_clips(cfg, data, data.train, 1);
  const FinetuneResult a = finetune(encoder, params, train.clips, train.labels, 4, probe_options(cfg));
  const FinetuneResult b = finetune(encoder, params, train.clips, train.labels, 4, probe_options(cfg));
  EXPECT_EQ(a.head, b.head);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
}

TEST(Finetune, MemorizesSmallSet) {
  ExperimentConfig cfg = testing::small_run_config();
  cfg.dataset.train_videos = 32;
  const Dataset d = build_dataset(cfg.dataset, 4);
  const Encoder encoder(EncoderArch::from(cfg.model));
  const ParamSet params = encoder.init_params(5);
  const LabeledClips train = labeled_clips(cfg, d, d.train, 1);
  FinetuneOptions o = finetune_options(cfg);
  o.epochs = 100;
  o.batch = 8;
  const FinetuneResult r = finetune(encoder, params, train.clips, train.labels, 4, o);
  EXPECT_FALSE(r.encoder == params);
  EXPECT_EQ(r.train_accuracy, 1.0) << "final epoch loss " << r.epoch_loss.back();
}

TEST_F(EvalTest, PredictionIsADistribution) {
  const ProbeHead head = ProbeHead::init(cfg.model.embed_dim, 4, 3);
  const ClipEvaluator eval{encoder, params, head, cfg.model.clip_frames, cfg.model.input_size, 3};
  for (const ClipRecord& rec : data.test) {
    const PredictionReport r = predict_video(eval, data.render(rec));
    EXPECT_NEAR(std::accumulate(r.probabilities.begin(), r.probabilities.end(), 0.0), 1.0, 1e-12);
    EXPECT_GE(r.entropy, 0.0);
    EXPECT_LE(r.entropy, std::log(4.0));
    ASSERT_TRUE(r.label.has_value());
    EXPECT_EQ(r.correct, r.prediction == *r.label);
  }
}

TEST_F(EvalTest, EmptyOcclusionChangesNothing) {
  const ProbeHead head = ProbeHead::init(cfg.model.embed_dim, 4, 3);
  const ClipEvaluator eval{encoder, params, head, cfg.model.clip_frames, cfg.model.input_size, 2};
  OcclusionSpec none;
  none.frame_fraction = 0.0;
  none.area_fraction = 0.0;
  const OcclusionReport r = occlusion_report(eval, data, data.test, none);
  ASSERT_EQ(r.rows.size(), data.test.size());
  EXPECT_EQ(r.summary.videos, static_cast<int>(data.test.size()));
  EXPECT_EQ(r.summary.mean_entropy_delta, 0.0);
  EXPECT_EQ(r.summary.top1_clean, r.summary.top1_occluded);
  for (std::size_t i = 1; i < r.rows.size(); ++i) EXPECT_LT(r.rows[i - 1].id, r.rows[i].id);
}

TEST_F(EvalTest, ReportTsvRoundTrip) {
  const ProbeHead head = ProbeHead::init(cfg.model.embed_dim, 4, 3);
  const ClipEvaluator eval{encoder, params, head, cfg.model.clip_frames, cfg.model.input_size, 2};
  const OcclusionReport r = occlusion_report(eval, data, data.test, OcclusionSpec::from(cfg.eval));
  const OcclusionReport back = parse_report_tsv(report_tsv(r));
  ASSERT_EQ(back.rows.size(), r.rows.size());
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].id, r.rows[i].id);
    EXPECT_EQ(back.rows[i].clean.entropy, r.rows[i].clean.entropy);
    EXPECT_EQ(back.rows[i].occluded.prediction, r.rows[i].occluded.prediction);
  }
  EXPECT_DOUBLE_EQ(back.summary.mean_entropy_delta, r.summary.mean_entropy_delta);
}

TEST(Attention, FlatVolumeIsZero) {
  Volume v{2, 2, 2, Matrix::Constant(8, 3, 0.7)};
  const AttentionMap m = attention_from_volume(v, 4, 8, 8);
  ASSERT_EQ(m.values.size(), 4u * 8 * 8);
  for (double x : m.values) EXPECT_EQ(x, 0.0);
}

TEST(Attention, NormalizedPerSlice) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  Volume v{2, 3, 3, Matrix(18, 4)};
  for (Eigen::Index i = 0; i < v.data.size(); ++i) v.data.data()[i] = n(rng);
  const AttentionMap m = attention_from_volume(v, 4, 12, 12);
  for (int t = 0; t < 4; ++t) {
    double lo = 1.0, hi = 0.0;
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 12; ++x) {
        lo = std::min(lo, m.at(t, y, x));
        hi = std::max(hi, m.at(t, y, x));
      }
    EXPECT_GE(lo, 0.0);
    EXPECT_LE(hi, 1.0);
  }
  // At source resolution the map is the min-max normalized channel mean of |a|.
  const AttentionMap same = attention_from_volume(v, 2, 3, 3);
  for (int t = 0; t < 2; ++t) {
    std::vector<double> raw;
    for (int p = 0; p < 9; ++p) raw.push_back(v.data.row(t * 9 + p).cwiseAbs().mean());
    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    for (int p = 0; p < 9; ++p)
      EXPECT_NEAR(same.at(t, p / 3, p % 3), (raw[p] - *lo) / (*hi - *lo), 1e-12);
  }
}

TEST_F(EvalTest, AttentionMatchesClipShape) {
  const VideoClip clip = sample_subclip(data.render(data.test[0]), cfg.model.clip_frames, 0);
  const VideoClip crop = augment(clip, center_view(clip, cfg.model.input_size));
  const AttentionMap m = attention_map(encoder, params, crop);
  EXPECT_EQ(m.frames, crop.frames);
  EXPECT_EQ(m.height, crop.height);
  EXPECT_EQ(m.width, crop.width);
  for (double x : m.values) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
}

}  // namespace
}  // namespace advmoco
