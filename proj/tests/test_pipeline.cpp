/*
 * Copyright 2026 The cfs3d Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "cfs3d/checkpoint.hpp"
#include "cfs3d/error.hpp"
#include "cfs3d/pipeline.hpp"
#include "cfs3d/rng.hpp"
#include "cfs3d/scene.hpp"

namespace cfs3d {
void PrintTo(Variant v, std::ostream* os) { *os << to_string(v); }

namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cfs3d_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig toy_config() {
  RunConfig c;
  c.model.points_per_block = 64;
  c.model.feature_width = 8;
  c.model.encoder_widths = {8, 8, 8};
  c.scene.surface_density = 60.0;
  c.scene.object_points_min = 60;
  c.scene.object_points_max = 90;
  c.epochs = 2;
  c.lr = 0.01;
  c.seed = 5;
  return c;
}

std::vector<PointCloud> toy_scenes(const RunConfig& c, std::size_t count) {
  std::vector<PointCloud> out;
  for (std::size_t i = 0; i < count; ++i) {
    SceneSpec s = c.scene;
    s.seed = mix_seed(c.seed, i);
    out.push_back(generate_scene(s));
  }
  return out;
}

TEST(TrainingBlocksTest, RequireLabels) {
  const RunConfig c = toy_config();
  auto scenes = toy_scenes(c, 1);
  EXPECT_FALSE(training_blocks(scenes, c).empty());
  scenes[0].inst.clear();
  EXPECT_THROW(training_blocks(scenes, c), DataError);
}

TEST(TrainingBlocksTest, SamplingIsSeededPerEpoch) {
  const RunConfig c = toy_config();
  const auto scenes = toy_scenes(c, 1);
  const auto blocks = training_blocks(scenes, c);
  const auto a = sample_training_block(blocks[0], c, 0);
  const auto b = sample_training_block(blocks[0], c, 0);
  const auto d = sample_training_block(blocks[0], c, 1);
  EXPECT_EQ(a.features.data, b.features.data);
  EXPECT_EQ(a.inst, b.inst);
  EXPECT_NE(a.features.data, d.features.data);
  EXPECT_EQ(a.features.rows, c.model.points_per_block);
  EXPECT_EQ(a.features.cols, 9u);
}

TEST(TrainerTest, LossDecreasesOverTwoEpochs) {
  const RunConfig c = toy_config();
  const auto scenes = toy_scenes(c, 4);
  Trainer t(c, training_blocks(scenes, c));
  const LossReport first = t.run_epoch();
  const LossReport second = t.run_epoch();
  EXPECT_LT(second.total, first.total);
  EXPECT_EQ(t.epoch(), 2u);
  EXPECT_EQ(t.step(), training_blocks(scenes, c).size() * 2);
}

TEST(TrainerTest, ResumeIsBitwiseIdentical) {
  RunConfig c = toy_config();
  c.epochs = 3;
  const auto scenes = toy_scenes(c, 2);
  const fs::path dir = temp_dir("resume");

  train(c, scenes, {dir / "full.ckpt", dir / "full.log", std::nullopt});

  RunConfig first = c;
  first.epochs = 1;
  train(first, scenes, {dir / "part.ckpt", dir / "part.log", std::nullopt});
  train(c, scenes, {dir / "part.ckpt", dir / "part.log", dir / "part.ckpt"});

  EXPECT_EQ(read_file(dir / "full.log"), read_file(dir / "part.log"));
  EXPECT_EQ(read_file(dir / "full.ckpt"), read_file(dir / "part.ckpt"));
}

TEST(TrainerTest, ResumeRejectsDifferentModel) {
  RunConfig c = toy_config();
  c.epochs = 1;
  const auto scenes = toy_scenes(c, 1);
  const fs::path dir = temp_dir("mismatch");
  train(c, scenes, {dir / "a.ckpt", std::nullopt, std::nullopt});
  RunConfig other = c;
  other.model.feature_width = 16;
  other.epochs = 2;
  EXPECT_THROW(train(other, scenes, {dir / "b.ckpt", std::nullopt, dir / "a.ckpt"}), ConfigError);
}

TEST(TrainerTest, VariantsProduceDifferentCheckpoints) {
  RunConfig c = toy_config();
  c.epochs = 1;
  const auto scenes = toy_scenes(c, 1);
  c.variant = Variant::baseline;
  const Checkpoint base = Trainer(c, training_blocks(scenes, c)).checkpoint();
  c.variant = Variant::full;
  Trainer full(c, training_blocks(scenes, c));
  full.run_epoch();
  const Checkpoint ck = full.checkpoint();
  EXPECT_NE(serialize_checkpoint(base), serialize_checkpoint(ck));
  EXPECT_EQ(ck.meta.at("variant"), "3dcfs");
  EXPECT_EQ(checkpoint_variant(ck, Variant::baseline), Variant::full);
  EXPECT_EQ(checkpoint_variant(Checkpoint{}, Variant::ci_s), Variant::ci_s);
}

TEST(TrainerTest, NonFiniteLossStopsAndKeepsLastCheckpoint) {
  RunConfig c = toy_config();
  c.epochs = 1;
  auto scenes = toy_scenes(c, 1);
  const fs::path dir = temp_dir("nan");
  train(c, scenes, {dir / "run.ckpt", dir / "run.log", std::nullopt});
  const std::string saved = read_file(dir / "run.ckpt");

  for (auto& rgb : *scenes[0].rgb) rgb[0] = std::numeric_limits<double>::quiet_NaN();
  c.epochs = 2;
  EXPECT_THROW(train(c, scenes, {dir / "run.ckpt", dir / "run.log", dir / "run.ckpt"}),
               NumericError);
  EXPECT_EQ(read_file(dir / "run.ckpt"), saved);
}

class InferenceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    config_ = new RunConfig(toy_config());
    const auto scenes = toy_scenes(*config_, 2);
    Trainer t(*config_, training_blocks(scenes, *config_));
    t.run_epoch();
    ckpt_ = new Checkpoint(t.checkpoint());
    SceneSpec s = config_->scene;
    s.seed = 777;
    scene_ = new PointCloud(generate_scene(s));
  }
  static void TearDownTestSuite() {
    delete config_;
    delete ckpt_;
    delete scene_;
  }
  static RunConfig* config_;
  static Checkpoint* ckpt_;
  static PointCloud* scene_;
};

RunConfig* InferenceTest::config_ = nullptr;
Checkpoint* InferenceTest::ckpt_ = nullptr;
PointCloud* InferenceTest::scene_ = nullptr;

TEST_F(InferenceTest, EveryPointGetsALabel) {
  const ModelParams p = frozen_params(ckpt_->config, *ckpt_);
  const auto r = infer_scene(p, ckpt_->config, *config_, false, *scene_);
  ASSERT_EQ(r.sem.size(), scene_->size());
  ASSERT_EQ(r.inst.size(), scene_->size());
  for (int s : r.sem) EXPECT_TRUE(s >= 0 && s < 4);
  const std::set<int> ids(r.inst.begin(), r.inst.end());
  EXPECT_EQ(*ids.begin(), 0);
  EXPECT_EQ(static_cast<std::size_t>(*ids.rbegin()) + 1, ids.size());
  EXPECT_GE(r.embeddings.rows, scene_->size());
  EXPECT_EQ(r.embeddings.cols, ckpt_->config.embedding_dim);
}

TEST_F(InferenceTest, IsDeterministic) {
  const ModelParams p = frozen_params(ckpt_->config, *ckpt_);
  const auto a = infer_scene(p, ckpt_->config, *config_, false, *scene_);
  const auto b = infer_scene(p, ckpt_->config, *config_, false, *scene_);
  EXPECT_EQ(a.sem, b.sem);
  EXPECT_EQ(a.inst, b.inst);
  EXPECT_EQ(a.embeddings.data, b.embeddings.data);
}

TEST_F(InferenceTest, MeanRemovalCentersEmbeddings) {
  const ModelParams p = frozen_params(ckpt_->config, *ckpt_);
  const auto r = infer_scene(p, ckpt_->config, *config_, true, *scene_);
  const auto stats = embedding_stats(r.embeddings);
  ASSERT_EQ(stats.size(), ckpt_->config.embedding_dim);
  // Each block is centered on its own, so the pooled mean is zero up to rounding.
  for (const auto& s : stats) EXPECT_NEAR(s.mean, 0.0, 1e-12);
}

TEST_F(InferenceTest, RejectsWrongFeatureWidth) {
  const ModelParams p = frozen_params(ckpt_->config, *ckpt_);
  PointCloud bare = *scene_;
  bare.rgb.reset();
  EXPECT_THROW(infer_scene(p, ckpt_->config, *config_, false, bare), ConfigError);
}

TEST(EmbeddingStatsTest, SortedByMeanWithPopulationVariance) {
  Matrix m(4, 2);
  m.data = {1, 10, 2, 10, 3, 14, 6, 14};
  const auto stats = embedding_stats(m);
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_EQ(stats[0].dim, 1u);
  EXPECT_DOUBLE_EQ(stats[0].mean, 12.0);
  EXPECT_DOUBLE_EQ(stats[0].variance, 4.0);
  EXPECT_DOUBLE_EQ(stats[1].mean, 3.0);
  EXPECT_DOUBLE_EQ(stats[1].variance, 3.5);
  EXPECT_EQ(format_embedding_stats(stats), "# mean variance\n12 4\n3 3.5\n");
}

class GradcheckTest : public ::testing::TestWithParam<Variant> {};

TEST_P(GradcheckTest, AllGroupsWithinTolerance) {
  RunConfig c;
  c.variant = GetParam();
  c.model.feature_width = 8;
  c.model.encoder_widths = {8, 8, 8};
  const auto groups = gradcheck(c);
  EXPECT_FALSE(groups.empty());
  for (const auto& g : groups) EXPECT_LT(g.max_rel_error, 1e-4) << g.group;
}

INSTANTIATE_TEST_SUITE_P(Variants, GradcheckTest,
                         ::testing::Values(Variant::baseline, Variant::ci_s, Variant::cs_i,
                                           Variant::cfsm_post, Variant::full),
                         [](const auto& info) {
                           std::string s(to_string(info.param));
                           return s == "3dcfs" ? std::string("full") : s;
                         });

}  // namespace
}  // namespace cfs3d
