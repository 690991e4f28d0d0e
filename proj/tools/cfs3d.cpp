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

// Command-line front end: gen, train, infer, eval, gradcheck, embed-stats.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cfs3d/checkpoint.hpp"
#include "cfs3d/config.hpp"
#include "cfs3d/error.hpp"
#include "cfs3d/metrics.hpp"
#include "cfs3d/pipeline.hpp"
#include "cfs3d/point_cloud.hpp"
#include "cfs3d/rng.hpp"
#include "cfs3d/scene.hpp"

namespace fs = std::filesystem;
using namespace cfs3d;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNumeric = 3;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;

  RunConfig load() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) {
      c.seed = *seed;
      c.scene.seed = *seed;
    }
    c.validate();
    return c;
  }
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "key=value run configuration")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", common.seed, "override the configured seed");
}

void write_text(const std::optional<std::string>& path, const std::string& text) {
  if (!path) {
    std::cout << text;
    return;
  }
  std::ofstream out(*path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + *path + "' for writing");
  out << text;
}

std::vector<PointCloud> load_all(const std::vector<std::string>& paths) {
  std::vector<PointCloud> scenes;
  for (const auto& p : paths) scenes.push_back(load_points(p));
  return scenes;
}

int run_gen(const Common& common, std::size_t count, const std::string& outdir) {
  const RunConfig c = common.load();
  fs::create_directories(outdir);
  for (std::size_t i = 0; i < count; ++i) {
    SceneSpec spec = c.scene;
    spec.seed = mix_seed(c.seed, i);
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03zu.pts", i);
    const fs::path path = fs::path(outdir) / name;
    save_points(generate_scene(spec), path);
    std::cout << path.string() << "\n";
  }
  return kExitOk;
}

int run_train(const Common& common, const std::optional<std::string>& variant,
              const std::string& checkpoint, const std::optional<std::string>& log,
              const std::optional<std::string>& resume, const std::vector<std::string>& scenes) {
  RunConfig c = common.load();
  if (variant) {
    c.variant = parse_variant(*variant);
    c.validate();
  }
  TrainPaths paths{checkpoint, std::nullopt, std::nullopt};
  if (log) paths.log = *log;
  if (resume) paths.resume = *resume;
  train(c, load_all(scenes), paths, &std::cout);
  return kExitOk;
}

int run_infer(const Common& common, const std::string& checkpoint, const std::string& scene_path,
              const std::string& out_path) {
  const RunConfig c = common.load();
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const Variant variant = checkpoint_variant(ckpt, c.variant);
  PointCloud scene = load_points(scene_path);
  const auto result = infer_scene(frozen_params(ckpt.config, ckpt), ckpt.config, c,
                                  variant == Variant::cfsm_post, scene);
  scene.sem = result.sem;
  scene.inst = result.inst;
  save_points(scene, out_path);
  return kExitOk;
}

int run_eval(const Common& common, const std::string& pred_path, const std::string& gt_path,
             const std::optional<std::string>& out) {
  const RunConfig c = common.load();
  const PointCloud pred = load_points(pred_path);
  const PointCloud gt = load_points(gt_path);
  if (pred.size() != gt.size()) {
    throw DataError("prediction has " + std::to_string(pred.size()) + " points, ground truth has " +
                    std::to_string(gt.size()));
  }
  if (!pred.has_sem() || !pred.has_inst() || !gt.has_sem() || !gt.has_inst())
    throw DataError("both files need sem and inst columns");
  const std::size_t classes = c.class_names.size();
  const auto sem = semantic_metrics(pred.sem, gt.sem, classes);
  const auto ins = instance_metrics(pred.inst, gt.inst, pred.sem, gt.sem, classes);
  write_text(out, format_report(sem, ins, c.class_names));
  return kExitOk;
}

int run_gradcheck(const Common& common) {
  const RunConfig c = common.load();
  const auto groups = gradcheck(c);
  bool ok = true;
  for (const auto& g : groups) {
    std::printf("%-24s %.3e\n", g.group.c_str(), g.max_rel_error);
    ok = ok && g.max_rel_error < 1e-4;
  }
  return ok ? kExitOk : kExitNumeric;
}

int run_embed_stats(const Common& common, const std::string& checkpoint,
                    const std::vector<std::string>& scenes, const std::optional<std::string>& out) {
  const RunConfig c = common.load();
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const bool removal = checkpoint_variant(ckpt, c.variant) == Variant::cfsm_post;
  const ModelParams params = frozen_params(ckpt.config, ckpt);
  std::vector<double> all;
  for (const auto& s : load_all(scenes)) {
    const auto r = infer_scene(params, ckpt.config, c, removal, s);
    all.insert(all.end(), r.embeddings.data.begin(), r.embeddings.data.end());
  }
  Matrix e;
  e.cols = ckpt.config.embedding_dim;
  e.rows = all.size() / e.cols;
  e.data = std::move(all);
  write_text(out, format_embedding_stats(embedding_stats(e)));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cfs3d: joint semantic and instance segmentation of point clouds"};
  app.require_subcommand(1);

  Common common;
  std::size_t count = 8;
  std::string outdir, checkpoint, scene_path, out_path, pred_path, gt_path;
  std::optional<std::string> variant, log, resume, report;
  std::vector<std::string> scenes;

  auto* gen = app.add_subcommand("gen", "generate synthetic labeled scenes");
  add_common(gen, common);
  gen->add_option("--count", count, "number of scenes")->check(CLI::PositiveNumber);
  gen->add_option("outdir", outdir, "output directory")->required();

  auto* tr = app.add_subcommand("train", "train a model on labeled scenes");
  add_common(tr, common);
  tr->add_option("--variant", variant, "baseline|ci_s|cs_i|cfsm|cfsm_post|3dcfs");
  tr->add_option("--checkpoint", checkpoint, "checkpoint to write")->required();
  tr->add_option("--log", log, "per-epoch loss log");
  tr->add_option("--resume", resume, "continue from this checkpoint")->check(CLI::ExistingFile);
  tr->add_option("scenes", scenes, "training scenes")->required()->check(CLI::ExistingFile);

  auto* inf = app.add_subcommand("infer", "label a scene with a trained model");
  add_common(inf, common);
  inf->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  inf->add_option("scene", scene_path)->required()->check(CLI::ExistingFile);
  inf->add_option("out", out_path)->required();

  auto* ev = app.add_subcommand("eval", "score predictions against ground truth");
  add_common(ev, common);
  ev->add_option("pred", pred_path)->required()->check(CLI::ExistingFile);
  ev->add_option("gt", gt_path)->required()->check(CLI::ExistingFile);
  ev->add_option("--out", report, "report file (default stdout)");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the training loss");
  add_common(gc, common);

  auto* es = app.add_subcommand("embed-stats", "per-dimension embedding mean and variance");
  add_common(es, common);
  es->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  es->add_option("scenes", scenes)->required()->check(CLI::ExistingFile);
  es->add_option("--out", report, "table file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*gen) return run_gen(common, count, outdir);
    if (*tr) return run_train(common, variant, checkpoint, log, resume, scenes);
    if (*inf) return run_infer(common, checkpoint, scene_path, out_path);
    if (*ev) return run_eval(common, pred_path, gt_path, report);
    if (*gc) return run_gradcheck(common);
    if (*es) return run_embed_stats(common, checkpoint, scenes, report);
  } catch (const NumericError& e) {
    std::cerr << "cfs3d: numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "cfs3d: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}
