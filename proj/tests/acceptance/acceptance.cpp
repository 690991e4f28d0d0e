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

// Acceptance suite. Runs every criterion and prints one PASS/FAIL line per
// criterion; the exit status is nonzero if any criterion fails.
//
//   acceptance [--only N[,N...]] [--workdir DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cfs3d/blocks.hpp"
#include "cfs3d/cluster.hpp"
#include "cfs3d/config.hpp"
#include "cfs3d/losses.hpp"
#include "cfs3d/metrics.hpp"
#include "cfs3d/pipeline.hpp"
#include "cfs3d/rng.hpp"
#include "cfs3d/scene.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace cfs3d;
using diffcore::Tape;
using diffcore::Tensor;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// 1. Gradient suite

Outcome gradient_suite() {
  const auto start = Clock::now();
  RunConfig c;
  c.gradcheck_points = 32;
  c.model.feature_width = 8;
  c.model.encoder_widths = {8, 8, 8};
  double worst = 0.0;
  std::string worst_group;
  // The full model plus the two ablation paths that bypass parts of it.
  for (Variant v : {Variant::full, Variant::cfsm, Variant::baseline}) {
    c.variant = v;
    for (const auto& g : gradcheck(c)) {
      if (g.max_rel_error >= worst) {
        worst = g.max_rel_error;
        worst_group = std::string(to_string(v)) + ":" + g.group;
      }
    }
  }
  const double secs = seconds_since(start);
  return {worst < 1e-4 && secs < 60.0, "max rel error " + fmt("%.2e", worst) + " (" + worst_group +
                                           "), " + fmt("%.1f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// 2. Equilibrium-loss identities

double emed(const Matrix& m) {
  Tape tape;
  return equilibrium_loss(tape, Tensor::from_matrix(m)).item();
}

Outcome equilibrium_identities() {
  Matrix hand(2, 2);
  hand.data = {0, 2, 0, 4};
  const double hand_value = emed(hand);

  std::size_t positive = 0, equalized = 0, removed = 0;
  double worst_zero = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(mix_seed(seed, 0xe3ed));
    const std::size_t rows = 2 + rng.below(40), cols = 2 + rng.below(8);
    Matrix e(rows, cols);
    for (double& v : e.data) v = rng.uniform(-5.0, 5.0);
    if (emed(e) > 0.0) ++positive;

    // Shift every column to a common mean.
    const double target = rng.uniform(-2.0, 2.0);
    Matrix eq = e;
    for (std::size_t j = 0; j < cols; ++j) {
      double m = 0.0;
      for (std::size_t i = 0; i < rows; ++i) m += e(i, j);
      m /= static_cast<double>(rows);
      for (std::size_t i = 0; i < rows; ++i) eq(i, j) += target - m;
    }
    const double z1 = emed(eq), z2 = emed(mean_removal(e));
    worst_zero = std::max({worst_zero, z1, z2});
    if (z1 < 1e-24) ++equalized;
    if (z2 < 1e-24) ++removed;
  }
  const bool ok = hand_value == 2.25 && positive == 1000 && equalized == 1000 && removed == 1000;
  return {ok, "hand case " + fmt("%.17g", hand_value) + ", unequal>0 " + std::to_string(positive) +
                  "/1000, equal-means zero " + std::to_string(equalized) +
                  "/1000, mean_removal zero " + std::to_string(removed) + "/1000, largest zero " +
                  fmt("%.1e", worst_zero)};
}

// ---------------------------------------------------------------------------
// 3. Clustering recovery

Outcome clustering_recovery() {
  const auto start = Clock::now();
  const MeanShiftConfig ms;
  std::size_t exact = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t k = 1 + seed % 5;
    const auto p = oracle::planted_clusters(k, 20 + seed % 11, 5, 4.0 * ms.bandwidth + 0.1,
                                            ms.bandwidth / 2.5, mix_seed(seed, 0xc1u));
    const auto r = mean_shift(p.points, ms);
    if (r.num_clusters() == k && oracle::adjusted_rand_index(r.labels, p.labels) == 1.0) ++exact;
  }
  const double secs = seconds_since(start);
  return {exact == 100 && secs < 30.0,
          std::to_string(exact) + "/100 recovered exactly, " + fmt("%.2f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// 4. Metrics oracle

Outcome metrics_oracle() {
  constexpr int kClasses = 4;
  std::size_t agree = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Rng rng(mix_seed(seed, 0x3e7));
    const std::size_t n = 1 + rng.below(64);
    const int gt_k = 1 + static_cast<int>(rng.below(6)),
              pred_k = 1 + static_cast<int>(rng.below(6));
    std::vector<int> inst_class(static_cast<std::size_t>(gt_k));
    for (auto& c : inst_class) c = static_cast<int>(rng.below(kClasses));
    std::vector<int> ps, gs, pi, gi;
    for (std::size_t i = 0; i < n; ++i) {
      const int g = static_cast<int>(rng.below(static_cast<std::uint64_t>(gt_k)));
      gi.push_back(2 * g + 5);
      gs.push_back(inst_class[static_cast<std::size_t>(g)]);
      const bool copy = rng.uniform() < 0.6;
      pi.push_back(copy ? g : static_cast<int>(rng.below(static_cast<std::uint64_t>(pred_k))));
      ps.push_back(copy ? gs.back() : static_cast<int>(rng.below(kClasses)));
    }
    const auto sem = semantic_metrics(ps, gs, kClasses);
    const auto cov = coverage_metrics(pi, gi, gs, kClasses);
    const auto pr = prec_rec(pi, gi, ps, gs, kClasses, 0.5);
    const auto os = oracle::semantic(ps, gs, kClasses);
    const auto oc = oracle::coverage(pi, gi, gs, kClasses);
    const auto op = oracle::prec_rec(pi, gi, ps, gs, kClasses, 0.5);
    if (sem.oAcc == os.oAcc && sem.mAcc == os.mAcc && sem.mIoU == os.mIoU && cov.mCov == oc.mCov &&
        cov.mWCov == oc.mWCov && pr.mPrec == op.mPrec && pr.mRec == op.mRec) {
      ++agree;
    }
  }
  return {agree == 500, std::to_string(agree) + "/500 labelings match exactly"};
}

// ---------------------------------------------------------------------------
// Training runs shared by criteria 5, 6, 7 and 9.

RunConfig desk_config(std::uint64_t seed, Variant variant) {
  RunConfig c;
  c.model.points_per_block = 256;
  c.model.feature_width = 32;
  c.model.encoder_widths = {32, 64, 64};
  c.epochs = 30;
  c.seed = seed;
  c.scene.seed = seed;
  c.variant = variant;
  c.validate();
  return c;
}

struct Scenes {
  std::vector<PointCloud> train, test;
};

Scenes make_scenes(const RunConfig& c) {
  Scenes s;
  for (std::size_t i = 0; i < 8; ++i) {
    SceneSpec spec = c.scene;
    spec.seed = mix_seed(c.seed, i);
    (i < 4 ? s.train : s.test).push_back(generate_scene(spec));
  }
  return s;
}

struct RunResult {
  double mIoU = 0.0;
  double mWCov = 0.0;
  double train_seconds = 0.0;
  double total_seconds = 0.0;
  std::vector<DimStat> stats;  // in dimension order
  fs::path log, checkpoint;
  std::string predictions;  // concatenated test predictions
};

RunResult run_variant(std::uint64_t seed, Variant variant, const fs::path& dir) {
  const auto start = Clock::now();
  const RunConfig c = desk_config(seed, variant);
  const Scenes scenes = make_scenes(c);
  fs::create_directories(dir);
  RunResult r;
  r.log = dir / "train.log";
  r.checkpoint = dir / "model.ckpt";
  const Checkpoint ckpt = train(c, scenes.train, {r.checkpoint, r.log, std::nullopt});
  r.train_seconds = seconds_since(start);

  const ModelParams params = frozen_params(ckpt.config, ckpt);
  std::vector<double> embeddings;
  for (const auto& scene : scenes.test) {
    const auto inf = infer_scene(params, ckpt.config, c, c.mean_removal(), scene);
    const auto sem = semantic_metrics(inf.sem, scene.sem, c.model.num_classes);
    const auto cov = coverage_metrics(inf.inst, scene.inst, scene.sem, c.model.num_classes);
    r.mIoU += sem.mIoU / static_cast<double>(scenes.test.size());
    r.mWCov += cov.mWCov / static_cast<double>(scenes.test.size());
    embeddings.insert(embeddings.end(), inf.embeddings.data.begin(), inf.embeddings.data.end());
    PointCloud pred = scene;
    pred.sem = inf.sem;
    pred.inst = inf.inst;
    r.predictions += format_points(pred);
  }
  Matrix all(embeddings.size() / c.model.embedding_dim, c.model.embedding_dim);
  all.data = std::move(embeddings);
  r.stats = embedding_stats(all);
  std::sort(r.stats.begin(), r.stats.end(),
            [](const DimStat& a, const DimStat& b) { return a.dim < b.dim; });
  r.total_seconds = seconds_since(start);
  return r;
}

constexpr std::uint64_t kSeeds = 5;
const std::vector<Variant> kAblation{Variant::baseline, Variant::ci_s, Variant::cs_i, Variant::cfsm,
                                     Variant::full};

using RunTable = std::map<std::pair<std::uint64_t, Variant>, RunResult>;

RunTable run_all(const fs::path& root, const std::string& pass) {
  RunTable table;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    for (Variant v : kAblation) {
      const fs::path dir =
          root / pass / ("seed" + std::to_string(seed)) / std::string(to_string(v));
      const RunResult r = run_variant(seed, v, dir);
      std::printf("  [%s] seed %llu %-8s mIoU %.4f mWCov %.4f (%.1f s)\n", pass.c_str(),
                  static_cast<unsigned long long>(seed), std::string(to_string(v)).c_str(), r.mIoU,
                  r.mWCov, r.total_seconds);
      std::fflush(stdout);
      table[{seed, v}] = r;
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// 5. End-to-end training

Outcome end_to_end(const RunResult& r) {
  const bool ok = r.mIoU >= 0.80 && r.mWCov >= 0.75 && r.total_seconds < 600.0;
  return {ok, "3dcfs seed 0: held-out mIoU " + fmt("%.4f", r.mIoU) + ", mWCov " +
                  fmt("%.4f", r.mWCov) + ", " + fmt("%.1f", r.total_seconds) + " s"};
}

// ---------------------------------------------------------------------------
// 6. Ablation direction

Outcome ablation_direction(const RunTable& t) {
  auto mean_of = [&](Variant v, double RunResult::* field) {
    double s = 0.0;
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) s += t.at({seed, v}).*field;
    return s / static_cast<double>(kSeeds);
  };
  const double base_wcov = mean_of(Variant::baseline, &RunResult::mWCov);
  const double csi_wcov = mean_of(Variant::cs_i, &RunResult::mWCov);
  const double base_iou = mean_of(Variant::baseline, &RunResult::mIoU);
  const double cis_iou = mean_of(Variant::ci_s, &RunResult::mIoU);
  std::size_t cfsm_wins = 0, full_wins = 0;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const double cfsm = t.at({seed, Variant::cfsm}).mWCov;
    if (cfsm >= std::max(t.at({seed, Variant::ci_s}).mWCov, t.at({seed, Variant::cs_i}).mWCov))
      ++cfsm_wins;
    if (t.at({seed, Variant::full}).mWCov >= cfsm) ++full_wins;
  }
  const bool a = base_wcov <= csi_wcov, b = base_iou <= cis_iou;
  const bool c = cfsm_wins >= 4, d = full_wins >= 3;
  return {a && b && c && d, std::string("mWCov baseline<=cs_i ") + (a ? "yes" : "no") + " (" +
                                fmt("%.4f", base_wcov) + " vs " + fmt("%.4f", csi_wcov) +
                                "); mIoU baseline<=ci_s " + (b ? "yes" : "no") + " (" +
                                fmt("%.4f", base_iou) + " vs " + fmt("%.4f", cis_iou) +
                                "); cfsm>=max(ci_s,cs_i) " + std::to_string(cfsm_wins) +
                                "/5; 3dcfs>=cfsm " + std::to_string(full_wins) + "/5"};
}

// ---------------------------------------------------------------------------
// 7. Balanced embedding means

double spread(const std::vector<DimStat>& stats) {
  double m = 0.0;
  for (const auto& s : stats) m += s.mean;
  m /= static_cast<double>(stats.size());
  double v = 0.0;
  for (const auto& s : stats) v += (s.mean - m) * (s.mean - m);
  return v / static_cast<double>(stats.size());
}

// Dimensions are paired by index. Parameters are initialized per name, so
// the embedding head of both variants starts from the same weights.
Outcome balanced_means(const RunTable& t) {
  double full_spread = 0.0, base_spread = 0.0;
  double worst_ratio = 1.0;
  std::size_t seeds_halved = 0, dims_within = 0, dims = 0;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto& f = t.at({seed, Variant::full}).stats;
    const auto& b = t.at({seed, Variant::baseline}).stats;
    full_spread += spread(f) / static_cast<double>(kSeeds);
    base_spread += spread(b) / static_cast<double>(kSeeds);
    if (spread(f) <= 0.5 * spread(b)) ++seeds_halved;
    std::printf("  seed %llu spread of means: 3dcfs %.4g baseline %.4g; variances",
                static_cast<unsigned long long>(seed), spread(f), spread(b));
    for (std::size_t d = 0; d < f.size(); ++d) {
      const double ratio = f[d].variance / b[d].variance;
      std::printf(" %.3g/%.3g", f[d].variance, b[d].variance);
      if (std::abs(std::log(ratio)) > std::abs(std::log(worst_ratio))) worst_ratio = ratio;
      ++dims;
      if (ratio <= 2.0 && ratio >= 0.5) ++dims_within;
    }
    std::printf("\n");
  }
  const bool spread_ok = full_spread <= 0.5 * base_spread;
  const bool var_ok = dims_within == dims;
  return {spread_ok && var_ok,
          "mean spread 3dcfs " + fmt("%.4g", full_spread) + " vs baseline " +
              fmt("%.4g", base_spread) + " (ratio " + fmt("%.3f", full_spread / base_spread) +
              ", halved on " + std::to_string(seeds_halved) +
              "/5 seeds); variances within x/2 on " + std::to_string(dims_within) + "/" +
              std::to_string(dims) + " seed-dimension pairs, most extreme ratio " +
              fmt("%.3f", worst_ratio)};
}

// ---------------------------------------------------------------------------
// 8. BlockMerging

PointCloud plane(double x0, double x1, double y0, double y1, double step, double z, int inst) {
  PointCloud c;
  for (double x = x0; x <= x1 + 1e-9; x += step) {
    for (double y = y0; y <= y1 + 1e-9; y += step) {
      c.xyz.push_back({x, y, z});
      c.sem.push_back(0);
      c.inst.push_back(inst);
    }
  }
  return c;
}

void append(PointCloud& to, const PointCloud& from) {
  to.xyz.insert(to.xyz.end(), from.xyz.begin(), from.xyz.end());
  to.sem.insert(to.sem.end(), from.sem.begin(), from.sem.end());
  to.inst.insert(to.inst.end(), from.inst.begin(), from.inst.end());
}

std::vector<int> local_ids(const PointCloud& scene, const Block& b) {
  std::vector<int> out;
  for (auto r : b.indices) out.push_back(scene.inst[r]);
  return densify_ids(out);
}

Outcome block_merging_cases() {
  // A raised slab spans x in [0.61, 1.39] and so lies in all three
  // overlapping 1 m blocks along x.
  PointCloud straddle = plane(0.01, 1.99, 0.01, 0.99, 0.04, 0.0, 0);
  append(straddle, plane(0.61, 1.39, 0.21, 0.79, 0.04, 0.5, 1));
  const auto blocks = split_blocks(straddle, 1.0, 0.5);
  MergeGrid grid;
  std::vector<int> global(straddle.size(), -1);
  for (const auto& b : blocks) {
    const auto g = block_merging(grid, straddle, b.indices, local_ids(straddle, b));
    for (std::size_t r = 0; r < g.size(); ++r) global[b.indices[r]] = g[r];
  }
  std::set<int> slab_ids;
  for (std::size_t i = 0; i < straddle.size(); ++i)
    if (straddle.inst[i] == 1) slab_ids.insert(global[i]);
  const bool straddle_ok = blocks.size() == 3 && slab_ids.size() == 1 && grid.next_id() == 2 &&
                           oracle::adjusted_rand_index(global, straddle.inst) == 1.0;

  // Two non-overlapping blocks with 2 and 3 instances.
  PointCloud disjoint = plane(0.05, 0.45, 0.05, 0.95, 0.1, 0.0, 0);
  append(disjoint, plane(0.55, 0.95, 0.05, 0.95, 0.1, 0.0, 1));
  append(disjoint, plane(1.15, 1.95, 0.05, 0.45, 0.1, 0.0, 2));
  append(disjoint, plane(1.15, 1.95, 0.55, 0.95, 0.1, 0.0, 3));
  append(disjoint, plane(1.35, 1.65, 0.35, 0.65, 0.1, 0.3, 4));
  const auto halves = split_blocks(disjoint, 1.0, 1.0);
  MergeGrid grid2;
  std::size_t local_total = 0;
  for (const auto& b : halves) {
    const auto local = local_ids(disjoint, b);
    local_total += oracle::distinct(local);
    block_merging(grid2, disjoint, b.indices, local);
  }
  const bool disjoint_ok = halves.size() == 2 && local_total == 5 && grid2.next_id() == 5;
  return {straddle_ok && disjoint_ok,
          "straddling slab ids " + std::to_string(slab_ids.size()) + ", global ids " +
              std::to_string(grid.next_id()) + "; disjoint blocks " + std::to_string(local_total) +
              " local -> " + std::to_string(grid2.next_id()) + " global"};
}

// ---------------------------------------------------------------------------
// 9. Determinism

Outcome determinism(const RunTable& first, const RunTable& second) {
  std::size_t same = 0;
  std::string first_diff;
  for (const auto& [key, a] : first) {
    const auto& b = second.at(key);
    const bool eq = read_file(a.log) == read_file(b.log) &&
                    read_file(a.checkpoint) == read_file(b.checkpoint) &&
                    a.predictions == b.predictions && a.mIoU == b.mIoU && a.mWCov == b.mWCov &&
                    format_embedding_stats(a.stats) == format_embedding_stats(b.stats);
    if (eq) {
      ++same;
    } else if (first_diff.empty()) {
      first_diff = "seed " + std::to_string(key.first) + " " + std::string(to_string(key.second));
    }
  }
  return {same == first.size(),
          std::to_string(same) + "/" + std::to_string(first.size()) +
              " runs reproduce logs, checkpoints, predictions and statistics bitwise" +
              (first_diff.empty() ? "" : "; first difference " + first_diff)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  fs::path workdir = fs::temp_directory_path() / "cfs3d_acceptance";
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      std::istringstream list(argv[++i]);
      std::string item;
      while (std::getline(list, item, ',')) only.insert(std::stoi(item));
    } else if (std::strcmp(argv[i], "--workdir") == 0 && i + 1 < argc) {
      workdir = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--only N[,N...]] [--workdir DIR]\n");
      return 2;
    }
  }
  auto wanted = [&](int n) { return only.empty() || only.count(n) > 0; };

  const char* names[] = {"",
                         "gradient suite",
                         "equilibrium-loss identities",
                         "clustering recovery",
                         "metrics oracle",
                         "end-to-end training",
                         "ablation direction",
                         "balanced embedding means",
                         "block merging",
                         "determinism"};
  std::map<int, Outcome> results;
  auto report = [&](int n, Outcome o) {
    std::printf("criterion %d %s: %s (%s)\n", n, names[n], o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
    results[n] = std::move(o);
  };

  try {
    if (wanted(1)) report(1, gradient_suite());
    if (wanted(2)) report(2, equilibrium_identities());
    if (wanted(3)) report(3, clustering_recovery());
    if (wanted(4)) report(4, metrics_oracle());
    if (wanted(8)) report(8, block_merging_cases());
    if (wanted(5) || wanted(6) || wanted(7) || wanted(9)) {
      fs::remove_all(workdir);
      const RunTable first = run_all(workdir, "first");
      if (wanted(5)) report(5, end_to_end(first.at({0, Variant::full})));
      if (wanted(6)) report(6, ablation_direction(first));
      if (wanted(7)) report(7, balanced_means(first));
      if (wanted(9)) report(9, determinism(first, run_all(workdir, "second")));
    }
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 1;
  }

  const bool all =
      std::all_of(results.begin(), results.end(), [](const auto& kv) { return kv.second.pass; });
  std::printf("%zu/%zu criteria passed\n",
              static_cast<std::size_t>(std::count_if(
                  results.begin(), results.end(), [](const auto& kv) { return kv.second.pass; })),
              results.size());
  return all ? 0 : 1;
}
