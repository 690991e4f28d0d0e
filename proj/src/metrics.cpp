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

#include "cfs3d/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

#include "cfs3d/error.hpp"

namespace cfs3d {
namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DataError(std::string(what) + ": length mismatch " + std::to_string(a) + " vs " +
                    std::to_string(b));
  }
}

void check_classes(std::span<const int> labels, std::size_t num_classes, const char* what) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw DataError(std::string(what) + " class " + std::to_string(labels[i]) +
                      " out of range at point " + std::to_string(i));
    }
  }
}

struct InstanceTable {
  std::vector<int> ids;              // ascending instance ids
  std::map<int, std::size_t> index;  // id -> position in ids
  std::vector<std::size_t> sizes;
  std::vector<int> cls;  // mode of the class labels, ties to lower
};

InstanceTable tabulate(std::span<const int> inst, std::span<const int> sem,
                       std::size_t num_classes) {
  InstanceTable t;
  std::map<int, std::vector<std::size_t>> hist;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    auto& h = hist[inst[i]];
    if (h.empty()) h.assign(num_classes, 0);
    ++h[static_cast<std::size_t>(sem[i])];
  }
  for (const auto& [id, h] : hist) {
    t.index[id] = t.ids.size();
    t.ids.push_back(id);
    std::size_t total = 0;
    for (auto c : h) total += c;
    t.sizes.push_back(total);
    t.cls.push_back(static_cast<int>(std::max_element(h.begin(), h.end()) - h.begin()));
  }
  return t;
}

// Intersection counts keyed by (gt index, pred index).
std::map<std::pair<std::size_t, std::size_t>, std::size_t> intersections(
    std::span<const int> pred_inst, std::span<const int> gt_inst, const InstanceTable& pred,
    const InstanceTable& gt) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> out;
  for (std::size_t i = 0; i < gt_inst.size(); ++i)
    ++out[{gt.index.at(gt_inst[i]), pred.index.at(pred_inst[i])}];
  return out;
}

double iou_of(std::size_t inter, std::size_t a, std::size_t b) {
  return static_cast<double>(inter) / static_cast<double>(a + b - inter);
}

}  // namespace

SemReport semantic_metrics(std::span<const int> pred, std::span<const int> gt,
                           std::size_t num_classes) {
  check_lengths(pred.size(), gt.size(), "semantic_metrics");
  if (gt.empty()) throw DataError("semantic_metrics: no points");
  check_classes(pred, num_classes, "predicted");
  check_classes(gt, num_classes, "ground-truth");

  std::vector<std::size_t> tp(num_classes, 0), gt_count(num_classes, 0), pred_count(num_classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const auto g = static_cast<std::size_t>(gt[i]), p = static_cast<std::size_t>(pred[i]);
    ++gt_count[g];
    ++pred_count[p];
    if (g == p) {
      ++tp[g];
      ++correct;
    }
  }
  SemReport r;
  r.oAcc = static_cast<double>(correct) / static_cast<double>(gt.size());
  r.acc.assign(num_classes, 0.0);
  r.iou.assign(num_classes, 0.0);
  r.present.assign(num_classes, false);
  std::size_t classes = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (gt_count[c] == 0) continue;
    r.present[c] = true;
    ++classes;
    r.acc[c] = static_cast<double>(tp[c]) / static_cast<double>(gt_count[c]);
    r.iou[c] =
        static_cast<double>(tp[c]) / static_cast<double>(gt_count[c] + pred_count[c] - tp[c]);
    r.mAcc += r.acc[c];
    r.mIoU += r.iou[c];
  }
  r.mAcc /= static_cast<double>(classes);
  r.mIoU /= static_cast<double>(classes);
  return r;
}

CoverageResult coverage_metrics(std::span<const int> pred_inst, std::span<const int> gt_inst,
                                std::span<const int> gt_sem, std::size_t num_classes) {
  check_lengths(pred_inst.size(), gt_inst.size(), "coverage_metrics");
  check_lengths(gt_sem.size(), gt_inst.size(), "coverage_metrics");
  if (gt_inst.empty()) throw DataError("coverage_metrics: no ground-truth instances");
  check_classes(gt_sem, num_classes, "ground-truth");

  const std::vector<int> zeros(pred_inst.size(), 0);
  const InstanceTable gt = tabulate(gt_inst, gt_sem, num_classes);
  const InstanceTable pred = tabulate(pred_inst, zeros, 1);
  const auto inter = intersections(pred_inst, gt_inst, pred, gt);

  std::vector<double> best(gt.ids.size(), 0.0);
  for (const auto& [key, count] : inter) {
    const auto [g, p] = key;
    best[g] = std::max(best[g], iou_of(count, gt.sizes[g], pred.sizes[p]));
  }

  CoverageResult r;
  r.cov.assign(num_classes, 0.0);
  r.wcov.assign(num_classes, 0.0);
  r.present.assign(num_classes, false);
  std::vector<std::size_t> members(num_classes, 0), mass(num_classes, 0);
  for (std::size_t g = 0; g < gt.ids.size(); ++g) {
    const auto c = static_cast<std::size_t>(gt.cls[g]);
    ++members[c];
    mass[c] += gt.sizes[g];
  }
  for (std::size_t g = 0; g < gt.ids.size(); ++g) {
    const auto c = static_cast<std::size_t>(gt.cls[g]);
    r.cov[c] += best[g];
    r.wcov[c] += static_cast<double>(gt.sizes[g]) / static_cast<double>(mass[c]) * best[g];
  }
  std::size_t classes = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (members[c] == 0) continue;
    r.present[c] = true;
    ++classes;
    r.cov[c] /= static_cast<double>(members[c]);
    r.mCov += r.cov[c];
    r.mWCov += r.wcov[c];
  }
  r.mCov /= static_cast<double>(classes);
  r.mWCov /= static_cast<double>(classes);
  return r;
}

std::size_t greedy_match(const std::vector<std::vector<double>>& iou, double iou_threshold) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  for (std::size_t p = 0; p < iou.size(); ++p) {
    for (std::size_t g = 0; g < iou[p].size(); ++g) {
      if (iou[p][g] > iou_threshold) candidates.emplace_back(iou[p][g], p, g);
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    return std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(std::get<1>(b), std::get<2>(b));
  });
  std::set<std::size_t> used_p, used_g;
  std::size_t matches = 0;
  for (const auto& [v, p, g] : candidates) {
    if (used_p.count(p) || used_g.count(g)) continue;
    used_p.insert(p);
    used_g.insert(g);
    ++matches;
  }
  return matches;
}

double mask_iou(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  const std::set<std::size_t> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::size_t inter = 0;
  for (auto x : sa) inter += sb.count(x);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::pair<double, double> mask_prec_rec(const std::vector<std::vector<std::size_t>>& preds,
                                        const std::vector<std::vector<std::size_t>>& gts,
                                        double iou_threshold) {
  std::vector<std::vector<double>> iou(preds.size(), std::vector<double>(gts.size(), 0.0));
  for (std::size_t p = 0; p < preds.size(); ++p)
    for (std::size_t g = 0; g < gts.size(); ++g) iou[p][g] = mask_iou(preds[p], gts[g]);
  const auto tp = static_cast<double>(greedy_match(iou, iou_threshold));
  return {preds.empty() ? 0.0 : tp / static_cast<double>(preds.size()),
          gts.empty() ? 0.0 : tp / static_cast<double>(gts.size())};
}

PrecRecResult prec_rec(std::span<const int> pred_inst, std::span<const int> gt_inst,
                       std::span<const int> pred_sem, std::span<const int> gt_sem,
                       std::size_t num_classes, double iou_threshold) {
  check_lengths(pred_inst.size(), gt_inst.size(), "prec_rec");
  check_lengths(pred_sem.size(), gt_inst.size(), "prec_rec");
  check_lengths(gt_sem.size(), gt_inst.size(), "prec_rec");
  if (gt_inst.empty()) throw DataError("prec_rec: no ground-truth instances");
  check_classes(pred_sem, num_classes, "predicted");
  check_classes(gt_sem, num_classes, "ground-truth");

  const InstanceTable gt = tabulate(gt_inst, gt_sem, num_classes);
  const InstanceTable pred = tabulate(pred_inst, pred_sem, num_classes);
  const auto inter = intersections(pred_inst, gt_inst, pred, gt);

  PrecRecResult r;
  r.prec.assign(num_classes, 0.0);
  r.rec.assign(num_classes, 0.0);
  r.present.assign(num_classes, false);
  std::size_t classes = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<std::size_t> gs, ps;
    for (std::size_t g = 0; g < gt.ids.size(); ++g)
      if (static_cast<std::size_t>(gt.cls[g]) == c) gs.push_back(g);
    if (gs.empty()) continue;
    for (std::size_t p = 0; p < pred.ids.size(); ++p)
      if (static_cast<std::size_t>(pred.cls[p]) == c) ps.push_back(p);
    std::vector<std::vector<double>> iou(ps.size(), std::vector<double>(gs.size(), 0.0));
    for (std::size_t a = 0; a < ps.size(); ++a) {
      for (std::size_t b = 0; b < gs.size(); ++b) {
        const auto it = inter.find({gs[b], ps[a]});
        if (it != inter.end()) iou[a][b] = iou_of(it->second, gt.sizes[gs[b]], pred.sizes[ps[a]]);
      }
    }
    const auto tp = static_cast<double>(greedy_match(iou, iou_threshold));
    r.present[c] = true;
    ++classes;
    r.prec[c] = ps.empty() ? 0.0 : tp / static_cast<double>(ps.size());
    r.rec[c] = tp / static_cast<double>(gs.size());
    r.mPrec += r.prec[c];
    r.mRec += r.rec[c];
  }
  r.mPrec /= static_cast<double>(classes);
  r.mRec /= static_cast<double>(classes);
  return r;
}

InsReport instance_metrics(std::span<const int> pred_inst, std::span<const int> gt_inst,
                           std::span<const int> pred_sem, std::span<const int> gt_sem,
                           std::size_t num_classes, double iou_threshold) {
  const CoverageResult cov = coverage_metrics(pred_inst, gt_inst, gt_sem, num_classes);
  const PrecRecResult pr =
      prec_rec(pred_inst, gt_inst, pred_sem, gt_sem, num_classes, iou_threshold);
  return InsReport{cov.mCov, cov.mWCov, pr.mPrec, pr.mRec,    cov.cov,
                   cov.wcov, pr.prec,   pr.rec,   cov.present};
}

std::string format_report(const SemReport& sem, const InsReport& ins,
                          const std::vector<std::string>& class_names) {
  std::string out;
  auto put = [&out](const std::string& key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    out += key + "=" + buf + "\n";
  };
  put("oAcc", sem.oAcc);
  put("mAcc", sem.mAcc);
  put("mIoU", sem.mIoU);
  put("mCov", ins.mCov);
  put("mWCov", ins.mWCov);
  put("mPrec", ins.mPrec);
  put("mRec", ins.mRec);
  for (std::size_t c = 0; c < sem.present.size(); ++c) {
    const std::string name =
        "per_class." + (c < class_names.size() ? class_names[c] : "class" + std::to_string(c));
    if (sem.present[c]) {
      put(name + ".acc", sem.acc[c]);
      put(name + ".iou", sem.iou[c]);
    }
    if (c < ins.present.size() && ins.present[c]) {
      put(name + ".cov", ins.cov[c]);
      put(name + ".wcov", ins.wcov[c]);
      put(name + ".prec", ins.prec[c]);
      put(name + ".rec", ins.rec[c]);
    }
  }
  return out;
}

}  // namespace cfs3d
