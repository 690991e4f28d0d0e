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

#pragma once

#include <span>
#include <string>
#include <vector>

namespace cfs3d {

/// Per-class arrays have one entry per class; entries of classes absent from
/// the ground truth are 0 and flagged false in present.
struct SemReport {
  double oAcc = 0.0;
  double mAcc = 0.0;
  double mIoU = 0.0;
  std::vector<double> acc;
  std::vector<double> iou;
  std::vector<bool> present;
};

struct InsReport {
  double mCov = 0.0;
  double mWCov = 0.0;
  double mPrec = 0.0;
  double mRec = 0.0;
  std::vector<double> cov;
  std::vector<double> wcov;
  std::vector<double> prec;
  std::vector<double> rec;
  std::vector<bool> present;  // class has at least one ground-truth instance
};

SemReport semantic_metrics(std::span<const int> pred, std::span<const int> gt,
                           std::size_t num_classes);

struct CoverageResult {
  double mCov = 0.0;
  double mWCov = 0.0;
  std::vector<double> cov;
  std::vector<double> wcov;
  std::vector<bool> present;
};

/// For each ground-truth instance, the best IoU against any predicted
/// instance. Cov averages those per class, WCov weights them by instance size
/// within the class; the m-prefixed values average over classes that have
/// ground-truth instances. An instance's class is the mode of its labels.
CoverageResult coverage_metrics(std::span<const int> pred_inst, std::span<const int> gt_inst,
                                std::span<const int> gt_sem, std::size_t num_classes);

struct PrecRecResult {
  double mPrec = 0.0;
  double mRec = 0.0;
  std::vector<double> prec;
  std::vector<double> rec;
  std::vector<bool> present;
};

/// Per class, predicted instances are matched one-to-one to ground-truth
/// instances of the same class greedily by descending IoU; a match needs
/// IoU strictly above iou_threshold.
PrecRecResult prec_rec(std::span<const int> pred_inst, std::span<const int> gt_inst,
                       std::span<const int> pred_sem, std::span<const int> gt_sem,
                       std::size_t num_classes, double iou_threshold = 0.5);

/// Greedy one-to-one matching count over an IoU table (rows: predictions,
/// columns: ground truth). Ties are broken by lower row, then lower column.
std::size_t greedy_match(const std::vector<std::vector<double>>& iou, double iou_threshold);

/// IoU of two index sets (need not be sorted; duplicates are ignored).
double mask_iou(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// Precision and recall of possibly overlapping predicted masks against
/// ground-truth masks of a single class.
std::pair<double, double> mask_prec_rec(const std::vector<std::vector<std::size_t>>& preds,
                                        const std::vector<std::vector<std::size_t>>& gts,
                                        double iou_threshold = 0.5);

InsReport instance_metrics(std::span<const int> pred_inst, std::span<const int> gt_inst,
                           std::span<const int> pred_sem, std::span<const int> gt_sem,
                           std::size_t num_classes, double iou_threshold = 0.5);

/// Flat key=value document: oAcc, mAcc, mIoU, mCov, mWCov, mPrec, mRec, then
/// per_class.<name>.<metric> for classes present in the ground truth.
std::string format_report(const SemReport& sem, const InsReport& ins,
                          const std::vector<std::string>& class_names);

}  // namespace cfs3d
