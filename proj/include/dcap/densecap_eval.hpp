#pragma once

#include <map>
#include <string>
#include <vector>

#include "dcap/assignment.hpp"
#include "dcap/scene.hpp"
#include "dcap/textmetrics.hpp"

namespace dcap {

enum class CaptionMetric { kCiderD, kBleu4, kMeteorLite, kRougeL };

// Short column label: C, B-4, M, R.
std::string metric_label(CaptionMetric metric);
// Stable key used in JSON reports: cider, bleu4, meteor, rouge.
std::string metric_key(CaptionMetric metric);

enum class ApInterpolation { kEveryPoint, kElevenPoint };

struct EvalConfig {
  std::vector<double> iou_thresholds{0.25, 0.5};
  double nms_threshold = 0.25;
  bool apply_nms = true;
  std::vector<CaptionMetric> metrics{CaptionMetric::kCiderD,
                                     CaptionMetric::kBleu4,
                                     CaptionMetric::kMeteorLite,
                                     CaptionMetric::kRougeL};
  ApInterpolation ap_interpolation = ApInterpolation::kEveryPoint;
  int threads = 1;

  bool wants(CaptionMetric metric) const;
};

// One scene's evaluation inputs: annotations plus (possibly duplicate-heavy)
// proposals. Predictions are filtered by NMS inside evaluate() when enabled.
struct EvalScene {
  std::string scene_id;
  InstanceSet gts;
  PredictionSet preds;
};

struct DetectionSummary {
  std::map<int, double> per_class_ap;  // over classes present in gt
  double map = 0.0;
  double ar = 0.0;
};

struct MetricReport {
  // metric key -> iou threshold -> score
  std::map<std::string, std::map<double, double>> m_at_kiou;
  std::map<double, DetectionSummary> detection;
  std::size_t num_instances = 0;
  std::size_t num_proposals_kept = 0;
  std::size_t num_scenes = 0;
};

struct AssignedProposal {
  int proposal = -1;  // -1 = unassigned
  double iou = 0.0;
};

// Greedy matching without replacement: repeatedly assign the globally
// largest-IoU (instance, proposal) pair among those unassigned on both
// sides; ties break on lower instance then proposal index. Instances whose
// best remaining IoU is zero stay unassigned.
std::vector<AssignedProposal> assign_instances(const PredictionSet& preds,
                                               const InstanceSet& gts);

// (1/N) * sum_i metric(caption_i, corpus_i) * 1{iou_i >= k} over one
// scene's instances. df is required for CIDEr-D.
double m_at_kiou(const std::vector<AssignedProposal>& assigned,
                 const PredictionSet& preds, const InstanceSet& gts,
                 CaptionMetric metric, double k, const DfTable* df);

// Detection AP over all scenes at IoU threshold k. Proposals take their
// argmax semantic class and are ranked by confidence; each greedily claims
// the unmatched same-class gt with the highest IoU >= k in its scene.
DetectionSummary detection_ap(const std::vector<EvalScene>& scenes,
                              int num_classes, double k,
                              ApInterpolation interpolation);

// Fraction of gt objects covered by a same-class proposal with IoU >= k,
// matched greedily by IoU.
double detection_ar(const std::vector<EvalScene>& scenes, int num_classes,
                    double k);

// Full protocol: optional NMS, greedy instance assignment, m@kIoU for every
// metric and threshold, and detection AP/AR. Deterministic, including under
// config.threads > 1. df may be null when CIDEr-D is not requested.
MetricReport evaluate(const std::vector<EvalScene>& scenes, int num_classes,
                      const EvalConfig& config, const DfTable* df);

// Stable-ordered JSON (sorted keys, numbers at 9 significant digits).
std::string report_to_json(const MetricReport& report,
                           const std::vector<std::string>& class_names);
// Aligned table with one column per metric/threshold, plus detection rows.
std::string report_to_text(const MetricReport& report,
                           const std::vector<std::string>& class_names);

}  // namespace dcap
