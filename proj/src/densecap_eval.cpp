#include "dcap/densecap_eval.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "dcap/error.hpp"
#include "dcap/jsonutil.hpp"

namespace dcap {

std::string metric_label(CaptionMetric metric) {
  switch (metric) {
    case CaptionMetric::kCiderD: return "C";
    case CaptionMetric::kBleu4: return "B-4";
    case CaptionMetric::kMeteorLite: return "M";
    case CaptionMetric::kRougeL: return "R";
  }
  return "?";
}

std::string metric_key(CaptionMetric metric) {
  switch (metric) {
    case CaptionMetric::kCiderD: return "cider";
    case CaptionMetric::kBleu4: return "bleu4";
    case CaptionMetric::kMeteorLite: return "meteor";
    case CaptionMetric::kRougeL: return "rouge";
  }
  return "?";
}

bool EvalConfig::wants(CaptionMetric metric) const {
  return std::find(metrics.begin(), metrics.end(), metric) != metrics.end();
}

namespace {

constexpr CaptionMetric kCanonicalOrder[] = {
    CaptionMetric::kCiderD, CaptionMetric::kBleu4, CaptionMetric::kMeteorLite,
    CaptionMetric::kRougeL};

double score_caption(CaptionMetric metric, const TokenSeq& candidate,
                     const std::vector<TokenSeq>& refs, const DfTable* df) {
  switch (metric) {
    case CaptionMetric::kCiderD:
      if (df == nullptr) {
        throw std::invalid_argument("CIDEr-D requires a prebuilt DfTable");
      }
      return cider_d(candidate, refs, *df);
    case CaptionMetric::kBleu4: return bleu4(candidate, refs);
    case CaptionMetric::kMeteorLite: return meteor_lite(candidate, refs);
    case CaptionMetric::kRougeL: return rougel(candidate, refs);
  }
  return 0.0;
}

int predicted_class(const Prediction& pred, int num_classes) {
  int best = 0;
  for (int c = 1; c < num_classes; ++c) {
    if (pred.class_probs[c] > pred.class_probs[best]) best = c;
  }
  return best;
}

std::vector<TokenSeq> tokenized_corpus(const Instance& gt) {
  std::vector<TokenSeq> refs;
  refs.reserve(gt.captions.size());
  for (const auto& caption : gt.captions) refs.push_back(tokenize(caption));
  return refs;
}

}  // namespace

std::vector<AssignedProposal> assign_instances(const PredictionSet& preds,
                                               const InstanceSet& gts) {
  const std::size_t ni = gts.size(), np = preds.size();
  std::vector<AssignedProposal> out(ni);
  if (ni == 0 || np == 0) return out;

  std::vector<double> iou(ni * np);
  for (std::size_t i = 0; i < ni; ++i) {
    for (std::size_t p = 0; p < np; ++p) {
      iou[i * np + p] = iou3d(gts[i].box, preds[p].box);
    }
  }
  std::vector<char> inst_done(ni, 0), prop_done(np, 0);
  for (std::size_t round = 0; round < std::min(ni, np); ++round) {
    double best = 0.0;
    int best_i = -1, best_p = -1;
    for (std::size_t i = 0; i < ni; ++i) {
      if (inst_done[i]) continue;
      for (std::size_t p = 0; p < np; ++p) {
        if (prop_done[p]) continue;
        if (iou[i * np + p] > best) {
          best = iou[i * np + p];
          best_i = static_cast<int>(i);
          best_p = static_cast<int>(p);
        }
      }
    }
    if (best_i < 0) break;  // only zero-IoU pairs remain
    inst_done[best_i] = 1;
    prop_done[best_p] = 1;
    out[best_i] = {best_p, best};
  }
  return out;
}

double m_at_kiou(const std::vector<AssignedProposal>& assigned,
                 const PredictionSet& preds, const InstanceSet& gts,
                 CaptionMetric metric, double k, const DfTable* df) {
  if (assigned.size() != gts.size()) {
    throw std::invalid_argument("m_at_kiou: assignment size != instance count");
  }
  if (gts.size() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (assigned[i].proposal < 0 || assigned[i].iou < k) continue;
    if (gts[i].captions.empty()) {
      throw std::invalid_argument("m_at_kiou: instance without caption corpus");
    }
    const TokenSeq candidate = tokenize(preds[assigned[i].proposal].caption);
    sum += score_caption(metric, candidate, tokenized_corpus(gts[i]), df);
  }
  return sum / static_cast<double>(gts.size());
}

DetectionSummary detection_ap(const std::vector<EvalScene>& scenes,
                              int num_classes, double k,
                              ApInterpolation interpolation) {
  struct Ranked {
    double confidence;
    int scene, proposal, klass;
  };
  std::vector<Ranked> ranked;
  std::vector<int> gt_per_class(num_classes, 0);
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    for (std::size_t p = 0; p < scenes[s].preds.size(); ++p) {
      const Prediction& pred = scenes[s].preds[p];
      ranked.push_back({pred.confidence(), static_cast<int>(s),
                        static_cast<int>(p), predicted_class(pred, num_classes)});
    }
    for (const Instance& gt : scenes[s].gts.instances) {
      ++gt_per_class[gt.class_id];
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.scene != b.scene) return a.scene < b.scene;
    return a.proposal < b.proposal;
  });

  DetectionSummary out;
  double ap_sum = 0.0;
  int classes_present = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (gt_per_class[c] == 0) continue;
    ++classes_present;

    // greedy matching in rank order
    std::vector<std::vector<char>> gt_used(scenes.size());
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      gt_used[s].assign(scenes[s].gts.size(), 0);
    }
    std::vector<char> is_tp;
    for (const Ranked& r : ranked) {
      if (r.klass != c) continue;
      const EvalScene& scene = scenes[r.scene];
      int best_gt = -1;
      double best_iou = 0.0;
      for (std::size_t g = 0; g < scene.gts.size(); ++g) {
        if (gt_used[r.scene][g] || scene.gts[g].class_id != c) continue;
        const double v = iou3d(scene.gts[g].box, scene.preds[r.proposal].box);
        if (v > best_iou) {
          best_iou = v;
          best_gt = static_cast<int>(g);
        }
      }
      if (best_gt >= 0 && best_iou >= k) {
        gt_used[r.scene][best_gt] = 1;
        is_tp.push_back(1);
      } else {
        is_tp.push_back(0);
      }
    }

    const int n_dets = static_cast<int>(is_tp.size());
    std::vector<double> precision(n_dets), recall(n_dets);
    int tp = 0;
    for (int i = 0; i < n_dets; ++i) {
      tp += is_tp[i];
      precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
      recall[i] = static_cast<double>(tp) / static_cast<double>(gt_per_class[c]);
    }
    // precision envelope from the right
    for (int i = n_dets - 2; i >= 0; --i) {
      precision[i] = std::max(precision[i], precision[i + 1]);
    }

    double ap = 0.0;
    if (interpolation == ApInterpolation::kEveryPoint) {
      double prev_recall = 0.0;
      for (int i = 0; i < n_dets; ++i) {
        if (!is_tp[i]) continue;
        ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
      }
    } else {
      for (int step = 0; step <= 10; ++step) {
        const double r = 0.1 * step;
        double best = 0.0;
        for (int i = 0; i < n_dets; ++i) {
          if (recall[i] >= r - 1e-12) {
            best = precision[i];  // envelope is non-increasing
            break;
          }
        }
        ap += best / 11.0;
      }
    }
    out.per_class_ap[c] = ap;
    ap_sum += ap;
  }
  out.map = classes_present > 0 ? ap_sum / classes_present : 0.0;
  return out;
}

double detection_ar(const std::vector<EvalScene>& scenes, int num_classes,
                    double k) {
  std::size_t total_gt = 0, matched = 0;
  for (const EvalScene& scene : scenes) {
    total_gt += scene.gts.size();
    for (int c = 0; c < num_classes; ++c) {
      std::vector<int> gt_idx, prop_idx;
      for (std::size_t g = 0; g < scene.gts.size(); ++g) {
        if (scene.gts[g].class_id == c) gt_idx.push_back(static_cast<int>(g));
      }
      if (gt_idx.empty()) continue;
      for (std::size_t p = 0; p < scene.preds.size(); ++p) {
        if (predicted_class(scene.preds[p], num_classes) == c) {
          prop_idx.push_back(static_cast<int>(p));
        }
      }
      // greedy by IoU without replacement
      std::vector<char> g_done(gt_idx.size(), 0), p_done(prop_idx.size(), 0);
      while (true) {
        double best = 0.0;
        int bg = -1, bp = -1;
        for (std::size_t gi = 0; gi < gt_idx.size(); ++gi) {
          if (g_done[gi]) continue;
          for (std::size_t pi = 0; pi < prop_idx.size(); ++pi) {
            if (p_done[pi]) continue;
            const double v =
                iou3d(scene.gts[gt_idx[gi]].box, scene.preds[prop_idx[pi]].box);
            if (v > best) {
              best = v;
              bg = static_cast<int>(gi);
              bp = static_cast<int>(pi);
            }
          }
        }
        if (bg < 0 || best < k) break;
        g_done[bg] = 1;
        p_done[bp] = 1;
        ++matched;
      }
    }
  }
  return total_gt == 0 ? 0.0 : static_cast<double>(matched) /
                                   static_cast<double>(total_gt);
}

namespace {

struct SceneOutcome {
  PredictionSet kept;
  std::vector<AssignedProposal> assigned;
  // canonical metric order; only selected metrics filled
  std::array<std::vector<double>, 4> metric_values;
};

SceneOutcome evaluate_scene(const EvalScene& scene, int num_classes,
                            const EvalConfig& config, const DfTable* df,
                            double min_threshold) {
  scene.preds.validate(num_classes);
  for (const Instance& gt : scene.gts.instances) {
    if (gt.class_id < 0 || gt.class_id >= num_classes) {
      throw SchemaError("scene " + scene.scene_id + ": gt class out of range");
    }
    if (gt.captions.empty()) {
      throw SchemaError("scene " + scene.scene_id + ": instance " +
                        std::to_string(gt.id) + " has no captions");
    }
    if (!gt.box.valid()) {
      throw SchemaError("scene " + scene.scene_id + ": invalid gt box");
    }
  }

  SceneOutcome out;
  if (config.apply_nms) {
    std::vector<Box3D> boxes;
    std::vector<double> scores;
    boxes.reserve(scene.preds.size());
    for (const Prediction& p : scene.preds.predictions) {
      boxes.push_back(p.box);
      scores.push_back(p.confidence());
    }
    for (int idx : nms(boxes, scores, config.nms_threshold)) {
      out.kept.predictions.push_back(scene.preds[idx]);
    }
  } else {
    out.kept = scene.preds;
  }

  out.assigned = assign_instances(out.kept, scene.gts);
  for (int m = 0; m < 4; ++m) {
    const CaptionMetric metric = kCanonicalOrder[m];
    if (!config.wants(metric)) continue;
    out.metric_values[m].assign(scene.gts.size(), 0.0);
    for (std::size_t i = 0; i < scene.gts.size(); ++i) {
      const AssignedProposal& a = out.assigned[i];
      if (a.proposal < 0 || a.iou < min_threshold) continue;
      const TokenSeq candidate = tokenize(out.kept[a.proposal].caption);
      out.metric_values[m][i] = score_caption(
          metric, candidate, tokenized_corpus(scene.gts[i]), df);
    }
  }
  return out;
}

}  // namespace

MetricReport evaluate(const std::vector<EvalScene>& scenes, int num_classes,
                      const EvalConfig& config, const DfTable* df) {
  if (config.iou_thresholds.empty()) {
    throw std::invalid_argument("evaluate: at least one IoU threshold required");
  }
  for (double k : config.iou_thresholds) {
    if (!(k > 0.0 && k <= 1.0)) {
      throw std::invalid_argument("evaluate: IoU thresholds must be in (0,1]");
    }
  }
  if (config.wants(CaptionMetric::kCiderD) && df == nullptr) {
    throw std::invalid_argument("evaluate: CIDEr-D requested without a DfTable");
  }
  const double min_threshold =
      *std::min_element(config.iou_thresholds.begin(), config.iou_thresholds.end());

  std::vector<SceneOutcome> outcomes(scenes.size());
  const int threads = std::max(1, config.threads);
  if (threads == 1 || scenes.size() <= 1) {
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      outcomes[s] = evaluate_scene(scenes[s], num_classes, config, df, min_threshold);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
      while (true) {
        const std::size_t s = next.fetch_add(1);
        if (s >= scenes.size()) return;
        try {
          outcomes[s] =
              evaluate_scene(scenes[s], num_classes, config, df, min_threshold);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  MetricReport report;
  report.num_scenes = scenes.size();
  std::size_t total_instances = 0;
  for (const EvalScene& scene : scenes) total_instances += scene.gts.size();
  report.num_instances = total_instances;
  for (const SceneOutcome& o : outcomes) {
    report.num_proposals_kept += o.kept.size();
  }

  for (int m = 0; m < 4; ++m) {
    const CaptionMetric metric = kCanonicalOrder[m];
    if (!config.wants(metric)) continue;
    for (double k : config.iou_thresholds) {
      double sum = 0.0;
      for (std::size_t s = 0; s < scenes.size(); ++s) {
        const SceneOutcome& o = outcomes[s];
        for (std::size_t i = 0; i < o.metric_values[m].size(); ++i) {
          if (o.assigned[i].proposal >= 0 && o.assigned[i].iou >= k) {
            sum += o.metric_values[m][i];
          }
        }
      }
      report.m_at_kiou[metric_key(metric)][k] =
          total_instances == 0 ? 0.0 : sum / static_cast<double>(total_instances);
    }
  }

  std::vector<EvalScene> filtered(scenes.size());
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    filtered[s].scene_id = scenes[s].scene_id;
    filtered[s].gts = scenes[s].gts;
    filtered[s].preds = outcomes[s].kept;
  }
  for (double k : config.iou_thresholds) {
    DetectionSummary summary =
        detection_ap(filtered, num_classes, k, config.ap_interpolation);
    summary.ar = detection_ar(filtered, num_classes, k);
    report.detection[k] = std::move(summary);
  }
  return report;
}

namespace {

std::string format_threshold(double k) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", k);
  return buf;
}

}  // namespace

std::string report_to_json(const MetricReport& report,
                           const std::vector<std::string>& class_names) {
  nlohmann::json j;
  j["counts"]["instances"] = report.num_instances;
  j["counts"]["proposals_kept"] = report.num_proposals_kept;
  j["counts"]["scenes"] = report.num_scenes;
  for (const auto& [key, per_k] : report.m_at_kiou) {
    for (const auto& [k, score] : per_k) {
      j["m_at_kiou"][key][format_threshold(k)] = round9(score);
    }
  }
  for (const auto& [k, det] : report.detection) {
    nlohmann::json d;
    d["mAP"] = round9(det.map);
    d["AR"] = round9(det.ar);
    for (const auto& [klass, ap] : det.per_class_ap) {
      const std::string name = klass < static_cast<int>(class_names.size())
                                   ? class_names[klass]
                                   : std::to_string(klass);
      d["per_class_ap"][name] = round9(ap);
    }
    j["detection"][format_threshold(k)] = std::move(d);
  }
  return j.dump(2) + "\n";
}

std::string report_to_text(const MetricReport& report,
                           const std::vector<std::string>& class_names) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);

  std::vector<double> thresholds;
  for (const auto& [key, per_k] : report.m_at_kiou) {
    for (const auto& [k, score] : per_k) {
      if (std::find(thresholds.begin(), thresholds.end(), k) == thresholds.end()) {
        thresholds.push_back(k);
      }
    }
  }
  std::sort(thresholds.begin(), thresholds.end());

  std::vector<std::pair<std::string, double>> columns;
  for (double k : thresholds) {
    for (const CaptionMetric metric : kCanonicalOrder) {
      const auto it = report.m_at_kiou.find(metric_key(metric));
      if (it == report.m_at_kiou.end()) continue;
      const auto score = it->second.find(k);
      if (score == it->second.end()) continue;
      columns.emplace_back(metric_label(metric) + "@" + format_threshold(k),
                           score->second);
    }
  }
  if (!columns.empty()) {
    out << std::left << std::setw(12) << "m@kIoU";
    for (const auto& [header, score] : columns) {
      out << std::setw(12) << header;
    }
    out << "\n" << std::setw(12) << "";
    for (const auto& [header, score] : columns) {
      out << std::setw(12) << score;
    }
    out << "\n";
  }

  out << std::left << std::setw(12) << "detection";
  for (const auto& [k, det] : report.detection) {
    out << std::setw(12) << ("mAP@" + format_threshold(k)) << std::setw(12)
        << ("AR@" + format_threshold(k));
  }
  out << "\n" << std::setw(12) << "";
  for (const auto& [k, det] : report.detection) {
    out << std::setw(12) << det.map << std::setw(12) << det.ar;
  }
  out << "\n";

  for (const auto& [k, det] : report.detection) {
    out << "per-class AP@" << format_threshold(k) << "\n";
    for (const auto& [klass, ap] : det.per_class_ap) {
      const std::string name = klass < static_cast<int>(class_names.size())
                                   ? class_names[klass]
                                   : std::to_string(klass);
      out << "  " << std::left << std::setw(16) << name << ap << "\n";
    }
  }
  out << "instances: " << report.num_instances
      << "  proposals_kept: " << report.num_proposals_kept
      << "  scenes: " << report.num_scenes << "\n";
  return out.str();
}

}  // namespace dcap
