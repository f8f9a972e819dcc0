#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dcap/assignment.hpp"
#include "dcap/caploss.hpp"
#include "dcap/decode.hpp"
#include "dcap/densecap_eval.hpp"
#include "dcap/geom3d.hpp"
#include "dcap/pointset.hpp"
#include "dcap/records.hpp"
#include "dcap/textmetrics.hpp"
#include "dcap/votequery.hpp"

namespace py = pybind11;

namespace {

using Box6 = std::array<double, 6>;

dcap::Box3D to_box(const Box6& v) {
  return dcap::Box3D{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
}

std::vector<dcap::Box3D> to_boxes(const std::vector<Box6>& values) {
  std::vector<dcap::Box3D> boxes;
  boxes.reserve(values.size());
  for (const Box6& v : values) boxes.push_back(to_box(v));
  return boxes;
}

py::dict assignment_to_dict(const dcap::Assignment& a) {
  py::dict out;
  out["pairs"] = a.pairs;
  out["unmatched_rows"] = a.unmatched_rows;
  out["unmatched_cols"] = a.unmatched_cols;
  out["total_cost"] = a.total_cost;
  return out;
}

py::tuple sequence_to_tuple(const dcap::SequenceLogProb& seq) {
  return py::make_tuple(seq.tokens, seq.log_probs);
}

dcap::DecodeConfig make_config(int beam_size, int max_length, int eos_token) {
  dcap::DecodeConfig config;
  config.beam_size = beam_size;
  config.max_length = max_length;
  config.eos_token = eos_token;
  return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "3D dense captioning core: box geometry, point sampling, "
            "set matching, caption metrics, decoding, and evaluation";

  // --- geometry ---
  m.def("iou3d",
        [](const Box6& a, const Box6& b) { return dcap::iou3d(to_box(a), to_box(b)); },
        py::arg("a"), py::arg("b"),
        "IoU of two axis-aligned boxes given as [cx,cy,cz,sx,sy,sz]");
  m.def("giou3d",
        [](const Box6& a, const Box6& b) { return dcap::giou3d(to_box(a), to_box(b)); },
        py::arg("a"), py::arg("b"));
  m.def("box_corners",
        [](const Box6& box) {
          const auto pts = dcap::corners(to_box(box));
          return std::vector<std::array<double, 3>>(pts.begin(), pts.end());
        },
        py::arg("box"), "8 corners, x fastest then y then z");
  m.def("nms",
        [](const std::vector<Box6>& boxes, const std::vector<double>& scores,
           double iou_threshold) {
          return dcap::nms(to_boxes(boxes), scores, iou_threshold);
        },
        py::arg("boxes"), py::arg("scores"), py::arg("iou_threshold"),
        "Greedy NMS; returns kept indices in descending score order");

  // --- point sampling ---
  m.def("fps",
        [](const std::vector<dcap::Vec3>& points, int k, int start_index) {
          return dcap::fps(points, k, start_index);
        },
        py::arg("points"), py::arg("k"), py::arg("start_index") = 0,
        "Farthest point sampling; returns indices in pick order");
  m.def("ball_query",
        [](const std::vector<dcap::Vec3>& centers,
           const std::vector<dcap::Vec3>& points, double radius, int max_samples) {
          dcap::PointCloud cloud;
          cloud.positions = points;
          const auto groups = dcap::ball_query(centers, cloud, radius, max_samples);
          std::vector<std::vector<int>> indices;
          std::vector<bool> fallback;
          for (const auto& g : groups) {
            indices.push_back(g.indices);
            fallback.push_back(g.fallback);
          }
          return py::make_tuple(indices, fallback);
        },
        py::arg("centers"), py::arg("points"), py::arg("radius"),
        py::arg("max_samples"),
        "Per-center neighbor groups and fallback flags");
  m.def("fourier_pe",
        [](const dcap::Vec3& position, int num_bands, double max_frequency) {
          dcap::FourierPEConfig config;
          config.num_bands = num_bands;
          config.max_frequency = max_frequency;
          return dcap::fourier_pe(position, config);
        },
        py::arg("position"), py::arg("num_bands") = 32,
        py::arg("max_frequency") = 64.0);

  // --- vote query ---
  m.def("vote_loss",
        [](const std::vector<dcap::Vec3>& votes,
           const std::vector<dcap::Vec3>& positions,
           const std::vector<std::int32_t>& instance_ids,
           const std::vector<std::int32_t>& gt_ids,
           const std::vector<Box6>& gt_boxes) {
          dcap::PointCloud cloud;
          cloud.positions = positions;
          cloud.instance_ids = instance_ids;
          dcap::InstanceSet instances;
          for (std::size_t i = 0; i < gt_ids.size(); ++i) {
            dcap::Instance inst;
            inst.id = gt_ids[i];
            inst.box = to_box(gt_boxes[i]);
            inst.captions = {""};
            instances.instances.push_back(std::move(inst));
          }
          return dcap::vote_loss(votes, cloud, instances);
        },
        py::arg("votes"), py::arg("positions"), py::arg("instance_ids"),
        py::arg("gt_ids"), py::arg("gt_boxes"),
        "L1 vote regression loss normalized by the vote count");

  // --- matching and losses ---
  m.def("hungarian",
        [](const std::vector<std::vector<double>>& cost) {
          return assignment_to_dict(dcap::hungarian(cost));
        },
        py::arg("cost"),
        "Minimum-cost one-to-one assignment with lexicographic tie-break");
  m.def("pair_cost",
        [](const Box6& pred_box, const std::vector<double>& class_probs,
           const Box6& gt_box, int gt_class, double a_giou, double a_cls,
           double a_center, double a_size) {
          dcap::Prediction pred;
          pred.box = to_box(pred_box);
          pred.class_probs = class_probs;
          dcap::Instance gt;
          gt.box = to_box(gt_box);
          gt.class_id = gt_class;
          gt.captions = {""};
          dcap::SetLossWeights w;
          w.giou = a_giou;
          w.cls = a_cls;
          w.center = a_center;
          w.size = a_size;
          return dcap::pair_cost(pred, gt, w);
        },
        py::arg("pred_box"), py::arg("class_probs"), py::arg("gt_box"),
        py::arg("gt_class"), py::arg("alpha_giou") = 10.0,
        py::arg("alpha_cls") = 1.0, py::arg("alpha_center") = 5.0,
        py::arg("alpha_size") = 1.0);
  m.def("total_loss",
        [](double l_vote, const std::vector<double>& l_set_per_layer,
           double l_cap, double beta_vote, double beta_set, double beta_cap) {
          dcap::TotalLossWeights w;
          w.vote = beta_vote;
          w.set = beta_set;
          w.caption = beta_cap;
          w.n_dec_layer = static_cast<int>(l_set_per_layer.size());
          return dcap::total_loss(l_vote, l_set_per_layer, l_cap, w);
        },
        py::arg("l_vote"), py::arg("l_set_per_layer"), py::arg("l_cap"),
        py::arg("beta_vote") = 10.0, py::arg("beta_set") = 1.0,
        py::arg("beta_cap") = 5.0);
  m.def("mle_loss",
        [](const std::vector<double>& log_probs) {
          dcap::SequenceLogProb seq;
          seq.log_probs = log_probs;
          seq.tokens.resize(log_probs.size());
          return dcap::mle_loss(seq);
        },
        py::arg("log_probs"));
  m.def("scst_loss",
        [](const std::vector<std::vector<double>>& beam_log_probs,
           const std::vector<double>& rewards, double baseline) {
          std::vector<dcap::SequenceLogProb> beams;
          for (const auto& lps : beam_log_probs) {
            dcap::SequenceLogProb seq;
            seq.log_probs = lps;
            seq.tokens.resize(lps.size());
            beams.push_back(std::move(seq));
          }
          return dcap::scst_loss(beams, rewards, baseline);
        },
        py::arg("beam_log_probs"), py::arg("rewards"), py::arg("baseline"));

  // --- text metrics ---
  m.def("tokenize", &dcap::tokenize, py::arg("text"));
  m.def("porter_stem", &dcap::porter_stem, py::arg("word"));
  m.def("bleu4", &dcap::bleu4, py::arg("candidate"), py::arg("refs"),
        py::arg("smooth") = false);
  m.def("rougel", &dcap::rougel, py::arg("candidate"), py::arg("refs"));
  m.def("meteor_lite", &dcap::meteor_lite, py::arg("candidate"), py::arg("refs"));
  m.def("cider_d",
        [](const dcap::TokenSeq& candidate, const std::vector<dcap::TokenSeq>& refs,
           const std::vector<std::vector<dcap::TokenSeq>>& corpus) {
          return dcap::cider_d(candidate, refs, dcap::build_df(corpus));
        },
        py::arg("candidate"), py::arg("refs"), py::arg("df_corpus"),
        "CIDEr-D with document frequencies built from df_corpus "
        "(a list of reference sets)");

  // --- decoding ---
  m.def("greedy_decode",
        [](const std::function<std::vector<double>(const std::vector<int>&)>& scorer,
           int max_length, int eos_token) {
          return sequence_to_tuple(
              dcap::greedy(scorer, make_config(1, max_length, eos_token)));
        },
        py::arg("scorer"), py::arg("max_length") = 32, py::arg("eos_token") = 0,
        "Greedy decode over a python scorer: prefix -> log-prob vector");
  m.def("beam_search",
        [](const std::function<std::vector<double>(const std::vector<int>&)>& scorer,
           int beam_size, int max_length, int eos_token) {
          const auto beams = dcap::beam_search(
              scorer, make_config(beam_size, max_length, eos_token));
          std::vector<py::tuple> out;
          out.reserve(beams.size());
          for (const auto& beam : beams) out.push_back(sequence_to_tuple(beam));
          return out;
        },
        py::arg("scorer"), py::arg("beam_size") = 5, py::arg("max_length") = 32,
        py::arg("eos_token") = 0);

  // --- file-level evaluation ---
  m.def("evaluate_files",
        [](const std::string& gt_path, const std::string& pred_path,
           const std::vector<double>& iou_thresholds, double nms_threshold,
           bool apply_nms, const std::optional<std::string>& df_corpus_path,
           int threads) {
          const auto gts = dcap::load_ground_truth(gt_path);
          const auto preds = dcap::load_predictions(pred_path);
          const auto vocabulary = dcap::class_vocabulary(gts);
          const auto scenes = dcap::build_eval_scenes(gts, preds, vocabulary);
          dcap::EvalConfig config;
          config.iou_thresholds = iou_thresholds;
          config.nms_threshold = nms_threshold;
          config.apply_nms = apply_nms;
          config.threads = threads;
          dcap::DfTable df;
          const dcap::DfTable* df_ptr = nullptr;
          if (df_corpus_path.has_value()) {
            df = dcap::build_df(dcap::reference_corpora(
                dcap::load_ground_truth(*df_corpus_path)));
            df_ptr = &df;
          } else {
            config.metrics = {dcap::CaptionMetric::kBleu4,
                              dcap::CaptionMetric::kMeteorLite,
                              dcap::CaptionMetric::kRougeL};
          }
          const dcap::MetricReport report = dcap::evaluate(
              scenes, static_cast<int>(vocabulary.size()), config, df_ptr);
          return dcap::report_to_json(report, vocabulary);
        },
        py::arg("gt_path"), py::arg("pred_path"),
        py::arg("iou_thresholds") = std::vector<double>{0.25, 0.5},
        py::arg("nms_threshold") = 0.25, py::arg("apply_nms") = true,
        py::arg("df_corpus_path") = std::nullopt, py::arg("threads") = 1,
        "Full evaluation protocol over JSONL files; returns the JSON report");

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
