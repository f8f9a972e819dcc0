// dcap: synthetic-scene generation, caption metrics, NMS, Hungarian
// matching, and the full dense-captioning evaluation protocol over JSONL
// scene files. Exit codes: 0 success, 2 input error, 3 internal failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dcap/assignment.hpp"
#include "dcap/densecap_eval.hpp"
#include "dcap/error.hpp"
#include "dcap/geom3d.hpp"
#include "dcap/jsonutil.hpp"
#include "dcap/records.hpp"
#include "dcap/rng.hpp"
#include "dcap/scenesim.hpp"
#include "dcap/textmetrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> parse_double_list(const std::string& csv, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw dcap::SchemaError(std::string(flag) + ": cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw dcap::SchemaError(std::string(flag) + ": empty list");
  return out;
}

dcap::CaptionMetric metric_from_name(const std::string& name) {
  if (name == "cider") return dcap::CaptionMetric::kCiderD;
  if (name == "bleu4") return dcap::CaptionMetric::kBleu4;
  if (name == "meteor") return dcap::CaptionMetric::kMeteorLite;
  if (name == "rouge") return dcap::CaptionMetric::kRougeL;
  throw dcap::SchemaError("unknown metric: " + name +
                          " (expected cider, bleu4, meteor, rouge)");
}

// DF corpus file: gt.jsonl records or {"id","captions"} reference records.
std::vector<std::vector<dcap::TokenSeq>> load_df_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dcap::SchemaError("cannot open df corpus: " + path);
  std::vector<std::vector<dcap::TokenSeq>> corpora;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw dcap::SchemaError(path + ":" + std::to_string(lineno) + ": " +
                              e.what());
    }
    if (j.contains("instances")) {
      for (const json& inst : j["instances"]) {
        std::vector<dcap::TokenSeq> refs;
        for (const json& caption : inst.at("captions")) {
          refs.push_back(dcap::tokenize(caption.get<std::string>()));
        }
        corpora.push_back(std::move(refs));
      }
    } else if (j.contains("captions")) {
      std::vector<dcap::TokenSeq> refs;
      for (const json& caption : j["captions"]) {
        refs.push_back(dcap::tokenize(caption.get<std::string>()));
      }
      corpora.push_back(std::move(refs));
    } else {
      throw dcap::SchemaError(path + ":" + std::to_string(lineno) +
                              ": expected 'instances' or 'captions'");
    }
  }
  if (corpora.empty()) throw dcap::SchemaError(path + ": empty df corpus");
  return corpora;
}

// --- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string gt_path, pred_path;
  std::string iou_thresholds = "0.25,0.5";
  double nms_threshold = 0.25;
  bool no_nms = false;
  std::string metrics;  // empty = all with df, else bleu4,meteor,rouge
  std::string df_corpus;
  std::string json_out;
  std::string ap_interp = "every";
  int threads = 1;
};

int run_eval(const EvalArgs& args) {
  const auto gts = dcap::load_ground_truth(args.gt_path);
  const auto preds = dcap::load_predictions(args.pred_path);
  const auto vocabulary = dcap::class_vocabulary(gts);
  const auto scenes = dcap::build_eval_scenes(gts, preds, vocabulary);

  dcap::EvalConfig config;
  config.iou_thresholds = parse_double_list(args.iou_thresholds, "--iou-thresholds");
  config.nms_threshold = args.nms_threshold;
  config.apply_nms = !args.no_nms;
  config.threads = args.threads;
  if (args.ap_interp == "every") {
    config.ap_interpolation = dcap::ApInterpolation::kEveryPoint;
  } else if (args.ap_interp == "11point") {
    config.ap_interpolation = dcap::ApInterpolation::kElevenPoint;
  } else {
    throw dcap::SchemaError("--ap-interp must be 'every' or '11point'");
  }

  if (!args.metrics.empty()) {
    config.metrics.clear();
    std::stringstream ss(args.metrics);
    std::string name;
    while (std::getline(ss, name, ',')) {
      config.metrics.push_back(metric_from_name(name));
    }
    if (config.wants(dcap::CaptionMetric::kCiderD) && args.df_corpus.empty()) {
      throw dcap::SchemaError(
          "CIDEr-D needs --df-corpus (the corpus is never guessed)");
    }
  } else {
    // default: all four metrics when a df corpus is given, otherwise skip
    // CIDEr-D rather than guess its corpus
    if (args.df_corpus.empty()) {
      config.metrics = {dcap::CaptionMetric::kBleu4,
                        dcap::CaptionMetric::kMeteorLite,
                        dcap::CaptionMetric::kRougeL};
      std::cerr << "note: CIDEr-D skipped (pass --df-corpus to enable)\n";
    }
  }

  dcap::DfTable df;
  const dcap::DfTable* df_ptr = nullptr;
  if (!args.df_corpus.empty()) {
    df = dcap::build_df(load_df_corpus(args.df_corpus));
    df_ptr = &df;
  }

  const dcap::MetricReport report =
      dcap::evaluate(scenes, static_cast<int>(vocabulary.size()), config, df_ptr);
  std::cout << dcap::report_to_text(report, vocabulary);
  if (!args.json_out.empty()) {
    std::ofstream out(args.json_out);
    if (!out) throw dcap::SchemaError("cannot write: " + args.json_out);
    out << dcap::report_to_json(report, vocabulary);
  }
  return 0;
}

// --- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  std::uint64_t seed = 0;
  int scenes = 1;
  std::string instances = "4:12";
  std::string room_extent = "8,8,3";
  int points_per_instance = 256;
  int floor_points = 512;
  int duplicates = 1;
  double box_noise = 0.0;
  double class_error = 0.0;
  double caption_drop = 0.0;
};

int run_synth(const SynthArgs& args) {
  int min_inst = 0, max_inst = 0;
  const auto colon = args.instances.find(':');
  try {
    if (colon == std::string::npos) {
      min_inst = max_inst = std::stoi(args.instances);
    } else {
      min_inst = std::stoi(args.instances.substr(0, colon));
      max_inst = std::stoi(args.instances.substr(colon + 1));
    }
  } catch (const std::exception&) {
    throw dcap::SchemaError("--instances: expected N or MIN:MAX");
  }
  const auto extent = parse_double_list(args.room_extent, "--room-extent");
  if (extent.size() != 3) {
    throw dcap::SchemaError("--room-extent: expected X,Y,Z");
  }

  fs::create_directories(fs::path(args.out_dir) / "points");

  std::vector<dcap::GroundTruthRecord> gt_records;
  std::vector<dcap::PredictionRecord> pred_records;
  std::vector<std::string> scene_vocab;  // gen_scene vocabulary (shared)
  int total_failures = 0;
  for (int i = 0; i < args.scenes; ++i) {
    dcap::SceneSpec spec;
    // streams 2i / 2i+1: scene geometry and perturbation
    spec.seed = dcap::Rng::derive(args.seed, 2 * i).next_u64();
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04d", i);
    spec.scene_id = name;
    spec.room_extent = {extent[0], extent[1], extent[2]};
    spec.min_instances = min_inst;
    spec.max_instances = max_inst;
    spec.points_per_instance = args.points_per_instance;
    spec.floor_points = args.floor_points;

    int failures = 0;
    const dcap::Scene scene = dcap::gen_scene(spec, &failures);
    total_failures += failures;
    scene_vocab = scene.class_names;

    dcap::PerturbConfig perturb;
    perturb.box_noise = args.box_noise;
    perturb.class_error_rate = args.class_error;
    perturb.duplicate_count = args.duplicates;
    perturb.caption_corruption_rate = args.caption_drop;
    perturb.seed = dcap::Rng::derive(args.seed, 2 * i + 1).next_u64();
    const dcap::PredictionSet preds = dcap::perturbed_predictions(scene, perturb);

    auto gt_rec = dcap::to_ground_truth_record(scene);
    gt_rec.points_file = std::string("points/") + name + ".bin";
    dcap::save_point_cloud(scene.cloud,
                           (fs::path(args.out_dir) / gt_rec.points_file).string());
    gt_records.push_back(std::move(gt_rec));
    pred_records.push_back(dcap::to_prediction_record(scene.scene_id, preds));
  }
  // eval reads its vocabulary from the gt file, so distributions are
  // re-expressed over the union of class names that actually occur
  const auto file_vocab = dcap::class_vocabulary(gt_records);
  for (auto& rec : pred_records) {
    rec = dcap::remap_prediction_record(rec, scene_vocab, file_vocab);
  }
  dcap::save_ground_truth(gt_records, (fs::path(args.out_dir) / "gt.jsonl").string());
  dcap::save_predictions(pred_records,
                         (fs::path(args.out_dir) / "preds.jsonl").string());
  if (total_failures > 0) {
    std::cerr << "warning: " << total_failures
              << " instance placements failed after bounded retries\n";
  }
  std::cout << "wrote " << args.scenes << " scenes to " << args.out_dir << "\n";
  return 0;
}

// --- metrics ----------------------------------------------------------------

struct MetricsArgs {
  std::string candidates_path, refs_path;
  std::string metric = "all";
  std::string df_corpus;
};

int run_metrics(const MetricsArgs& args) {
  std::map<std::string, dcap::TokenSeq> candidates;
  std::map<std::string, std::vector<dcap::TokenSeq>> refs;

  std::ifstream cand_in(args.candidates_path);
  if (!cand_in) {
    throw dcap::SchemaError("cannot open file: " + args.candidates_path);
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(cand_in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      candidates[j.at("id").get<std::string>()] =
          dcap::tokenize(j.at("caption").get<std::string>());
    } catch (const json::exception& e) {
      throw dcap::SchemaError(args.candidates_path + ":" +
                              std::to_string(lineno) + ": " + e.what());
    }
  }
  std::ifstream refs_in(args.refs_path);
  if (!refs_in) throw dcap::SchemaError("cannot open file: " + args.refs_path);
  lineno = 0;
  while (std::getline(refs_in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      std::vector<dcap::TokenSeq> r;
      for (const json& caption : j.at("captions")) {
        r.push_back(dcap::tokenize(caption.get<std::string>()));
      }
      refs[j.at("id").get<std::string>()] = std::move(r);
    } catch (const json::exception& e) {
      throw dcap::SchemaError(args.refs_path + ":" + std::to_string(lineno) +
                              ": " + e.what());
    }
  }
  for (const auto& [id, tokens] : candidates) {
    if (!refs.count(id)) {
      throw dcap::SchemaError("no references for candidate id: " + id);
    }
  }

  std::vector<dcap::CaptionMetric> selected;
  if (args.metric == "all") {
    selected = {dcap::CaptionMetric::kCiderD, dcap::CaptionMetric::kBleu4,
                dcap::CaptionMetric::kMeteorLite, dcap::CaptionMetric::kRougeL};
  } else {
    selected = {metric_from_name(args.metric)};
  }

  dcap::DfTable df;
  const bool wants_cider =
      std::find(selected.begin(), selected.end(),
                dcap::CaptionMetric::kCiderD) != selected.end();
  if (wants_cider) {
    if (args.df_corpus.empty()) {
      throw dcap::SchemaError(
          "CIDEr-D needs --df-corpus (the corpus is never guessed)");
    }
    df = dcap::build_df(load_df_corpus(args.df_corpus));
  }

  const auto score_one = [&](dcap::CaptionMetric metric,
                             const dcap::TokenSeq& cand,
                             const std::vector<dcap::TokenSeq>& r) {
    switch (metric) {
      case dcap::CaptionMetric::kCiderD: return dcap::cider_d(cand, r, df);
      case dcap::CaptionMetric::kBleu4: return dcap::bleu4(cand, r);
      case dcap::CaptionMetric::kMeteorLite: return dcap::meteor_lite(cand, r);
      case dcap::CaptionMetric::kRougeL: return dcap::rougel(cand, r);
    }
    return 0.0;
  };

  std::cout << "id";
  for (const auto metric : selected) std::cout << '\t' << dcap::metric_key(metric);
  std::cout << '\n';
  std::map<std::string, double> mean;
  for (const auto& [id, cand] : candidates) {
    std::cout << id;
    for (const auto metric : selected) {
      const double score = score_one(metric, cand, refs.at(id));
      mean[dcap::metric_key(metric)] += score;
      std::printf("\t%.9g", score);
    }
    std::cout << '\n';
  }
  std::cout << "mean";
  for (const auto metric : selected) {
    std::printf("\t%.9g", candidates.empty()
                              ? 0.0
                              : mean[dcap::metric_key(metric)] /
                                    static_cast<double>(candidates.size()));
  }
  std::cout << '\n';
  return 0;
}

// --- nms ----------------------------------------------------------------------

int run_nms(const std::string& pred_path, double threshold,
            const std::string& out_path) {
  const auto records = dcap::load_predictions(pred_path);
  std::vector<dcap::PredictionRecord> filtered;
  for (const auto& rec : records) {
    std::vector<dcap::Box3D> boxes;
    std::vector<double> scores;
    for (const auto& prop : rec.proposals) {
      boxes.push_back(prop.box);
      const double no_obj =
          prop.class_probs.empty() ? 1.0 : prop.class_probs.back();
      scores.push_back(1.0 - no_obj);
    }
    dcap::PredictionRecord out_rec;
    out_rec.scene_id = rec.scene_id;
    for (int idx : dcap::nms(boxes, scores, threshold)) {
      out_rec.proposals.push_back(rec.proposals[idx]);
    }
    filtered.push_back(std::move(out_rec));
  }
  if (out_path.empty()) {
    for (const auto& rec : filtered) {
      json j;
      j["scene_id"] = rec.scene_id;
      j["proposals"] = json::array();
      for (const auto& prop : rec.proposals) {
        json e;
        e["box"] = {dcap::round9(prop.box.center[0]), dcap::round9(prop.box.center[1]),
                    dcap::round9(prop.box.center[2]), dcap::round9(prop.box.size[0]),
                    dcap::round9(prop.box.size[1]), dcap::round9(prop.box.size[2])};
        json probs = json::array();
        for (double p : prop.class_probs) probs.push_back(dcap::round9(p));
        e["class_probs"] = std::move(probs);
        e["caption"] = prop.caption;
        j["proposals"].push_back(std::move(e));
      }
      std::cout << j.dump() << '\n';
    }
  } else {
    dcap::save_predictions(filtered, out_path);
  }
  return 0;
}

// --- match ----------------------------------------------------------------------

int run_match(const std::string& gt_path, const std::string& pred_path,
              const std::string& alpha_csv) {
  const auto alphas = parse_double_list(alpha_csv, "--alpha");
  if (alphas.size() != 4) {
    throw dcap::SchemaError("--alpha: expected 4 comma-separated weights");
  }
  dcap::SetLossWeights weights;
  weights.giou = alphas[0];
  weights.cls = alphas[1];
  weights.center = alphas[2];
  weights.size = alphas[3];

  const auto gts = dcap::load_ground_truth(gt_path);
  const auto preds = dcap::load_predictions(pred_path);
  const auto vocabulary = dcap::class_vocabulary(gts);
  const auto scenes = dcap::build_eval_scenes(gts, preds, vocabulary);

  for (const auto& scene : scenes) {
    std::cout << scene.scene_id << "\n";
    if (scene.preds.size() == 0) {
      std::cout << "  (no proposals)\n";
      continue;
    }
    const dcap::Assignment assignment =
        dcap::match_scene(scene.preds, scene.gts, weights);
    for (const auto& [inst, query] : assignment.pairs) {
      const dcap::Prediction& pred = scene.preds[query];
      const dcap::Instance& gt = scene.gts[inst];
      const double giou_term = weights.giou * (1.0 - dcap::giou3d(pred.box, gt.box));
      const double cls_term =
          weights.cls * (1.0 - pred.class_probs[gt.class_id]);
      const double center_term =
          weights.center * dcap::l1_distance(pred.box.center, gt.box.center);
      const double size_term =
          weights.size * dcap::l1_distance(pred.box.size, gt.box.size);
      std::printf(
          "  instance %d -> query %d  cost %.9g (giou %.9g cls %.9g center "
          "%.9g size %.9g)\n",
          gt.id, query, giou_term + cls_term + center_term + size_term,
          giou_term, cls_term, center_term, size_term);
    }
    std::printf("  total_cost %.9g  unmatched_queries %zu\n",
                assignment.total_cost, assignment.unmatched_cols.size());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D dense captioning evaluation toolkit"};
  app.require_subcommand(1);

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "run the m@kIoU + detection evaluation protocol");
  eval_cmd->add_option("gt", eval_args.gt_path, "ground truth JSONL")->required();
  eval_cmd->add_option("preds", eval_args.pred_path, "predictions JSONL")->required();
  eval_cmd->add_option("--iou-thresholds", eval_args.iou_thresholds,
                       "comma-separated IoU thresholds (default 0.25,0.5)");
  eval_cmd->add_option("--nms-threshold", eval_args.nms_threshold,
                       "NMS IoU threshold (default 0.25)");
  eval_cmd->add_flag("--no-nms", eval_args.no_nms, "skip NMS");
  eval_cmd->add_option("--metrics", eval_args.metrics,
                       "comma-separated subset of cider,bleu4,meteor,rouge");
  eval_cmd->add_option("--df-corpus", eval_args.df_corpus,
                       "corpus JSONL for CIDEr-D document frequencies");
  eval_cmd->add_option("--json-out", eval_args.json_out, "write JSON report here");
  eval_cmd->add_option("--ap-interp", eval_args.ap_interp,
                       "AP interpolation: every (default) or 11point");
  eval_cmd->add_option("--threads", eval_args.threads,
                       "scene-level worker threads (default 1)");

  SynthArgs synth_args;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "generate synthetic scenes and predictions");
  synth_cmd->add_option("--out-dir", synth_args.out_dir, "output directory")
      ->required();
  synth_cmd->add_option("--seed", synth_args.seed, "master seed (default 0)");
  synth_cmd->add_option("--scenes", synth_args.scenes, "scene count (default 1)");
  synth_cmd->add_option("--instances", synth_args.instances,
                        "instances per scene, N or MIN:MAX (default 4:12)");
  synth_cmd->add_option("--room-extent", synth_args.room_extent,
                        "room size X,Y,Z meters (default 8,8,3)");
  synth_cmd->add_option("--points-per-instance", synth_args.points_per_instance,
                        "surface points per instance (default 256)");
  synth_cmd->add_option("--floor-points", synth_args.floor_points,
                        "background floor points (default 512)");
  synth_cmd->add_option("--perturb-duplicates", synth_args.duplicates,
                        "proposals per instance (default 1)");
  synth_cmd->add_option("--perturb-box-noise", synth_args.box_noise,
                        "uniform box jitter in meters (default 0)");
  synth_cmd->add_option("--perturb-class-error", synth_args.class_error,
                        "class flip probability (default 0)");
  synth_cmd->add_option("--perturb-caption-drop", synth_args.caption_drop,
                        "per-token drop probability (default 0)");

  MetricsArgs metrics_args;
  CLI::App* metrics_cmd =
      app.add_subcommand("metrics", "score candidate captions against references");
  metrics_cmd->add_option("candidates", metrics_args.candidates_path,
                          "candidate JSONL: {id, caption}")->required();
  metrics_cmd->add_option("refs", metrics_args.refs_path,
                          "reference JSONL: {id, captions}")->required();
  metrics_cmd->add_option("--metric", metrics_args.metric,
                          "all (default), cider, bleu4, meteor or rouge");
  metrics_cmd->add_option("--df-corpus", metrics_args.df_corpus,
                          "corpus JSONL for CIDEr-D document frequencies");

  std::string nms_pred_path, nms_out;
  double nms_threshold = 0.25;
  CLI::App* nms_cmd = app.add_subcommand("nms", "non-maximum suppression filter");
  nms_cmd->add_option("preds", nms_pred_path, "predictions JSONL")->required();
  nms_cmd->add_option("--threshold", nms_threshold,
                      "IoU suppression threshold (default 0.25)");
  nms_cmd->add_option("--out", nms_out, "output path (default stdout)");

  std::string match_gt, match_pred, match_alpha = "10,1,5,1";
  CLI::App* match_cmd =
      app.add_subcommand("match", "Hungarian assignment with set-loss costs");
  match_cmd->add_option("gt", match_gt, "ground truth JSONL")->required();
  match_cmd->add_option("preds", match_pred, "predictions JSONL")->required();
  match_cmd->add_option("--alpha", match_alpha,
                        "giou,cls,center,size weights (default 10,1,5,1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (synth_cmd->parsed()) return run_synth(synth_args);
    if (metrics_cmd->parsed()) return run_metrics(metrics_args);
    if (nms_cmd->parsed()) return run_nms(nms_pred_path, nms_threshold, nms_out);
    if (match_cmd->parsed()) return run_match(match_gt, match_pred, match_alpha);
  } catch (const dcap::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
