#include "dcap/records.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dcap/error.hpp"
#include "dcap/jsonutil.hpp"

namespace dcap {

namespace {

using nlohmann::json;

Box3D parse_box(const json& j) {
  if (!j.is_array() || j.size() != 6) {
    throw SchemaError("box must be [cx,cy,cz,sx,sy,sz]");
  }
  Box3D box;
  for (int i = 0; i < 3; ++i) box.center[i] = j.at(i).get<double>();
  for (int i = 0; i < 3; ++i) box.size[i] = j.at(3 + i).get<double>();
  if (!box.valid()) throw SchemaError("box sizes must be positive and finite");
  return box;
}

json box_to_json(const Box3D& box) {
  return json::array({round9(box.center[0]), round9(box.center[1]),
                      round9(box.center[2]), round9(box.size[0]),
                      round9(box.size[1]), round9(box.size[2])});
}

// Applies fn to each parsed JSONL line, rethrowing with path:line context.
template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const SchemaError& e) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<GroundTruthRecord> load_ground_truth(const std::string& path) {
  std::vector<GroundTruthRecord> records;
  for_each_line(path, [&](const json& j) {
    GroundTruthRecord rec;
    rec.scene_id = j.at("scene_id").get<std::string>();
    if (j.contains("points_file")) {
      rec.points_file = j["points_file"].get<std::string>();
    }
    std::set<std::int32_t> seen_ids;
    for (const json& inst : j.at("instances")) {
      GroundTruthRecord::InstanceEntry entry;
      entry.id = inst.at("id").get<std::int32_t>();
      entry.class_name = inst.at("class").get<std::string>();
      entry.box = parse_box(inst.at("box"));
      entry.captions = inst.at("captions").get<std::vector<std::string>>();
      if (entry.captions.empty()) {
        throw SchemaError("instance " + std::to_string(entry.id) +
                          " needs at least one caption");
      }
      if (!seen_ids.insert(entry.id).second) {
        throw SchemaError("duplicate instance id " + std::to_string(entry.id));
      }
      rec.instances.push_back(std::move(entry));
    }
    records.push_back(std::move(rec));
  });
  return records;
}

std::vector<PredictionRecord> load_predictions(const std::string& path) {
  std::vector<PredictionRecord> records;
  for_each_line(path, [&](const json& j) {
    PredictionRecord rec;
    rec.scene_id = j.at("scene_id").get<std::string>();
    for (const json& prop : j.at("proposals")) {
      PredictionRecord::ProposalEntry entry;
      entry.box = parse_box(prop.at("box"));
      entry.class_probs = prop.at("class_probs").get<std::vector<double>>();
      entry.caption = prop.value("caption", std::string());
      rec.proposals.push_back(std::move(entry));
    }
    records.push_back(std::move(rec));
  });
  return records;
}

void save_ground_truth(const std::vector<GroundTruthRecord>& records,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write file: " + path);
  for (const GroundTruthRecord& rec : records) {
    json j;
    j["scene_id"] = rec.scene_id;
    if (!rec.points_file.empty()) j["points_file"] = rec.points_file;
    j["instances"] = json::array();
    for (const auto& inst : rec.instances) {
      json e;
      e["id"] = inst.id;
      e["class"] = inst.class_name;
      e["box"] = box_to_json(inst.box);
      e["captions"] = inst.captions;
      j["instances"].push_back(std::move(e));
    }
    out << j.dump() << '\n';
  }
}

void save_predictions(const std::vector<PredictionRecord>& records,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write file: " + path);
  for (const PredictionRecord& rec : records) {
    json j;
    j["scene_id"] = rec.scene_id;
    j["proposals"] = json::array();
    for (const auto& prop : rec.proposals) {
      json e;
      e["box"] = box_to_json(prop.box);
      json probs = json::array();
      for (double p : prop.class_probs) probs.push_back(round9(p));
      e["class_probs"] = std::move(probs);
      e["caption"] = prop.caption;
      j["proposals"].push_back(std::move(e));
    }
    out << j.dump() << '\n';
  }
}

std::vector<std::string> class_vocabulary(
    const std::vector<GroundTruthRecord>& records) {
  std::set<std::string> names;
  for (const GroundTruthRecord& rec : records) {
    for (const auto& inst : rec.instances) names.insert(inst.class_name);
  }
  return {names.begin(), names.end()};
}

std::vector<EvalScene> build_eval_scenes(
    const std::vector<GroundTruthRecord>& gts,
    const std::vector<PredictionRecord>& preds,
    const std::vector<std::string>& vocabulary) {
  std::map<std::string, const GroundTruthRecord*> gt_by_id;
  std::map<std::string, const PredictionRecord*> pred_by_id;
  for (const auto& rec : gts) {
    if (!gt_by_id.emplace(rec.scene_id, &rec).second) {
      throw SchemaError("duplicate scene_id in ground truth: " + rec.scene_id);
    }
  }
  for (const auto& rec : preds) {
    if (!pred_by_id.emplace(rec.scene_id, &rec).second) {
      throw SchemaError("duplicate scene_id in predictions: " + rec.scene_id);
    }
  }

  std::vector<std::string> gt_only, pred_only;
  for (const auto& [id, rec] : gt_by_id) {
    if (!pred_by_id.count(id)) gt_only.push_back(id);
  }
  for (const auto& [id, rec] : pred_by_id) {
    if (!gt_by_id.count(id)) pred_only.push_back(id);
  }
  if (!gt_only.empty() || !pred_only.empty()) {
    std::ostringstream msg;
    msg << "scene_id sets differ;";
    if (!gt_only.empty()) {
      msg << " missing predictions for:";
      for (const auto& id : gt_only) msg << ' ' << id;
      msg << ';';
    }
    if (!pred_only.empty()) {
      msg << " predictions without ground truth:";
      for (const auto& id : pred_only) msg << ' ' << id;
    }
    throw SchemaError(msg.str());
  }

  std::map<std::string, int> class_ids;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    class_ids[vocabulary[i]] = static_cast<int>(i);
  }

  std::vector<EvalScene> scenes;
  scenes.reserve(gt_by_id.size());
  for (const auto& [id, gt_rec] : gt_by_id) {  // sorted by scene_id
    EvalScene scene;
    scene.scene_id = id;
    for (const auto& inst : gt_rec->instances) {
      Instance domain;
      domain.id = inst.id;
      domain.box = inst.box;
      const auto it = class_ids.find(inst.class_name);
      if (it == class_ids.end()) {
        throw SchemaError("scene " + id + ": class not in vocabulary: " +
                          inst.class_name);
      }
      domain.class_id = it->second;
      domain.captions = inst.captions;
      scene.gts.instances.push_back(std::move(domain));
    }
    for (const auto& prop : pred_by_id.at(id)->proposals) {
      Prediction pred;
      pred.box = prop.box;
      pred.class_probs = prop.class_probs;
      pred.caption = prop.caption;
      scene.preds.predictions.push_back(std::move(pred));
    }
    scene.preds.validate(static_cast<int>(vocabulary.size()));
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

std::vector<std::vector<TokenSeq>> reference_corpora(
    const std::vector<GroundTruthRecord>& records) {
  std::vector<std::vector<TokenSeq>> corpora;
  for (const GroundTruthRecord& rec : records) {
    for (const auto& inst : rec.instances) {
      std::vector<TokenSeq> refs;
      refs.reserve(inst.captions.size());
      for (const auto& caption : inst.captions) refs.push_back(tokenize(caption));
      corpora.push_back(std::move(refs));
    }
  }
  return corpora;
}

GroundTruthRecord to_ground_truth_record(const Scene& scene) {
  GroundTruthRecord rec;
  rec.scene_id = scene.scene_id;
  for (const Instance& inst : scene.instances.instances) {
    GroundTruthRecord::InstanceEntry entry;
    entry.id = inst.id;
    entry.class_name = scene.class_names[inst.class_id];
    entry.box = inst.box;
    entry.captions = inst.captions;
    rec.instances.push_back(std::move(entry));
  }
  return rec;
}

PredictionRecord to_prediction_record(const std::string& scene_id,
                                      const PredictionSet& preds) {
  PredictionRecord rec;
  rec.scene_id = scene_id;
  for (const Prediction& pred : preds.predictions) {
    rec.proposals.push_back({pred.box, pred.class_probs, pred.caption});
  }
  return rec;
}

PredictionRecord remap_prediction_record(
    const PredictionRecord& record, const std::vector<std::string>& from_names,
    const std::vector<std::string>& to_names) {
  std::map<std::string, int> to_ids;
  for (std::size_t i = 0; i < to_names.size(); ++i) {
    to_ids[to_names[i]] = static_cast<int>(i);
  }
  PredictionRecord out;
  out.scene_id = record.scene_id;
  for (const auto& prop : record.proposals) {
    if (prop.class_probs.size() != from_names.size() + 1) {
      throw SchemaError("remap: class_probs size does not match vocabulary");
    }
    PredictionRecord::ProposalEntry entry;
    entry.box = prop.box;
    entry.caption = prop.caption;
    entry.class_probs.assign(to_names.size() + 1, 0.0);
    entry.class_probs.back() = prop.class_probs.back();
    for (std::size_t c = 0; c < from_names.size(); ++c) {
      if (prop.class_probs[c] == 0.0) continue;
      const auto it = to_ids.find(from_names[c]);
      if (it == to_ids.end()) {
        throw SchemaError("remap: class not in target vocabulary: " +
                          from_names[c]);
      }
      entry.class_probs[it->second] += prop.class_probs[c];
    }
    out.proposals.push_back(std::move(entry));
  }
  return out;
}

}  // namespace dcap
