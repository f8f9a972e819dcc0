#pragma once

#include <string>
#include <vector>

#include "dcap/densecap_eval.hpp"
#include "dcap/scene.hpp"
#include "dcap/textmetrics.hpp"

namespace dcap {

// One gt.jsonl line:
//   {"scene_id": "...", "instances": [{"id": 0, "class": "chair",
//    "box": [cx,cy,cz,sx,sy,sz], "captions": ["..."]}, ...],
//    "points_file": "optional/path.bin"}
struct GroundTruthRecord {
  struct InstanceEntry {
    std::int32_t id = 0;
    std::string class_name;
    Box3D box;
    std::vector<std::string> captions;
  };
  std::string scene_id;
  std::vector<InstanceEntry> instances;
  std::string points_file;  // optional
};

// One preds.jsonl line:
//   {"scene_id": "...", "proposals": [{"box": [...6...],
//    "class_probs": [... C+1 ...], "caption": "..."}, ...]}
struct PredictionRecord {
  struct ProposalEntry {
    Box3D box;
    std::vector<double> class_probs;
    std::string caption;
  };
  std::string scene_id;
  std::vector<ProposalEntry> proposals;
};

// Readers throw SchemaError with "<path>:<line>: ..." messages.
std::vector<GroundTruthRecord> load_ground_truth(const std::string& path);
std::vector<PredictionRecord> load_predictions(const std::string& path);

void save_ground_truth(const std::vector<GroundTruthRecord>& records,
                       const std::string& path);
void save_predictions(const std::vector<PredictionRecord>& records,
                      const std::string& path);

// Union of gt class strings, sorted lexicographically; instance class ids
// index this list and "no object" is the final probability slot.
std::vector<std::string> class_vocabulary(
    const std::vector<GroundTruthRecord>& records);

// Pairs gt and prediction records by scene_id (sorted), checks the id sets
// match exactly, and maps class strings to vocabulary ids. Throws
// SchemaError listing any scene_id differences.
std::vector<EvalScene> build_eval_scenes(
    const std::vector<GroundTruthRecord>& gts,
    const std::vector<PredictionRecord>& preds,
    const std::vector<std::string>& vocabulary);

// Reference corpora (one per instance, every scene) for DF construction.
std::vector<std::vector<TokenSeq>> reference_corpora(
    const std::vector<GroundTruthRecord>& records);

GroundTruthRecord to_ground_truth_record(const Scene& scene);
PredictionRecord to_prediction_record(const std::string& scene_id,
                                      const PredictionSet& preds);

// Re-expresses class distributions over a different vocabulary (by class
// name); the trailing "no object" slot is preserved. Mass on a class absent
// from the target vocabulary is a SchemaError.
PredictionRecord remap_prediction_record(
    const PredictionRecord& record, const std::vector<std::string>& from_names,
    const std::vector<std::string>& to_names);

}  // namespace dcap
