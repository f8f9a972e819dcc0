#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcap/geom3d.hpp"
#include "dcap/pointset.hpp"

namespace dcap {

// One annotated object: box, semantic class, and its caption corpus.
// The instance center is the box center.
struct Instance {
  std::int32_t id = 0;
  Box3D box;
  int class_id = 0;
  std::vector<std::string> captions;  // at least one

  Vec3 center() const { return box.center; }
};

struct InstanceSet {
  std::vector<Instance> instances;

  std::size_t size() const { return instances.size(); }
  const Instance& operator[](std::size_t i) const { return instances[i]; }

  // Index into `instances` for an instance id, or -1.
  int index_of(std::int32_t id) const;
};

// Per-query model output surrogate: box, class distribution over the C
// semantic classes plus a final "no object" slot, and a caption string.
struct Prediction {
  Box3D box;
  std::vector<double> class_probs;  // C + 1 entries, sums to 1 within 1e-6
  std::string caption;

  // 1 - P("no object"); the score used for NMS and AP ranking.
  double confidence() const {
    return class_probs.empty() ? 0.0 : 1.0 - class_probs.back();
  }
};

struct PredictionSet {
  std::vector<Prediction> predictions;

  std::size_t size() const { return predictions.size(); }
  const Prediction& operator[](std::size_t i) const { return predictions[i]; }

  // Throws SchemaError on invalid distributions or boxes.
  void validate(int num_classes) const;
};

// A full synthetic or loaded scene: point cloud plus annotations.
// class_names is the vocabulary that instance class_ids index, in
// lexicographic order.
struct Scene {
  std::string scene_id;
  PointCloud cloud;
  InstanceSet instances;
  std::vector<std::string> class_names;
};

}  // namespace dcap
