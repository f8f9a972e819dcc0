#include "dcap/scenesim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dcap/rng.hpp"
#include "dcap/textmetrics.hpp"

namespace dcap {

const std::vector<std::string>& default_class_vocabulary() {
  static const std::vector<std::string> kClasses = {
      "cabinet", "bed",     "chair",  "sofa",         "table",  "door",
      "window",  "bookshelf", "picture", "counter",   "desk",   "curtain",
      "refrigerator", "shower curtain", "toilet",     "sink",   "bathtub",
      "others"};
  return kClasses;
}

namespace {

constexpr double kPlacementGap = 0.05;  // min clearance between boxes
constexpr int kPlacementRetries = 100;

const std::vector<std::string>& attributes() {
  static const std::vector<std::string> kAttributes = {
      "red",   "blue",  "green",  "brown", "black",
      "white", "large", "small",  "wooden", "metal"};
  return kAttributes;
}

bool boxes_clear(const Box3D& a, const Box3D& b, double gap) {
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = std::max(a.center[axis] - a.size[axis] * 0.5,
                               b.center[axis] - b.size[axis] * 0.5);
    const double hi = std::min(a.center[axis] + a.size[axis] * 0.5,
                               b.center[axis] + b.size[axis] * 0.5);
    if (hi - lo <= -gap) return true;  // separated on this axis
  }
  return false;
}

// One point uniform on the box surface: face chosen by area, then two
// uniform in-face coordinates. Exactly three rng draws per point.
Vec3 sample_surface_point(const Box3D& box, Rng& rng) {
  const double sx = box.size[0], sy = box.size[1], sz = box.size[2];
  const double area_xy = sx * sy, area_xz = sx * sz, area_yz = sy * sz;
  const double total = 2.0 * (area_xy + area_xz + area_yz);
  const double pick = rng.uniform() * total;
  const double u = rng.uniform(), v = rng.uniform();
  const Vec3 lo = box.min_corner(), hi = box.max_corner();

  double acc = area_xy;
  if (pick < acc) return {lo[0] + u * sx, lo[1] + v * sy, lo[2]};
  acc += area_xy;
  if (pick < acc) return {lo[0] + u * sx, lo[1] + v * sy, hi[2]};
  acc += area_xz;
  if (pick < acc) return {lo[0] + u * sx, lo[1], lo[2] + v * sz};
  acc += area_xz;
  if (pick < acc) return {lo[0] + u * sx, hi[1], lo[2] + v * sz};
  acc += area_yz;
  if (pick < acc) return {lo[0], lo[1] + u * sy, lo[2] + v * sz};
  return {hi[0], lo[1] + u * sy, lo[2] + v * sz};
}

std::string make_caption(int variant, const std::string& attr,
                         const std::string& klass, const std::string& near) {
  std::ostringstream s;
  switch (variant) {
    case 0:
      if (near.empty()) {
        s << "the " << attr << " " << klass << " is in the room";
      } else {
        s << "the " << attr << " " << klass << " is near the " << near;
      }
      break;
    case 1:
      s << "there is a " << attr << " " << klass << " in the room";
      break;
    default:
      if (near.empty()) {
        s << "a " << attr << " " << klass << " sits in the corner";
      } else {
        s << "a " << attr << " " << klass << " sits close to the " << near;
      }
      break;
  }
  return s.str();
}

}  // namespace

Scene gen_scene(const SceneSpec& spec, int* placement_failures) {
  if (!spec.valid()) throw std::invalid_argument("gen_scene: invalid spec");
  Rng rng(spec.seed);

  Scene scene;
  scene.scene_id = spec.scene_id.empty()
                       ? "scene_" + std::to_string(spec.seed)
                       : spec.scene_id;
  scene.class_names = spec.class_vocabulary.empty() ? default_class_vocabulary()
                                                    : spec.class_vocabulary;
  std::sort(scene.class_names.begin(), scene.class_names.end());

  const int requested =
      spec.min_instances +
      static_cast<int>(rng.uniform_int(
          static_cast<std::uint64_t>(spec.max_instances - spec.min_instances + 1)));

  int failures = 0;
  for (int i = 0; i < requested; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
      Box3D box;
      for (int axis = 0; axis < 3; ++axis) {
        box.size[axis] = rng.uniform(spec.min_size,
                                     std::min(spec.max_size,
                                              spec.room_extent[axis] * 0.45));
      }
      bool fits = true;
      for (int axis = 0; axis < 3; ++axis) {
        const double margin = axis == 2 ? 0.02 : 0.1;
        const double lo = box.size[axis] * 0.5 + margin;
        const double hi = spec.room_extent[axis] - box.size[axis] * 0.5 - margin;
        if (hi <= lo) {
          fits = false;
          break;
        }
        box.center[axis] = rng.uniform(lo, hi);
      }
      if (!fits) continue;
      bool clear = true;
      for (const Instance& prev : scene.instances.instances) {
        if (!boxes_clear(box, prev.box, kPlacementGap)) {
          clear = false;
          break;
        }
      }
      if (!clear) continue;

      Instance inst;
      inst.id = static_cast<std::int32_t>(scene.instances.size());
      inst.box = box;
      inst.class_id = static_cast<int>(rng.uniform_int(scene.class_names.size()));
      scene.instances.instances.push_back(std::move(inst));
      placed = true;
    }
    if (!placed) ++failures;
  }
  if (placement_failures != nullptr) *placement_failures = failures;

  // captions need final geometry: the nearest other instance is the "near"
  for (std::size_t i = 0; i < scene.instances.size(); ++i) {
    Instance& inst = scene.instances.instances[i];
    std::string near;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < scene.instances.size(); ++j) {
      if (j == i) continue;
      const double d =
          squared_distance(inst.center(), scene.instances[j].center());
      if (d < best) {
        best = d;
        near = scene.class_names[scene.instances[j].class_id];
      }
    }
    const std::string& klass = scene.class_names[inst.class_id];
    for (int variant = 0; variant < 3; ++variant) {
      const std::string& attr =
          attributes()[rng.uniform_int(attributes().size())];
      inst.captions.push_back(make_caption(variant, attr, klass, near));
    }
  }

  scene.cloud.feature_dim = 3;
  for (const Instance& inst : scene.instances.instances) {
    for (int p = 0; p < spec.points_per_instance; ++p) {
      scene.cloud.positions.push_back(sample_surface_point(inst.box, rng));
      scene.cloud.instance_ids.push_back(inst.id);
      for (int c = 0; c < 3; ++c) scene.cloud.features.push_back(rng.uniform());
    }
  }
  for (int p = 0; p < spec.floor_points; ++p) {
    const double x = rng.uniform(0.0, spec.room_extent[0]);
    const double y = rng.uniform(0.0, spec.room_extent[1]);
    scene.cloud.positions.push_back({x, y, 0.0});
    scene.cloud.instance_ids.push_back(-1);
    for (int c = 0; c < 3; ++c) scene.cloud.features.push_back(rng.uniform());
  }
  scene.cloud.validate();
  return scene;
}

OffsetPredictor oracle_offset_predictor(const Scene& scene) {
  // copy the instance geometry so the predictor owns everything it needs
  std::vector<Box3D> boxes;
  boxes.reserve(scene.instances.size());
  for (const Instance& inst : scene.instances.instances) {
    boxes.push_back(inst.box);
  }
  return [boxes](const Vec3& position, std::span<const double>) -> Vec3 {
    for (const Box3D& box : boxes) {
      if (box.contains(position)) return box.center - position;
    }
    return {0.0, 0.0, 0.0};
  };
}

PredictionSet perturbed_predictions(const Scene& scene,
                                    const PerturbConfig& config) {
  if (config.box_noise < 0.0 || config.duplicate_count < 1 ||
      config.class_error_rate < 0.0 || config.class_error_rate > 1.0 ||
      config.caption_corruption_rate < 0.0 ||
      config.caption_corruption_rate > 1.0) {
    throw std::invalid_argument("perturbed_predictions: invalid config");
  }
  Rng rng(config.seed);
  const int num_classes = static_cast<int>(scene.class_names.size());

  // class flips stay within the classes this scene actually uses, so the
  // emitted distributions survive a file-level vocabulary rebuild
  std::vector<int> used_classes;
  for (const Instance& inst : scene.instances.instances) {
    if (std::find(used_classes.begin(), used_classes.end(), inst.class_id) ==
        used_classes.end()) {
      used_classes.push_back(inst.class_id);
    }
  }
  std::sort(used_classes.begin(), used_classes.end());

  PredictionSet out;
  for (const Instance& inst : scene.instances.instances) {
    for (int d = 0; d < config.duplicate_count; ++d) {
      Prediction pred;
      pred.box = inst.box;
      for (int axis = 0; axis < 3; ++axis) {
        pred.box.center[axis] +=
            rng.uniform(-config.box_noise, config.box_noise);
      }
      for (int axis = 0; axis < 3; ++axis) {
        pred.box.size[axis] = std::max(
            0.05, pred.box.size[axis] +
                      rng.uniform(-config.box_noise, config.box_noise));
      }

      int klass = inst.class_id;
      if (rng.uniform() < config.class_error_rate && used_classes.size() > 1) {
        const int pick =
            static_cast<int>(rng.uniform_int(used_classes.size() - 1));
        int offset = 0;
        for (int candidate : used_classes) {
          if (candidate == inst.class_id) continue;
          if (offset == pick) {
            klass = candidate;
            break;
          }
          ++offset;
        }
      }
      pred.class_probs.assign(num_classes + 1, 0.0);
      pred.class_probs[klass] = 1.0;

      const TokenSeq tokens = tokenize(inst.captions.front());
      std::string caption;
      for (const std::string& token : tokens) {
        if (rng.uniform() < config.caption_corruption_rate) continue;
        if (!caption.empty()) caption.push_back(' ');
        caption += token;
      }
      pred.caption = config.caption_corruption_rate > 0.0
                         ? caption
                         : inst.captions.front();
      out.predictions.push_back(std::move(pred));
    }
  }
  return out;
}

}  // namespace dcap
