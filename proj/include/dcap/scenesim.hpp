#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcap/scene.hpp"
#include "dcap/votequery.hpp"

namespace dcap {

// Synthetic scene recipe. Generation is fully determined by (spec, seed):
// the stream comes from the splitmix64 generator in rng.hpp, so fixtures
// reproduce bit-identically across platforms.
struct SceneSpec {
  std::uint64_t seed = 0;
  std::string scene_id;  // default "scene_<seed>"
  Vec3 room_extent{8.0, 8.0, 3.0};
  int min_instances = 4;
  int max_instances = 12;
  double min_size = 0.4;
  double max_size = 1.4;
  int points_per_instance = 256;
  int floor_points = 512;
  std::vector<std::string> class_vocabulary;  // empty -> 18 default classes

  bool valid() const {
    return room_extent[0] > 0 && room_extent[1] > 0 && room_extent[2] > 0 &&
           min_instances >= 0 && max_instances >= min_instances &&
           min_size > 0 && max_size >= min_size && points_per_instance >= 0 &&
           floor_points >= 0;
  }
};

// The 18 indoor classes used when SceneSpec.class_vocabulary is empty.
const std::vector<std::string>& default_class_vocabulary();

// Non-overlapping axis-aligned boxes by rejection sampling, points sampled
// uniformly on box surfaces (labeled) plus floor points (id -1), and
// templated captions per instance. placement_failures, when non-null,
// receives the number of instances dropped after bounded retries.
Scene gen_scene(const SceneSpec& spec, int* placement_failures = nullptr);

// Exact vote oracle: labeled points are shifted to their owning instance
// center, background points stay put. Ownership is resolved by box
// containment, which is unambiguous because generated boxes are disjoint.
OffsetPredictor oracle_offset_predictor(const Scene& scene);

struct PerturbConfig {
  double box_noise = 0.0;           // uniform jitter, meters
  double class_error_rate = 0.0;    // probability of a class flip
  int duplicate_count = 1;          // proposals per instance
  double caption_corruption_rate = 0.0;  // per-token drop probability
  std::uint64_t seed = 0;
};

// duplicate_count jittered proposals per instance, deterministic by seed.
// Class distributions are one-hot on the (possibly flipped) class; with all
// rates zero and duplicate_count 1 the output echoes the ground truth.
PredictionSet perturbed_predictions(const Scene& scene,
                                    const PerturbConfig& config);

}  // namespace dcap
