#include "dcap/scene.hpp"

#include <cmath>

#include "dcap/error.hpp"

namespace dcap {

int InstanceSet::index_of(std::int32_t id) const {
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

void PredictionSet::validate(int num_classes) const {
  for (std::size_t q = 0; q < predictions.size(); ++q) {
    const Prediction& p = predictions[q];
    if (!p.box.valid()) {
      throw SchemaError("prediction " + std::to_string(q) + ": invalid box");
    }
    if (static_cast<int>(p.class_probs.size()) != num_classes + 1) {
      throw SchemaError("prediction " + std::to_string(q) +
                        ": class_probs must have C+1 entries");
    }
    double sum = 0.0;
    for (double v : p.class_probs) {
      if (!(v >= 0.0)) {
        throw SchemaError("prediction " + std::to_string(q) +
                          ": negative class probability");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw SchemaError("prediction " + std::to_string(q) +
                        ": class_probs must sum to 1 within 1e-6");
    }
  }
}

}  // namespace dcap
