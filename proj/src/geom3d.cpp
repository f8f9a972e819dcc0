#include "dcap/geom3d.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace dcap {

namespace {

void require_valid(const Box3D& box) {
  if (!box.valid()) {
    throw std::invalid_argument("Box3D requires finite center and size > 0");
  }
}

// Overlap length of two 1D intervals given by (center, extent).
double overlap1d(double ca, double sa, double cb, double sb) {
  const double lo = std::max(ca - sa * 0.5, cb - sb * 0.5);
  const double hi = std::min(ca + sa * 0.5, cb + sb * 0.5);
  return std::max(0.0, hi - lo);
}

double intersection_volume(const Box3D& a, const Box3D& b) {
  double v = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    v *= overlap1d(a.center[axis], a.size[axis], b.center[axis], b.size[axis]);
  }
  return v;
}

}  // namespace

bool Box3D::contains(const Vec3& p) const {
  const Vec3 lo = min_corner(), hi = max_corner();
  for (int axis = 0; axis < 3; ++axis) {
    if (p[axis] < lo[axis] || p[axis] > hi[axis]) return false;
  }
  return true;
}

std::array<Vec3, 8> corners(const Box3D& box) {
  require_valid(box);
  const Vec3 lo = box.min_corner(), hi = box.max_corner();
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    out[i] = {(i & 1) ? hi[0] : lo[0], (i & 2) ? hi[1] : lo[1],
              (i & 4) ? hi[2] : lo[2]};
  }
  return out;
}

double iou3d(const Box3D& a, const Box3D& b) {
  require_valid(a);
  require_valid(b);
  const double inter = intersection_volume(a, b);
  const double uni = a.volume() + b.volume() - inter;
  if (uni <= 1e-12) return 0.0;
  return inter / uni;
}

double giou3d(const Box3D& a, const Box3D& b) {
  require_valid(a);
  require_valid(b);
  const double inter = intersection_volume(a, b);
  const double uni = a.volume() + b.volume() - inter;
  double enclosing = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = std::min(a.center[axis] - a.size[axis] * 0.5,
                               b.center[axis] - b.size[axis] * 0.5);
    const double hi = std::max(a.center[axis] + a.size[axis] * 0.5,
                               b.center[axis] + b.size[axis] * 0.5);
    enclosing *= hi - lo;
  }
  const double iou = uni <= 1e-12 ? 0.0 : inter / uni;
  if (enclosing <= 1e-12) return iou;
  return iou - (enclosing - uni) / enclosing;
}

std::vector<int> nms(const std::vector<Box3D>& boxes,
                     const std::vector<double>& scores, double iou_threshold) {
  if (boxes.size() != scores.size()) {
    throw std::invalid_argument("nms: boxes and scores length mismatch");
  }
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw std::invalid_argument("nms: iou_threshold must be in [0,1]");
  }
  std::vector<int> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  std::vector<int> kept;
  for (int idx : order) {
    bool suppressed = false;
    for (int k : kept) {
      if (iou3d(boxes[idx], boxes[k]) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(idx);
  }
  return kept;
}

}  // namespace dcap
