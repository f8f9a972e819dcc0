#pragma once

#include <array>
#include <vector>

#include "dcap/vec3.hpp"

namespace dcap {

// Axis-aligned 3D box: center plus full edge lengths, in meters.
// All size components must be strictly positive.
struct Box3D {
  Vec3 center{0.0, 0.0, 0.0};
  Vec3 size{1.0, 1.0, 1.0};

  Vec3 min_corner() const { return center - size * 0.5; }
  Vec3 max_corner() const { return center + size * 0.5; }
  double volume() const { return size[0] * size[1] * size[2]; }
  bool valid() const {
    return all_finite(center) && all_finite(size) && size[0] > 0.0 &&
           size[1] > 0.0 && size[2] > 0.0;
  }
  bool contains(const Vec3& p) const;
};

// The 8 corners in canonical order: z-major, then y, then x. Corner i has
//   x = (i & 1) ? max : min,  y = (i & 2) ? max : min,  z = (i & 4) ? max : min
// so index 0 is the min corner and index 7 the max corner.
// Throws std::invalid_argument for degenerate boxes.
std::array<Vec3, 8> corners(const Box3D& box);

// Intersection volume / union volume, in [0, 1]. Symmetric; 1 iff identical.
double iou3d(const Box3D& a, const Box3D& b);

// Generalized IoU with the axis-aligned enclosing box, in (-1, 1]:
//   iou - (|enclosing| - |union|) / |enclosing|
// Equals plain IoU when one box contains the other.
double giou3d(const Box3D& a, const Box3D& b);

// Greedy non-maximum suppression. Boxes are visited in descending score
// order (equal scores broken by lower index); a box is dropped when its IoU
// with an already-kept box exceeds iou_threshold (strictly). Kept indices
// are returned in descending score order.
// Throws std::invalid_argument on length mismatch or threshold outside [0,1].
std::vector<int> nms(const std::vector<Box3D>& boxes,
                     const std::vector<double>& scores, double iou_threshold);

}  // namespace dcap
