#pragma once

#include <vector>

#include "glmbim/gaussian.hpp"
#include "glmbim/image.hpp"

namespace glmbim {

// One frame's raw pixel grid plus the point detections extracted from it.
struct HybridObservation {
    ImageGrid image;
    std::vector<Vector2d> detections;
};

}  // namespace glmbim
