#pragma once

#include <array>

#include "seppmix/types.hpp"

namespace seppmix::rotation {

// Right-angle rotations, counter-clockwise; the enum value is the 4-way
// classification target.
enum class RotationAngle { deg0 = 0, deg90 = 1, deg180 = 2, deg270 = 3 };

constexpr std::array<RotationAngle, 4> kAllRotations = {
    RotationAngle::deg0, RotationAngle::deg90, RotationAngle::deg180, RotationAngle::deg270};

// Exact pixel permutation. 90 deg maps source (i, j) of an HxW image to
// destination (W-1-j, i); 180/270 are compositions. Output dims swap for
// the odd quarter turns.
Image rotate(const Image& image, RotationAngle r);

struct RotatedSample {
    Image image;
    LabelDistribution label; // class label, invariant under rotation
    int rotation_target = 0;
};

// All four rotations of a mixed sample, class label carried through,
// rotation targets 0..3.
std::array<RotatedSample, 4> expand_with_rotations(const MixedSample& sample);

} // namespace seppmix::rotation
