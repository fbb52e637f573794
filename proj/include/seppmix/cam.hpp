#pragma once

#include "seppmix/types.hpp"

namespace seppmix::cam {

// Class activation map: the class's weight row contracted over the feature
// stack, bilinearly upsampled (corner-aligned) to out_h x out_w. Bias is
// excluded by construction; the result may contain negative values.
Map2D compute_cam(const FeatureStack& features, const ClassifierWeights& weights,
                  int class_id, int out_h, int out_w);

// Turns a raw activation map into a unit-mass non-negative map: shifts by
// -min when the minimum is negative, then divides by the sum. Degenerate
// maps (shifted sum <= 1e-12) fall back to the uniform map.
SemanticMap normalize_to_semantic_map(const Map2D& raw);

// Mass of s under the mask.
double semantic_proportion(const PixelMask& pixel_mask, const SemanticMap& s);

} // namespace seppmix::cam
