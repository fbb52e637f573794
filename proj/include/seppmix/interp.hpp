#pragma once

#include "seppmix/types.hpp"

namespace seppmix {

// Corner-aligned bilinear resampling: output corners map onto input corners,
// source coordinate of row i is i*(in_h-1)/(out_h-1) (0 when out_h == 1).
// Interpolation uses the delta form a + t*(b-a), which reproduces a constant
// field bit-exactly.
Map2D bilinear_resize(const Map2D& in, int out_h, int out_w);
Image bilinear_resize(const Image& in, int out_h, int out_w);

} // namespace seppmix
