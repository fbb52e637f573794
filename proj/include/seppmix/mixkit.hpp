#pragma once

#include "seppmix/random.hpp"
#include "seppmix/types.hpp"

namespace seppmix::mixkit {

// One-hot label over num_classes base classes.
LabelDistribution one_hot(int class_id, int num_classes);

// Each of the grid_n^2 cells is an independent Bernoulli(0.5) draw, taken
// from rng in row-major order.
PatchGridMask sample_patch_mask(int grid_n, SeededRng& rng);

// Pixel (i, j) takes the value of cell (floor(i*grid_n/height),
// floor(j*grid_n/width)); uneven divisions are deterministic under this
// floor rule.
PixelMask upsample_mask(const PatchGridMask& mask, int height, int width);

// out = mask (.) a + (1 - mask) (.) b, exact per pixel and channel.
Image mix_images(const Image& a, const Image& b, const PixelMask& pixel_mask);

// rho_a * y_a + rho_b * y_b. Not renormalized; semantic mixing legitimately
// yields total mass != 1 and the losses consume the raw combination.
LabelDistribution combine_labels(const LabelDistribution& y_a, const LabelDistribution& y_b,
                                 double rho_a, double rho_b);

// Patch-grid mixing with semantic label proportions: draws a mask, blends
// the images, and weights each label by the semantic mass its source
// contributes to the mixed image.
MixedSample seppmix(const Image& x_a, int y_a, const Image& x_b, int y_b,
                    const SemanticMap& s_a, const SemanticMap& s_b,
                    int num_classes, int grid_n, SeededRng& rng);

// Same image construction as seppmix; label weights come from the pixel
// area fraction instead of semantic mass.
MixedSample patchmix(const Image& x_a, int y_a, const Image& x_b, int y_b,
                     int num_classes, int grid_n, SeededRng& rng);

// Convex pixel blend with matching label weights (lambda, 1 - lambda).
MixedSample mixup(const Image& x_a, int y_a, const Image& x_b, int y_b,
                  int num_classes, double lambda);

// Pastes a random box from x_b into x_a. lambda ~ Beta(alpha, alpha); box
// side fractions sqrt(1 - lambda), center uniform, clipped to bounds; label
// weights use the post-clip pixel fraction. Draw order: lambda, cx, cy.
MixedSample cutmix(const Image& x_a, int y_a, const Image& x_b, int y_b,
                   int num_classes, SeededRng& rng, double alpha = 1.0);

} // namespace seppmix::mixkit
