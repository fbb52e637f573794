#include "seppmix/rotation.hpp"

namespace seppmix::rotation {

Image rotate(const Image& image, RotationAngle r) {
    const int h = image.height, w = image.width;
    switch (r) {
        case RotationAngle::deg0:
            return image;
        case RotationAngle::deg90: {
            // source (i, j) -> dest (w-1-j, i); dest (i2, j2) <- source (j2, w-1-i2)
            Image out(w, h);
            for (int c = 0; c < 3; ++c)
                for (int i2 = 0; i2 < w; ++i2)
                    for (int j2 = 0; j2 < h; ++j2)
                        out.at(c, i2, j2) = image.at(c, j2, w - 1 - i2);
            return out;
        }
        case RotationAngle::deg180: {
            Image out(h, w);
            for (int c = 0; c < 3; ++c)
                for (int i = 0; i < h; ++i)
                    for (int j = 0; j < w; ++j)
                        out.at(c, h - 1 - i, w - 1 - j) = image.at(c, i, j);
            return out;
        }
        case RotationAngle::deg270: {
            Image out(w, h);
            for (int c = 0; c < 3; ++c)
                for (int i2 = 0; i2 < w; ++i2)
                    for (int j2 = 0; j2 < h; ++j2)
                        out.at(c, i2, j2) = image.at(c, h - 1 - j2, i2);
            return out;
        }
    }
    return image;
}

std::array<RotatedSample, 4> expand_with_rotations(const MixedSample& sample) {
    std::array<RotatedSample, 4> out;
    for (int t = 0; t < 4; ++t) {
        out[static_cast<std::size_t>(t)].image = rotate(sample.image, static_cast<RotationAngle>(t));
        out[static_cast<std::size_t>(t)].label = sample.label;
        out[static_cast<std::size_t>(t)].rotation_target = t;
    }
    return out;
}

} // namespace seppmix::rotation
