#pragma once

#include "seppmix/types.hpp"

namespace seppmix {

// Fixed four-stop thermal colormap (navy -> cyan -> yellow -> red at
// t = 0, 1/3, 2/3, 1), linear between stops. Warmer means higher value.
inline void thermal_color(double t, double rgb[3]) {
    static constexpr double stops[4][3] = {
        {0.00, 0.00, 0.50}, {0.00, 0.80, 0.90}, {0.95, 0.85, 0.10}, {0.90, 0.10, 0.05}};
    if (t <= 0.0) {
        for (int c = 0; c < 3; ++c) rgb[c] = stops[0][c];
        return;
    }
    if (t >= 1.0) {
        for (int c = 0; c < 3; ++c) rgb[c] = stops[3][c];
        return;
    }
    const double s = t * 3.0;
    const int i = static_cast<int>(s) < 2 ? static_cast<int>(s) : 2;
    const double f = s - i;
    for (int c = 0; c < 3; ++c) rgb[c] = stops[i][c] + f * (stops[i + 1][c] - stops[i][c]);
}

// Renders a map as a heatmap image, display-normalized by its maximum.
inline Image render_heatmap(const SemanticMap& map) {
    double mx = 0.0;
    for (double v : map.data) mx = v > mx ? v : mx;
    const double scale = mx > 0.0 ? 1.0 / mx : 0.0;
    Image out(map.height, map.width);
    double rgb[3];
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) {
            thermal_color(map.at(y, x) * scale, rgb);
            for (int c = 0; c < 3; ++c) out.at(c, y, x) = rgb[c];
        }
    return out;
}

} // namespace seppmix
