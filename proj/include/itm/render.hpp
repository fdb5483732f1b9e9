#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "itm/bt.hpp"

namespace itm {

using RGB = std::array<std::uint8_t, 3>;

struct Palette {
    RGB unstable{0, 0, 0};
    RGB undetermined{255, 0, 255};
    RGB outside{255, 255, 255};  // grid points off the triangle
};

struct Image {
    int width = 0, height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, top row first
};

// Hash-derived color; never equal to a dedicated palette color.
RGB fingerprint_color(const Fingerprint& f, const Palette& pal = {});

// One pixel per cell: column i, row res-1-j (b grows upwards).
Image render_scan(const ScanResult& sr, const Palette& pal = {});

std::string encode_ppm(const Image& img);
bool png_available();
// Throws RangeViolation when built without PNG support.
std::string encode_png(const Image& img);

}  // namespace itm
