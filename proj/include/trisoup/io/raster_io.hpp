#pragma once

#include <string>

#include "trisoup/core/image.hpp"

namespace trisoup {

/// Binary PPM (P6), values clamped to [0,1] and quantized to 8 bits.
void write_ppm(const std::string& path, const ImageD& img);
ImageD read_ppm(const std::string& path);

/// PFM float raster ("Pf" single channel, "PF" three channels), little-endian,
/// bottom row first.
void write_pfm(const std::string& path, const ImageD& img);
ImageD read_pfm(const std::string& path);

/// Dispatches on extension (.ppm / .pfm).
ImageD read_raster(const std::string& path);

}  // namespace trisoup
