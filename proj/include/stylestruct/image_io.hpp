#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylestruct/tensor.hpp"

namespace stylestruct {

/// 8-bit RGB raster, interleaved.
struct Image8 {
    Index width = 0, height = 0;
    std::vector<std::uint8_t> data;  // [H,W,3]
};

/// 16-bit single-channel raster.
struct Image16 {
    Index width = 0, height = 0;
    std::vector<std::uint16_t> data;  // [H,W]
};

void write_ppm(const std::string& path, const Image8& img);
Image8 read_ppm(const std::string& path);
void write_pgm16(const std::string& path, const Image16& img);
Image16 read_pgm16(const std::string& path);

/// [-1,1] -> [0,255] with round-half-up: floor((c+1)*127.5 + 0.5).
std::uint8_t encode_unit(double c);
double decode_unit(std::uint8_t v);

/// Normal map [3,H,W] to a colour image: red carries Z, green Y, blue X.
/// Each pixel is unit-normalised before colouring.
Image8 encode_normal_image(const float* normals, Index width, Index height);
/// Inverse of encode_normal_image; decoded vectors are renormalised.
std::vector<float> decode_normal_image(const Image8& img);

/// RGB tensor slice [3,H,W] in [-1,1] to an image and back.
Image8 encode_rgb_image(const float* rgb, Index width, Index height);
std::vector<float> decode_rgb_image(const Image8& img);

/// Tiles equally sized images left to right.
Image8 contact_sheet(const std::vector<Image8>& frames, Index gap = 2);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace stylestruct
