#pragma once

#include "amsr/freqmask.hpp"
#include "amsr/tensor.hpp"

#include <string>

namespace amsr {

// Binary netpbm only: P6 (RGB) and P5 (grayscale), maxval 255. Values scale
// to [0,1]; P5 is promoted to three identical channels. Throws io_error on
// malformed headers, unsupported maxval, or truncated payloads.
Tensor load_image(const std::string& path);

// P6 for 3-channel tensors, P5 for 1-channel. Values are clamped to [0,1]
// and quantized with round-half-away-from-zero.
void save_image(const Tensor& t, const std::string& path);

// Mask bits stored as 0/255 in a P5 file.
void save_mask_pgm(const BitMask2D& m, const std::string& path);

// A pixel is set iff its stored value >= 128.
BitMask2D load_mask_pgm(const std::string& path);

// Map values quantized like save_image.
void save_hfmap_pgm(const HighFreqMap& h, const std::string& path);

} // namespace amsr
