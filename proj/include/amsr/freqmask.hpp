#pragma once

#include "amsr/tensor.hpp"

#include <cstdint>
#include <vector>

namespace amsr {

// Binary per-pixel map: 1 = process, 0 = prune.
struct BitMask2D {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits; // H*W, each 0 or 1

    BitMask2D() = default;
    BitMask2D(int h, int w) : height(h), width(w), bits(static_cast<std::size_t>(h) * w, 0) {}

    std::uint8_t at(int y, int x) const { return bits[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int y, int x) { return bits[static_cast<std::size_t>(y) * width + x]; }

    std::uint64_t popcount() const;
    double coverage() const;
};

// |image - blur(image)| on luma, max-normalized into [0,1].
struct HighFreqMap {
    int height = 0;
    int width = 0;
    std::vector<float> values; // H*W in [0,1]

    HighFreqMap() = default;
    HighFreqMap(int h, int w, std::vector<float> v);

    float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Per-window keep/prune bits over a rows x cols grid of win x win windows.
struct WindowDecision {
    int rows = 0;
    int cols = 0;
    int win = 0;
    std::vector<std::uint8_t> bits; // rows*cols

    WindowDecision() = default;
    WindowDecision(int r, int c, int w) : rows(r), cols(c), win(w), bits(static_cast<std::size_t>(r) * c, 0) {}

    std::uint8_t at(int r, int c) const { return bits[static_cast<std::size_t>(r) * cols + c]; }
    std::uint8_t& at(int r, int c) { return bits[static_cast<std::size_t>(r) * cols + c]; }

    std::uint64_t kept() const;
};

struct KmeansResult {
    double center_low = 0.0;
    double center_high = 0.0;
    double threshold = 0.0; // midpoint of centers
    int iterations = 0;
    BitMask2D mask;
};

// BT.601 luma of an RGB tensor in [0,1].
Tensor to_luma(const Tensor& img);

// Separable Gaussian, kernel normalized per axis, reflect padding (border
// pixel not repeated).
Tensor gaussian_blur(const Tensor& t, int size, double sigma);

HighFreqMap highfreq_map(const Tensor& lr);

// 1-D Lloyd's with k=2. The initial decision boundary is 0.5: values below
// it seed the low cluster, the rest the high cluster, and the seed centers
// are the cluster means. Degenerate inputs (all-zero map, or an empty side
// of the initial split) yield an all-zero mask with iterations = 0.
KmeansResult kmeans2_binarize(const HighFreqMap& h, int max_iter = 10);

// bit = 1 iff value >= thresh.
BitMask2D binarize_fixed(const HighFreqMap& h, double thresh);

// bit = 1 iff value > lower median; constant maps yield all-zero.
BitMask2D binarize_median(const HighFreqMap& h);

// Morphological dilation with a k x k all-ones structuring element.
BitMask2D dilate(const BitMask2D& m, int k);

// Per non-overlapping win x win window, bit = 1 iff mean >= sigma.
WindowDecision window_decision(const BitMask2D& m, int win, double sigma);

} // namespace amsr
