#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace amsr {

// Dense rank-3 float tensor, channel-major then row then column:
// index(c,y,x) = (c*H + y)*W + x. Values are immutable once a pipeline
// stage has produced them; operations return fresh tensors.
class Tensor {
public:
    Tensor() = default;

    // Zero-filled.
    Tensor(int channels, int height, int width);

    // Takes ownership of `data` (length must be C*H*W, all elements finite).
    Tensor(int channels, int height, int width, std::vector<float> data);

    int channels() const { return c_; }
    int height() const { return h_; }
    int width() const { return w_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float at(int c, int y, int x) const { return data_[idx(c, y, x)]; }
    float& at(int c, int y, int x) { return data_[idx(c, y, x)]; }

    const float* data() const { return data_.data(); }
    float* data() { return data_.data(); }
    const float* channel(int c) const { return data_.data() + static_cast<std::size_t>(c) * h_ * w_; }
    float* channel(int c) { return data_.data() + static_cast<std::size_t>(c) * h_ * w_; }

    std::span<const float> values() const { return data_; }

private:
    std::size_t idx(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * h_ + y) * w_ + x;
    }

    int c_ = 0, h_ = 0, w_ = 0;
    std::vector<float> data_;
};

// 3x3 convolution weights, taps laid out [out][in][3][3] row-major.
struct ConvWeights3x3 {
    int out_channels = 0;
    int in_channels = 0;
    std::vector<float> taps; // out*in*9
    std::vector<float> bias; // out

    ConvWeights3x3() = default;
    ConvWeights3x3(int out_ch, int in_ch, std::vector<float> taps, std::vector<float> bias);

    float tap(int o, int i, int k) const {
        return taps[(static_cast<std::size_t>(o) * in_channels + i) * 9 + k];
    }
};

// 1x1 convolution weights, taps laid out [out][in] row-major. When derived
// from a 3x3 kernel via reshape3x3_to_1x1, in_channels = 9 * original in.
struct ConvWeights1x1 {
    int out_channels = 0;
    int in_channels = 0;
    std::vector<float> taps; // out*in
    std::vector<float> bias; // out

    ConvWeights1x1() = default;
    ConvWeights1x1(int out_ch, int in_ch, std::vector<float> taps, std::vector<float> bias);

    const float* row(int o) const { return taps.data() + static_cast<std::size_t>(o) * in_channels; }
};

// Fixed unfold offset ordering within each channel group: (dy,dx) scans
// (-1,-1),(-1,0),(-1,1),(0,-1),(0,0),(0,1),(1,-1),(1,0),(1,1).
inline constexpr int kUnfoldOffsets[9][2] = {
    {-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 0}, {0, 1}, {1, -1}, {1, 0}, {1, 1},
};

Tensor pad_zero(const Tensor& t, int p);

// (C,H,W) -> (9C,H,W); the column at (y,x) lists the zero-padded 3x3
// neighborhood of every channel, channel-major then offset order above.
Tensor unfold3x3(const Tensor& t);

// Zero-padded stride-1 cross-correlation, bias per output channel.
Tensor conv3x3(const Tensor& t, const ConvWeights3x3& w);

// Per-pixel matrix-vector product plus bias.
Tensor gemm1x1(const Tensor& t, const ConvWeights1x1& w);

// Reorders taps so gemm1x1(unfold3x3(t), result) == conv3x3(t, w) exactly.
ConvWeights1x1 reshape3x3_to_1x1(const ConvWeights3x3& w);

// Depth-to-space: channel c*r*r + dy*r + dx moves to spatial offset (dy,dx).
Tensor pixel_shuffle(const Tensor& t, int r);

// Separable bicubic (a = -0.5), edge-clamped, kernel widened by 1/scale on
// downscale. Output sample i maps to source coordinate i/scale, so integer
// alignment reproduces source values exactly.
Tensor bicubic_resize(const Tensor& t, double scale);

// 10*log10(peak^2/MSE) over all channels and pixels; +infinity when equal.
double psnr(const Tensor& a, const Tensor& b, double peak);

// Throws std::invalid_argument when any element is NaN/Inf. Used at every
// data entry point (images, weight payloads, user-supplied buffers).
void require_finite(std::span<const float> v, const char* what);

} // namespace amsr
