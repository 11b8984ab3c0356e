#include "amsr/freqmask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace amsr {

std::uint64_t BitMask2D::popcount() const {
    return std::accumulate(bits.begin(), bits.end(), std::uint64_t{0});
}

double BitMask2D::coverage() const {
    if (bits.empty()) return 0.0;
    return static_cast<double>(popcount()) / static_cast<double>(bits.size());
}

std::uint64_t WindowDecision::kept() const {
    return std::accumulate(bits.begin(), bits.end(), std::uint64_t{0});
}

HighFreqMap::HighFreqMap(int h, int w, std::vector<float> v) : height(h), width(w), values(std::move(v)) {
    if (h <= 0 || w <= 0) throw std::invalid_argument("highfreq map dimensions must be positive");
    if (values.size() != static_cast<std::size_t>(h) * w) {
        throw std::invalid_argument("highfreq map data length does not match H*W");
    }
    for (float x : values) {
        if (!(x >= 0.0f && x <= 1.0f)) {
            throw std::invalid_argument("highfreq map values must lie in [0,1]");
        }
    }
}

Tensor to_luma(const Tensor& img) {
    if (img.channels() != 3) {
        throw std::invalid_argument("to_luma: expected 3 channels, got " + std::to_string(img.channels()));
    }
    const int h = img.height(), w = img.width();
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    std::vector<float> data(hw);
    const float* r = img.channel(0);
    const float* g = img.channel(1);
    const float* b = img.channel(2);
    for (std::size_t i = 0; i < hw; ++i) {
        data[i] = 0.299f * r[i] + 0.587f * g[i] + 0.114f * b[i];
    }
    return Tensor(1, h, w, std::move(data));
}

namespace {

// reflect-101: -1 -> 1, n -> n-2; folds repeatedly for tiny extents.
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

std::vector<double> gaussian_taps(int size, double sigma) {
    const int r = (size - 1) / 2;
    std::vector<double> taps(size);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        taps[i + r] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        sum += taps[i + r];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

} // namespace

Tensor gaussian_blur(const Tensor& t, int size, double sigma) {
    if (size <= 0 || size % 2 == 0) throw std::invalid_argument("gaussian_blur: kernel size must be odd");
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_blur: sigma must be positive");
    if (size == 1) return t;

    const auto taps = gaussian_taps(size, sigma);
    const int r = (size - 1) / 2;
    const int c = t.channels(), h = t.height(), w = t.width();

    Tensor mid(c, h, w);
    for (int ch = 0; ch < c; ++ch) {
        const float* src = t.channel(ch);
        float* dst = mid.channel(ch);
        for (int y = 0; y < h; ++y) {
            const float* row = src + static_cast<std::size_t>(y) * w;
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int k = -r; k <= r; ++k) acc += taps[k + r] * row[reflect_index(x + k, w)];
                dst[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
            }
        }
    }
    Tensor out(c, h, w);
    for (int ch = 0; ch < c; ++ch) {
        const float* src = mid.channel(ch);
        float* dst = out.channel(ch);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int k = -r; k <= r; ++k) {
                    acc += taps[k + r] * src[static_cast<std::size_t>(reflect_index(y + k, h)) * w + x];
                }
                dst[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
            }
        }
    }
    return out;
}

HighFreqMap highfreq_map(const Tensor& lr) {
    const Tensor luma = to_luma(lr);
    const Tensor blurred = gaussian_blur(luma, 5, 1.0);
    const int h = lr.height(), w = lr.width();
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    std::vector<float> values(hw);
    float vmax = 0.0f;
    const float* a = luma.data();
    const float* b = blurred.data();
    for (std::size_t i = 0; i < hw; ++i) {
        values[i] = std::fabs(a[i] - b[i]);
        vmax = std::max(vmax, values[i]);
    }
    if (vmax < 1e-8f) {
        std::fill(values.begin(), values.end(), 0.0f);
    } else {
        for (float& v : values) v = std::min(1.0f, v / vmax);
    }
    return HighFreqMap(h, w, std::move(values));
}

KmeansResult kmeans2_binarize(const HighFreqMap& h, int max_iter) {
    KmeansResult res;
    res.mask = BitMask2D(h.height, h.width);
    const auto& v = h.values;
    const std::size_t n = v.size();

    double sum_lo = 0.0, sum_hi = 0.0;
    std::size_t n_lo = 0, n_hi = 0;
    float vmax = 0.0f;
    for (float x : v) {
        vmax = std::max(vmax, x);
        if (x < 0.5f) {
            sum_lo += x;
            ++n_lo;
        } else {
            sum_hi += x;
            ++n_hi;
        }
    }
    if (vmax < 1e-8f || n_lo == 0 || n_hi == 0) {
        const double mean = n ? (sum_lo + sum_hi) / static_cast<double>(n) : 0.0;
        res.center_low = res.center_high = res.threshold = mean;
        res.iterations = 0;
        return res; // degenerate: all-zero mask
    }

    double c_lo = sum_lo / static_cast<double>(n_lo);
    double c_hi = sum_hi / static_cast<double>(n_hi);
    double prev_thr = 0.5;
    int iters = 0;
    while (iters < max_iter) {
        const double thr = 0.5 * (c_lo + c_hi);
        ++iters;
        if (thr == prev_thr) break; // same boundary => same assignment
        sum_lo = sum_hi = 0.0;
        n_lo = n_hi = 0;
        for (float x : v) {
            if (static_cast<double>(x) >= thr) {
                sum_hi += x;
                ++n_hi;
            } else {
                sum_lo += x;
                ++n_lo;
            }
        }
        const double new_lo = n_lo ? sum_lo / static_cast<double>(n_lo) : c_lo;
        const double new_hi = n_hi ? sum_hi / static_cast<double>(n_hi) : c_hi;
        if (new_lo == c_lo && new_hi == c_hi) {
            prev_thr = thr;
            break; // assignments stable
        }
        c_lo = new_lo;
        c_hi = new_hi;
        prev_thr = thr;
    }

    res.center_low = c_lo;
    res.center_high = c_hi;
    res.threshold = 0.5 * (c_lo + c_hi);
    res.iterations = iters;
    for (std::size_t i = 0; i < n; ++i) {
        res.mask.bits[i] = (static_cast<double>(v[i]) >= res.threshold) ? 1 : 0;
    }
    return res;
}

BitMask2D binarize_fixed(const HighFreqMap& h, double thresh) {
    // Out-of-range thresholds degrade gracefully: <=0 keeps everything,
    // >1 keeps nothing. The CLI validates its own [0,1] surface separately.
    BitMask2D m(h.height, h.width);
    for (std::size_t i = 0; i < h.values.size(); ++i) {
        m.bits[i] = (static_cast<double>(h.values[i]) >= thresh) ? 1 : 0;
    }
    return m;
}

BitMask2D binarize_median(const HighFreqMap& h) {
    std::vector<float> sorted(h.values);
    // lower median
    const std::size_t mid = (sorted.size() - 1) / 2;
    std::nth_element(sorted.begin(), sorted.begin() + mid, sorted.end());
    const float median = sorted[mid];
    BitMask2D m(h.height, h.width);
    for (std::size_t i = 0; i < h.values.size(); ++i) {
        m.bits[i] = (h.values[i] > median) ? 1 : 0;
    }
    return m;
}

BitMask2D dilate(const BitMask2D& m, int k) {
    if (k <= 0 || k % 2 == 0) throw std::invalid_argument("dilate: kernel size must be odd");
    if (k == 1) return m;
    const int r = k / 2;
    const int h = m.height, w = m.width;
    // box structuring element is separable: horizontal OR, then vertical OR
    BitMask2D mid(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t hit = 0;
            const int lo = std::max(0, x - r), hi = std::min(w - 1, x + r);
            for (int s = lo; s <= hi && !hit; ++s) hit = m.at(y, s);
            mid.at(y, x) = hit;
        }
    }
    BitMask2D out(h, w);
    for (int y = 0; y < h; ++y) {
        const int lo = std::max(0, y - r), hi = std::min(h - 1, y + r);
        for (int x = 0; x < w; ++x) {
            std::uint8_t hit = 0;
            for (int s = lo; s <= hi && !hit; ++s) hit = mid.at(s, x);
            out.at(y, x) = hit;
        }
    }
    return out;
}

WindowDecision window_decision(const BitMask2D& m, int win, double sigma) {
    if (win <= 0) throw std::invalid_argument("window_decision: window size must be positive");
    if (m.height % win != 0 || m.width % win != 0) {
        throw std::invalid_argument("window_decision: mask dims must be divisible by window size");
    }
    const int rows = m.height / win, cols = m.width / win;
    WindowDecision d(rows, cols, win);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            std::uint64_t count = 0;
            for (int y = r * win; y < (r + 1) * win; ++y) {
                for (int x = c * win; x < (c + 1) * win; ++x) count += m.at(y, x);
            }
            const double mean = static_cast<double>(count) / (static_cast<double>(win) * win);
            d.at(r, c) = (mean >= sigma) ? 1 : 0;
        }
    }
    return d;
}

} // namespace amsr
