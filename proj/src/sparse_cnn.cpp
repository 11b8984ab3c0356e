#include "amsr/sparse_cnn.hpp"

#include <stdexcept>
#include <string>

namespace amsr {

namespace {

void check_block(const Tensor& g_in, const MaskedConvBlock& blk, const BitMask2D& m) {
    if (m.height != g_in.height() || m.width != g_in.width()) {
        throw std::invalid_argument("masked block: mask dims do not match feature dims");
    }
    if (blk.weights.in_channels != 9 * g_in.channels()) {
        throw std::invalid_argument("masked block: weights expect " +
                                    std::to_string(blk.weights.in_channels / 9) +
                                    " channels, input has " + std::to_string(g_in.channels()));
    }
    if (blk.weights.out_channels != g_in.channels()) {
        throw std::invalid_argument("masked block: pass-through needs matching in/out channels");
    }
    if (blk.act == Activation::prelu &&
        blk.prelu_slope.size() != static_cast<std::size_t>(blk.weights.out_channels)) {
        throw std::invalid_argument("masked block: prelu slope count must match out channels");
    }
}

inline float activate(float v, Activation act, const float* slope, int c) {
    switch (act) {
        case Activation::relu: return v > 0.0f ? v : 0.0f;
        case Activation::prelu: return v >= 0.0f ? v : slope[c] * v;
        case Activation::none: break;
    }
    return v;
}

Tensor infer_with_plan(const Tensor& g_in, const MaskedConvBlock& blk, const BitMask2D& m,
                       const GatherPlan& plan, ExecStats* stats) {
    check_block(g_in, blk, m);
    const int c = g_in.channels(), h = g_in.height(), w = g_in.width();
    const int cols = blk.weights.in_channels;

    Tensor out = g_in;
    std::vector<float> col(static_cast<std::size_t>(cols));
    const float* slope = blk.prelu_slope.data();

    for (const auto& [y, x] : plan.indices) {
        // Gathered column in the unfold layout (channel-major, offset minor);
        // pruned or out-of-bounds neighbors contribute exact zeros, so the
        // running sums match the dense GEMM on the mask-zeroed input bitwise.
        for (int ch = 0; ch < c; ++ch) {
            const float* src = g_in.channel(ch);
            for (int k = 0; k < 9; ++k) {
                const int sy = y + kUnfoldOffsets[k][0];
                const int sx = x + kUnfoldOffsets[k][1];
                float v = 0.0f;
                if (sy >= 0 && sy < h && sx >= 0 && sx < w && m.at(sy, sx)) {
                    v = src[static_cast<std::size_t>(sy) * w + sx];
                }
                col[static_cast<std::size_t>(ch) * 9 + k] = v;
            }
        }
        for (int o = 0; o < blk.weights.out_channels; ++o) {
            const float* row = blk.weights.row(o);
            double acc = blk.weights.bias[o];
            for (int i = 0; i < cols; ++i) acc += static_cast<double>(row[i]) * col[i];
            const float v = activate(static_cast<float>(acc), blk.act, slope, o);
            out.channel(o)[static_cast<std::size_t>(y) * w + x] = v;
        }
    }
    if (stats) {
        stats->gemm_macs += plan.q * static_cast<std::uint64_t>(cols) * blk.weights.out_channels;
    }
    return out;
}

} // namespace

GatherPlan build_gather_plan(const BitMask2D& m) {
    GatherPlan plan;
    plan.indices.reserve(static_cast<std::size_t>(m.popcount()));
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (m.at(y, x)) plan.indices.emplace_back(y, x);
        }
    }
    plan.q = plan.indices.size();
    return plan;
}

Tensor block_forward_train(const Tensor& g_in, const MaskedConvBlock& blk, const BitMask2D& m) {
    check_block(g_in, blk, m);
    const int c = g_in.channels(), h = g_in.height(), w = g_in.width();
    const std::size_t hw = static_cast<std::size_t>(h) * w;

    Tensor masked(c, h, w);
    for (int ch = 0; ch < c; ++ch) {
        const float* src = g_in.channel(ch);
        float* dst = masked.channel(ch);
        for (std::size_t p = 0; p < hw; ++p) dst[p] = m.bits[p] ? src[p] : 0.0f;
    }

    Tensor conv = gemm1x1(unfold3x3(masked), blk.weights);

    Tensor out = g_in;
    const float* slope = blk.prelu_slope.data();
    for (int o = 0; o < blk.weights.out_channels; ++o) {
        const float* cv = conv.channel(o);
        float* dst = out.channel(o);
        for (std::size_t p = 0; p < hw; ++p) {
            if (m.bits[p]) dst[p] = activate(cv[p], blk.act, slope, o);
        }
    }
    return out;
}

Tensor block_forward_infer(const Tensor& g_in, const MaskedConvBlock& blk, const BitMask2D& m,
                           ExecStats* stats) {
    return infer_with_plan(g_in, blk, m, build_gather_plan(m), stats);
}

Tensor run_body_cnn(const Tensor& f, const std::vector<MaskedConvBlock>& blocks,
                    const BitMask2D& m, RunMode mode, ExecStats* stats) {
    Tensor cur = f;
    if (mode == RunMode::train) {
        for (const auto& blk : blocks) cur = block_forward_train(cur, blk, m);
        return cur;
    }
    const GatherPlan plan = build_gather_plan(m);
    for (const auto& blk : blocks) cur = infer_with_plan(cur, blk, m, plan, stats);
    return cur;
}

} // namespace amsr
