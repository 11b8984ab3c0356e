#pragma once

#include "amsr/freqmask.hpp"
#include "amsr/stats.hpp"
#include "amsr/tensor.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace amsr {

enum class Activation { none, relu, prelu };

// One masked body block: a 9C -> C product on unfolded columns (the 1x1
// stand-in for a 3x3 conv) plus activation. Pass-through at pruned pixels
// requires square channel counts.
struct MaskedConvBlock {
    ConvWeights1x1 weights;         // in_channels = 9 * feature channels
    Activation act = Activation::none;
    std::vector<float> prelu_slope; // per output channel, prelu only
};

// Row-major enumeration of mask 1-bits; the scatter targets of one block.
struct GatherPlan {
    std::vector<std::pair<int, int>> indices; // (y,x), strictly increasing
    std::uint64_t q = 0;
};

GatherPlan build_gather_plan(const BitMask2D& m);

enum class RunMode { train, infer };

// Dense-reference forward: unfold the mask-zeroed input, run the full GEMM,
// keep conv output only at masked pixels, copy the input elsewhere.
Tensor block_forward_train(const Tensor& g_in, const MaskedConvBlock& blk, const BitMask2D& m);

// Gather/GEMM/scatter forward over exactly the plan's columns. Gathered
// neighborhoods zero contributions from pruned or out-of-bounds neighbors,
// matching the train path bit for bit. Unmasked pixels are copied untouched.
Tensor block_forward_infer(const Tensor& g_in, const MaskedConvBlock& blk, const BitMask2D& m,
                           ExecStats* stats = nullptr);

// Sequential blocks sharing one mask; infer mode builds the gather plan once.
Tensor run_body_cnn(const Tensor& f, const std::vector<MaskedConvBlock>& blocks,
                    const BitMask2D& m, RunMode mode, ExecStats* stats = nullptr);

} // namespace amsr
