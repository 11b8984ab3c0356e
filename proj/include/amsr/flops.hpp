#pragma once

#include "amsr/freqmask.hpp"
#include "amsr/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace amsr {

enum class ConvKind { k3x3, k1x1 };

// Dense convolution multiply-adds: h*w*c_in*c_out*(9 or 1).
std::uint64_t macs_conv(ConvKind kind, int c_in, int c_out, int h, int w);

// Masked 3x3-as-1x1 multiply-adds: q*9*c_in*c_out.
std::uint64_t macs_masked_conv(int c_in, int c_out, std::uint64_t q);

// Windowed attention layer multiply-adds over kept windows:
// kept * [qkv 3*win^2*C^2 + attention 2*heads*win^4*(C/heads)
//         + proj win^2*C^2 + mlp 2*win^2*C*hidden].
std::uint64_t macs_stl(int dim, int heads, int hidden, int win, std::uint64_t kept_windows);

struct LayerFlops {
    std::string name;
    std::uint64_t dense_macs = 0;
    std::uint64_t sparse_macs = 0;
    // LN, softmax, activations and gather/scatter bookkeeping; reported but
    // excluded from the headline fraction, which concerns GEMM work only.
    std::uint64_t overhead_ops = 0;
};

// MACs are the canonical unit; FLOPs = 2*MACs wherever printed. For CNN
// bodies q/hw count pixels; for Transformer bodies they count kept/real
// windows (windows that lie fully in padding are excluded on both sides).
struct FlopsReport {
    std::vector<LayerFlops> per_layer;
    std::uint64_t head_macs = 0;
    std::uint64_t body_dense_macs = 0;
    std::uint64_t body_sparse_macs = 0;
    std::uint64_t tail_macs = 0;
    std::uint64_t q = 0;
    std::uint64_t hw = 0;

    std::uint64_t total_dense() const { return head_macs + body_dense_macs + tail_macs; }
    std::uint64_t total_sparse() const { return head_macs + body_sparse_macs + tail_macs; }
    double fraction() const;   // total_sparse / total_dense
    double body_share() const; // body_dense / total_dense

    // Rows "layer,dense_macs,sparse_macs,fraction", one per layer plus total.
    std::string to_csv() const;
    std::string to_text() const;
};

// Analytic report for a CNN-body spec under a pixel mask (mask dims are the
// model input dims).
FlopsReport report(const ModelSpec& spec, const BitMask2D& m);

// Analytic report for a Transformer-body spec under a window decision over
// the padded grid of an img_h x img_w input.
FlopsReport report(const ModelSpec& spec, const WindowDecision& mw, int img_h, int img_w);

} // namespace amsr
