#pragma once

#include "amsr/freqmask.hpp"
#include "amsr/sparse_cnn.hpp"
#include "amsr/stats.hpp"
#include "amsr/tensor.hpp"

#include <utility>
#include <vector>

namespace amsr {

// One windowed attention layer: pre-norm MSA + pre-norm MLP, non-shifted
// windows, no relative position bias. Weight matrices are row-major with the
// output index on rows.
struct StlWeights {
    int dim = 0;    // C
    int heads = 0;  // C divisible by heads
    int win = 0;    // window side
    int hidden = 0; // MLP width

    std::vector<float> qkv_w, qkv_b;   // [3C x C], [3C]
    std::vector<float> proj_w, proj_b; // [C x C], [C]
    std::vector<float> ln1_g, ln1_b;   // [C]
    std::vector<float> ln2_g, ln2_b;   // [C]
    std::vector<float> fc1_w, fc1_b;   // [hidden x C], [hidden]
    std::vector<float> fc2_w, fc2_b;   // [C x hidden], [C]
};

// Throws std::invalid_argument on inconsistent dimensions or array sizes.
void validate_stl_weights(const StlWeights& w);

// Windows flattened to token runs: window i occupies tokens
// [i*tokens_per_window, (i+1)*tokens_per_window) with channels last.
struct TokenBatch {
    int rows = 0, cols = 0; // window grid of the source tensor
    int win = 0;
    int dim = 0;
    std::vector<std::pair<int, int>> origin; // grid (row,col) per window
    std::vector<float> tokens;               // n_windows * tokens_per_window * dim

    int n_windows() const { return static_cast<int>(origin.size()); }
    int tokens_per_window() const {
        return origin.empty() ? 0
                              : static_cast<int>(tokens.size() / origin.size() / static_cast<std::size_t>(dim));
    }
    float* window(int i) {
        return tokens.data() + static_cast<std::size_t>(i) * tokens_per_window() * dim;
    }
    const float* window(int i) const {
        return tokens.data() + static_cast<std::size_t>(i) * tokens_per_window() * dim;
    }
};

// (C,H,W) -> row-major windows, pixels row-major within a window, channels
// last. H and W must be divisible by win.
TokenBatch window_partition(const Tensor& f, int win);

// Exact inverse of window_partition; the batch must cover the full grid.
Tensor window_merge(const TokenBatch& tb, int H, int W);

// Per-token normalization over the channel axis, eps 1e-5, population
// variance. tokens.size() must be a multiple of dim.
std::vector<float> layer_norm(const std::vector<float>& tokens, int dim,
                              const std::vector<float>& gamma, const std::vector<float>& beta);

// Multi-head softmax attention within each window independently, followed by
// the output projection. Scale is 1/sqrt(C/heads).
TokenBatch window_msa(const TokenBatch& tb, const StlWeights& w);

// Post-softmax attention probabilities of one window, laid out [heads][n][n].
// This is the matrix the forward pass actually applies; rows sum to 1.
std::vector<double> attention_matrix(const TokenBatch& tb, int window, const StlWeights& w);

// Dense-reference forward: both sublayers see the window-masked input inside
// the norm, residuals add the unmasked stream. Pruned windows therefore still
// receive bias-driven updates; the infer path is the canonical semantics.
Tensor stl_forward_train(const Tensor& f, const StlWeights& w, const WindowDecision& mw);

// Token-pruned forward: kept windows run the full pre-norm block, pruned
// windows pass through bit-identically.
Tensor stl_forward_infer(const Tensor& f, const StlWeights& w, const WindowDecision& mw,
                         ExecStats* stats = nullptr);

// Sequential layers sharing one decision; infer mode gathers kept windows
// once, runs every layer on the packed batch, and scatters once.
Tensor run_body_stl(const Tensor& f, const std::vector<StlWeights>& layers,
                    const WindowDecision& mw, RunMode mode, ExecStats* stats = nullptr);

} // namespace amsr
