#pragma once

#include <cstdint>

namespace amsr {

// Multiply-add counter threaded through the sparse infer paths. Counts only
// GEMM-shaped work (conv columns, qkv/proj/mlp, attention products); LN,
// softmax and activations are bookkeeping, tracked analytically instead.
struct ExecStats {
    std::uint64_t gemm_macs = 0;
};

} // namespace amsr
