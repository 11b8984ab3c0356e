#pragma once

#include "amsr/sparse_cnn.hpp"
#include "amsr/sparse_transformer.hpp"
#include "amsr/weights.hpp"

#include <string>
#include <vector>

namespace amsr {

enum class BodyKind { cnn, stl };

// Architecture description, decoupled from weights. JSON form:
//   {"name":..., "scale":2|3|4, "channels":C,
//    "body":{"kind":"cnn","blocks":N,"activation":"relu|prelu|none"} |
//           {"kind":"stl","layers":N,"win":w,"heads":h,"hidden":m},
//    "tail":{"final_conv":bool}}
struct ModelSpec {
    std::string name;
    int scale = 0;
    int channels = 0;
    BodyKind body_kind = BodyKind::cnn;
    int body_depth = 0; // blocks (cnn) or layers (stl)
    Activation activation = Activation::none; // cnn only
    int win = 0, heads = 0, hidden = 0;       // stl only
    bool final_conv = false;
};

// Throws io_error on malformed or out-of-range fields.
ModelSpec load_model_spec(const std::string& path);
ModelSpec parse_model_spec(const std::string& json_text, const std::string& origin);

// Expected weight tensor names, in payload order. Conv weights are stored
// [out,in,3,3]; body 3x3 kernels are reshaped to unfold-order 1x1 at bind.
std::vector<TensorEntry> expected_tensors(const ModelSpec& spec);

struct BoundModel {
    ModelSpec spec;
    ConvWeights3x3 head;                // 3 -> C
    std::vector<MaskedConvBlock> cnn_body;
    std::vector<StlWeights> stl_body;
    ConvWeights3x3 tail_conv;           // C -> 3*scale^2
    ConvWeights3x3 tail_final;          // 3 -> 3, only when spec.final_conv
};

// Resolves every spec tensor by name and shape; missing or mismatched
// tensors raise bind_error naming the tensor. Extra store tensors are
// reported through `warnings` when given.
BoundModel bind(const ModelSpec& spec, const WeightStore& ws,
                std::vector<std::string>* warnings = nullptr);

} // namespace amsr
