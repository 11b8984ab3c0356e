#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace amsr {

struct TensorEntry {
    std::string name;
    std::vector<int> shape;
    std::uint64_t offset = 0; // bytes into the payload

    std::uint64_t elements() const;
};

// Container layout: "AMSRW1\n", one JSON manifest line
// {"tensors":[{"name":...,"shape":[...],"offset":N},...]}\n, then the
// little-endian float32 payload. Entries tile the payload in order.
struct WeightStore {
    std::vector<TensorEntry> manifest;
    std::vector<float> payload;

    const TensorEntry* find(const std::string& name) const;
    std::vector<float> tensor(const TensorEntry& e) const;
};

// Throws io_error on bad magic, malformed manifest, offsets that do not tile
// the payload, or non-finite values.
WeightStore load_weights(const std::string& path);

void save_weights(const WeightStore& ws, const std::string& path);

} // namespace amsr
