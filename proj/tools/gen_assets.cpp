// Writes the bundled reference models (spec JSON + AMSRW1 weights) and the
// five-image benchmark corpus. Everything is seeded, so repeated runs emit
// byte-identical files.

#include "amsr/image_io.hpp"
#include "amsr/model.hpp"
#include "amsr/tensor.hpp"
#include "amsr/weights.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

// mt19937 output is pinned by the standard; the explicit 24-bit transform
// keeps draws identical across platforms (std distributions are not pinned).
struct Rng {
    std::mt19937 g;
    explicit Rng(std::uint32_t seed) : g(seed) {}
    float uniform(float lo, float hi) {
        return lo + (hi - lo) * (static_cast<float>(g() >> 8) * (1.0f / 16777216.0f));
    }
};

std::uint64_t fan_in(const std::vector<int>& shape) {
    // [out,in,3,3] convs and [out,in] matrices both use everything past dim 0.
    std::uint64_t n = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) n *= static_cast<std::uint64_t>(shape[i]);
    return n;
}

bool ends_with(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

// Scale rules keep the residual stream bounded through deep stacks: branch
// outputs (proj, fc2) start small, norms start near identity.
void fill_tensor(const amsr::TensorEntry& e, Rng& rng, std::vector<float>& out) {
    const std::uint64_t n = e.elements();
    float lo = 0.0f, hi = 0.0f;
    if (ends_with(e.name, ".gamma")) {
        lo = 0.9f;
        hi = 1.1f;
    } else if (ends_with(e.name, ".beta") || ends_with(e.name, ".bias")) {
        lo = -0.05f;
        hi = 0.05f;
    } else if (ends_with(e.name, ".prelu")) {
        lo = 0.1f;
        hi = 0.3f;
    } else { // .weight
        float a = 1.0f / std::sqrt(static_cast<float>(fan_in(e.shape)));
        if (e.name.find(".proj.") != std::string::npos ||
            e.name.find(".fc2.") != std::string::npos) {
            a *= 0.2f;
        }
        lo = -a;
        hi = a;
    }
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(rng.uniform(lo, hi));
}

void write_model(const fs::path& dir, const std::string& spec_json, std::uint32_t seed) {
    const amsr::ModelSpec spec = amsr::parse_model_spec(spec_json, "builtin");
    std::ofstream js(dir / (spec.name + ".json"), std::ios::binary);
    js << spec_json;

    amsr::WeightStore ws;
    ws.manifest = amsr::expected_tensors(spec);
    Rng rng(seed);
    for (const auto& e : ws.manifest) fill_tensor(e, rng, ws.payload);
    amsr::save_weights(ws, (dir / (spec.name + ".amsrw")).string());
}

// Each corpus image is a smooth mid-gray field carrying four checkered
// calibration tiles. A tile of r rows turns, after k=5 dilation, into an
// r+2-row band inside its 8x8 window, so the four tiles pin window means
// near 0.375, 0.5, 0.75 and 1.0 while spill stays below 0.3.
void write_corpus_image(const fs::path& path, int index) {
    constexpr int H = 80, W = 80, win = 8;
    Rng rng(0x5EED0000u + static_cast<std::uint32_t>(index));

    const float fx = rng.uniform(0.02f, 0.05f); // cycles per pixel, low-frequency
    const float fy = rng.uniform(0.02f, 0.05f);
    const float phase = rng.uniform(0.0f, 6.28318f);
    const float tint[3] = {rng.uniform(-0.04f, 0.04f), rng.uniform(-0.04f, 0.04f),
                           rng.uniform(-0.04f, 0.04f)};

    amsr::Tensor img(3, H, W);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const float base =
                0.5f + 0.04f * std::sin(6.28318f * (fx * x + fy * y) + phase);
            for (int c = 0; c < 3; ++c) {
                float v = base + tint[c];
                img.at(c, y, x) = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
            }
        }
    }

    const int tile_rows[4] = {1, 2, 4, 6};
    const int tile_at[4][2] = {{2, 2}, {2, 6}, {6, 2}, {6, 6}}; // window (row, col)
    for (int t = 0; t < 4; ++t) {
        const int r = tile_rows[(t + index) % 4];
        const int y0 = tile_at[t][0] * win, x0 = tile_at[t][1] * win;
        for (int dy = 0; dy < r; ++dy) {
            for (int dx = 0; dx < win; ++dx) {
                const float v = ((y0 + dy + x0 + dx) % 2 == 0) ? 0.0f : 1.0f;
                for (int c = 0; c < 3; ++c) img.at(c, y0 + dy, x0 + dx) = v;
            }
        }
    }
    amsr::save_image(img, path.string());
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: amsr-gen-assets <out_dir>\n";
        return 2;
    }
    const fs::path root = argv[1];
    fs::create_directories(root / "models");
    fs::create_directories(root / "corpus");

    write_model(root / "models", R"({
  "name": "tiny-cnn",
  "scale": 4,
  "channels": 16,
  "body": {"kind": "cnn", "blocks": 4, "activation": "relu"},
  "tail": {"final_conv": false}
}
)",
                0xC0FFEE01u);

    write_model(root / "models", R"({
  "name": "tiny-stl",
  "scale": 4,
  "channels": 32,
  "body": {"kind": "stl", "layers": 24, "win": 8, "heads": 4, "hidden": 64},
  "tail": {"final_conv": false}
}
)",
                0xC0FFEE02u);

    for (int i = 0; i < 5; ++i) {
        write_corpus_image(root / "corpus" / ("img" + std::to_string(i + 1) + ".ppm"), i);
    }
    return 0;
}
