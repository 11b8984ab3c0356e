#include "amsr/weights.hpp"

#include "amsr/errors.hpp"
#include "amsr/tensor.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace amsr {

namespace {

// Payload floats are little-endian on disk regardless of host order.
void swap_if_big_endian(std::vector<float>& v) {
    if constexpr (std::endian::native == std::endian::big) {
        for (float& f : v) {
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            u = ((u & 0xff) << 24) | ((u & 0xff00) << 8) | ((u >> 8) & 0xff00) | (u >> 24);
            std::memcpy(&f, &u, 4);
        }
    }
}

} // namespace

std::uint64_t TensorEntry::elements() const {
    std::uint64_t n = 1;
    for (int d : shape) n *= static_cast<std::uint64_t>(d);
    return n;
}

const TensorEntry* WeightStore::find(const std::string& name) const {
    for (const auto& e : manifest) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

std::vector<float> WeightStore::tensor(const TensorEntry& e) const {
    const std::uint64_t first = e.offset / 4;
    return {payload.begin() + static_cast<std::ptrdiff_t>(first),
            payload.begin() + static_cast<std::ptrdiff_t>(first + e.elements())};
}

WeightStore load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error(path + ": cannot open");

    char magic[7];
    in.read(magic, 7);
    if (in.gcount() != 7 || std::memcmp(magic, "AMSRW1\n", 7) != 0) {
        throw io_error(path + ": bad magic (want AMSRW1)");
    }

    std::string line;
    if (!std::getline(in, line)) throw io_error(path + ": missing manifest line");

    WeightStore ws;
    try {
        const auto j = nlohmann::json::parse(line);
        for (const auto& t : j.at("tensors")) {
            TensorEntry e;
            e.name = t.at("name").get<std::string>();
            for (const auto& d : t.at("shape")) {
                const int v = d.get<int>();
                if (v <= 0) throw io_error(path + ": non-positive dim in tensor " + e.name);
                e.shape.push_back(v);
            }
            e.offset = t.at("offset").get<std::uint64_t>();
            ws.manifest.push_back(std::move(e));
        }
    } catch (const io_error&) {
        throw;
    } catch (const std::exception& ex) {
        throw io_error(path + ": malformed manifest: " + ex.what());
    }

    std::vector<char> raw(std::istreambuf_iterator<char>(in), {});
    if (raw.size() % 4 != 0) throw io_error(path + ": payload is not a whole number of floats");
    ws.payload.resize(raw.size() / 4);
    std::memcpy(ws.payload.data(), raw.data(), raw.size());
    swap_if_big_endian(ws.payload);

    // Entries must tile the payload: ascending, adjacent, no gap or overlap.
    std::uint64_t expect = 0;
    for (const auto& e : ws.manifest) {
        if (e.offset != expect) {
            throw io_error(path + ": tensor " + e.name + " at offset " + std::to_string(e.offset) +
                           ", expected " + std::to_string(expect));
        }
        if (e.offset % 4 != 0) throw io_error(path + ": misaligned offset for " + e.name);
        expect += e.elements() * 4;
    }
    if (expect != ws.payload.size() * 4) {
        throw io_error(path + ": manifest declares " + std::to_string(expect) +
                       " payload bytes, file has " + std::to_string(ws.payload.size() * 4));
    }
    try {
        require_finite(ws.payload, "weight payload");
    } catch (const std::invalid_argument& ex) {
        throw io_error(path + ": " + ex.what());
    }
    return ws;
}

void save_weights(const WeightStore& ws, const std::string& path) {
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& e : ws.manifest) {
        tensors.push_back({{"name", e.name}, {"shape", e.shape}, {"offset", e.offset}});
    }
    const std::string manifest = nlohmann::json{{"tensors", tensors}}.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(path + ": cannot open for writing");
    out << "AMSRW1\n" << manifest << "\n";
    std::vector<float> payload = ws.payload;
    swap_if_big_endian(payload);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * 4));
    if (!out) throw io_error(path + ": write failed");
}

} // namespace amsr
