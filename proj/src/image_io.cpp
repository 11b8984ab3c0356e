#include "amsr/image_io.hpp"

#include "amsr/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

namespace amsr {

namespace {

// Whitespace-and-comment aware header token reader. Comments run from '#'
// to end of line anywhere in the header.
std::string next_token(std::istream& in, const std::string& path) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    if (tok.empty()) throw io_error(path + ": truncated header");
    return tok;
}

int parse_dim(const std::string& tok, const std::string& path, const char* what) {
    std::size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(tok, &pos);
    } catch (const std::exception&) {
        throw io_error(path + ": bad " + what + " '" + tok + "'");
    }
    if (pos != tok.size() || v <= 0) throw io_error(path + ": bad " + what + " '" + tok + "'");
    return v;
}

struct RawImage {
    bool gray = false;
    int width = 0, height = 0;
    std::vector<std::uint8_t> bytes;
};

RawImage load_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error(path + ": cannot open");

    RawImage img;
    const std::string magic = next_token(in, path);
    if (magic == "P5") {
        img.gray = true;
    } else if (magic != "P6") {
        throw io_error(path + ": unsupported magic '" + magic + "' (want P5 or P6)");
    }
    img.width = parse_dim(next_token(in, path), path, "width");
    img.height = parse_dim(next_token(in, path), path, "height");
    const int maxval = parse_dim(next_token(in, path), path, "maxval");
    if (maxval != 255) {
        throw io_error(path + ": unsupported maxval " + std::to_string(maxval) + " (want 255)");
    }
    // The single whitespace byte after maxval was consumed by next_token.

    const std::size_t n =
        static_cast<std::size_t>(img.width) * img.height * (img.gray ? 1 : 3);
    img.bytes.resize(n);
    in.read(reinterpret_cast<char*>(img.bytes.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw io_error(path + ": truncated pixel data");
    return img;
}

std::uint8_t quantize(float v) {
    const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

void write_file(const std::string& path, const std::string& header,
                const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(path + ": cannot open for writing");
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error(path + ": write failed");
}

} // namespace

Tensor load_image(const std::string& path) {
    const RawImage img = load_raw(path);
    const std::size_t hw = static_cast<std::size_t>(img.width) * img.height;
    std::vector<float> data(hw * 3);
    if (img.gray) {
        for (std::size_t p = 0; p < hw; ++p) {
            const float v = static_cast<float>(img.bytes[p]) / 255.0f;
            data[p] = data[hw + p] = data[2 * hw + p] = v;
        }
    } else {
        for (std::size_t p = 0; p < hw; ++p) {
            data[p] = static_cast<float>(img.bytes[3 * p]) / 255.0f;
            data[hw + p] = static_cast<float>(img.bytes[3 * p + 1]) / 255.0f;
            data[2 * hw + p] = static_cast<float>(img.bytes[3 * p + 2]) / 255.0f;
        }
    }
    return Tensor(3, img.height, img.width, std::move(data));
}

void save_image(const Tensor& t, const std::string& path) {
    const int h = t.height(), w = t.width();
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    if (t.channels() == 1) {
        std::vector<std::uint8_t> bytes(hw);
        for (std::size_t p = 0; p < hw; ++p) bytes[p] = quantize(t.data()[p]);
        write_file(path, "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n", bytes);
        return;
    }
    if (t.channels() != 3) {
        throw std::invalid_argument("save_image: expected 1 or 3 channels");
    }
    std::vector<std::uint8_t> bytes(hw * 3);
    const float* r = t.channel(0);
    const float* g = t.channel(1);
    const float* b = t.channel(2);
    for (std::size_t p = 0; p < hw; ++p) {
        bytes[3 * p] = quantize(r[p]);
        bytes[3 * p + 1] = quantize(g[p]);
        bytes[3 * p + 2] = quantize(b[p]);
    }
    write_file(path, "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n", bytes);
}

void save_mask_pgm(const BitMask2D& m, const std::string& path) {
    std::vector<std::uint8_t> bytes(m.bits.size());
    for (std::size_t p = 0; p < bytes.size(); ++p) bytes[p] = m.bits[p] ? 255 : 0;
    write_file(path, "P5\n" + std::to_string(m.width) + " " + std::to_string(m.height) + "\n255\n",
               bytes);
}

BitMask2D load_mask_pgm(const std::string& path) {
    const RawImage img = load_raw(path);
    if (!img.gray) throw io_error(path + ": mask must be a P5 grayscale file");
    BitMask2D m(img.height, img.width);
    for (std::size_t p = 0; p < img.bytes.size(); ++p) m.bits[p] = img.bytes[p] >= 128 ? 1 : 0;
    return m;
}

void save_hfmap_pgm(const HighFreqMap& h, const std::string& path) {
    std::vector<std::uint8_t> bytes(h.values.size());
    for (std::size_t p = 0; p < bytes.size(); ++p) bytes[p] = quantize(h.values[p]);
    write_file(path, "P5\n" + std::to_string(h.width) + " " + std::to_string(h.height) + "\n255\n",
               bytes);
}

} // namespace amsr
