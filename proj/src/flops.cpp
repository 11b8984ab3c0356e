#include "amsr/flops.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace amsr {

namespace {

std::string fmt_fraction(double f) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", f);
    return buf;
}

std::uint64_t u64(int v) { return static_cast<std::uint64_t>(v); }

} // namespace

std::uint64_t macs_conv(ConvKind kind, int c_in, int c_out, int h, int w) {
    if (c_in <= 0 || c_out <= 0 || h <= 0 || w <= 0) {
        throw std::invalid_argument("macs_conv: dimensions must be positive");
    }
    return u64(h) * u64(w) * u64(c_in) * u64(c_out) * (kind == ConvKind::k3x3 ? 9 : 1);
}

std::uint64_t macs_masked_conv(int c_in, int c_out, std::uint64_t q) {
    if (c_in <= 0 || c_out <= 0) {
        throw std::invalid_argument("macs_masked_conv: channels must be positive");
    }
    return q * 9 * u64(c_in) * u64(c_out);
}

std::uint64_t macs_stl(int dim, int heads, int hidden, int win, std::uint64_t kept_windows) {
    if (dim <= 0 || heads <= 0 || hidden <= 0 || win <= 0 || dim % heads != 0) {
        throw std::invalid_argument("macs_stl: bad dimensions");
    }
    const std::uint64_t n = u64(win) * u64(win); // tokens per window
    const std::uint64_t C = u64(dim);
    const std::uint64_t bracket = 3 * n * C * C                       // qkv
                                  + 2 * u64(heads) * n * n * (C / heads) // scores + context
                                  + n * C * C                         // proj
                                  + 2 * n * C * u64(hidden);          // mlp
    return kept_windows * bracket;
}

double FlopsReport::fraction() const {
    const std::uint64_t d = total_dense();
    return d == 0 ? 1.0 : static_cast<double>(total_sparse()) / static_cast<double>(d);
}

double FlopsReport::body_share() const {
    const std::uint64_t d = total_dense();
    return d == 0 ? 0.0 : static_cast<double>(body_dense_macs) / static_cast<double>(d);
}

std::string FlopsReport::to_csv() const {
    std::ostringstream os;
    os << "layer,dense_macs,sparse_macs,fraction\n";
    for (const auto& l : per_layer) {
        const double f =
            l.dense_macs == 0 ? 1.0 : static_cast<double>(l.sparse_macs) / l.dense_macs;
        os << l.name << "," << l.dense_macs << "," << l.sparse_macs << "," << fmt_fraction(f)
           << "\n";
    }
    os << "total," << total_dense() << "," << total_sparse() << "," << fmt_fraction(fraction())
       << "\n";
    return os.str();
}

std::string FlopsReport::to_text() const {
    std::ostringstream os;
    os << "layer                 dense_macs    sparse_macs   overhead_ops\n";
    for (const auto& l : per_layer) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%-20s %12llu %14llu %14llu\n", l.name.c_str(),
                      static_cast<unsigned long long>(l.dense_macs),
                      static_cast<unsigned long long>(l.sparse_macs),
                      static_cast<unsigned long long>(l.overhead_ops));
        os << buf;
    }
    os << "processed units: " << q << " of " << hw << "\n";
    os << "dense total:  " << total_dense() << " MACs (" << 2 * total_dense() << " FLOPs)\n";
    os << "sparse total: " << total_sparse() << " MACs (" << 2 * total_sparse() << " FLOPs)\n";
    os << "body share of dense: " << fmt_fraction(body_share()) << "\n";
    os << "sparse fraction: " << fmt_fraction(fraction()) << "\n";
    return os.str();
}

namespace {

void add_head_tail(FlopsReport& r, const ModelSpec& spec, int h, int w) {
    const std::uint64_t head = macs_conv(ConvKind::k3x3, 3, spec.channels, h, w);
    r.head_macs = head;
    r.per_layer.insert(r.per_layer.begin(), {"head", head, head, 0});

    const int up = 3 * spec.scale * spec.scale;
    const std::uint64_t tail = macs_conv(ConvKind::k3x3, spec.channels, up, h, w);
    r.per_layer.push_back({"tail.conv", tail, tail, 0});
    r.tail_macs = tail;
    if (spec.final_conv) {
        const std::uint64_t fin =
            macs_conv(ConvKind::k3x3, 3, 3, h * spec.scale, w * spec.scale);
        r.per_layer.push_back({"tail.final", fin, fin, 0});
        r.tail_macs += fin;
    }
}

} // namespace

FlopsReport report(const ModelSpec& spec, const BitMask2D& m) {
    if (spec.body_kind != BodyKind::cnn) {
        throw std::invalid_argument("flops report: pixel-mask report needs a cnn body");
    }
    const int h = m.height, w = m.width;
    FlopsReport r;
    r.q = m.popcount();
    r.hw = u64(h) * u64(w);

    const int C = spec.channels;
    for (int i = 0; i < spec.body_depth; ++i) {
        LayerFlops l;
        l.name = "body." + std::to_string(i);
        l.dense_macs = macs_conv(ConvKind::k3x3, C, C, h, w);
        l.sparse_macs = macs_masked_conv(C, C, r.q);
        l.overhead_ops = r.q * u64(C) * 11; // gather 9C, activation C, scatter C
        r.body_dense_macs += l.dense_macs;
        r.body_sparse_macs += l.sparse_macs;
        r.per_layer.push_back(std::move(l));
    }
    add_head_tail(r, spec, h, w);
    return r;
}

FlopsReport report(const ModelSpec& spec, const WindowDecision& mw, int img_h, int img_w) {
    if (spec.body_kind != BodyKind::stl) {
        throw std::invalid_argument("flops report: window report needs an stl body");
    }
    const int win = spec.win;
    if (mw.win != win || mw.rows != (img_h + win - 1) / win || mw.cols != (img_w + win - 1) / win) {
        throw std::invalid_argument("flops report: decision grid does not match image dims");
    }

    // The dense baseline covers windows holding at least one real pixel;
    // windows fully inside the padding must be off (padding is never compute).
    std::uint64_t real = 0;
    for (int rr = 0; rr < mw.rows; ++rr) {
        for (int cc = 0; cc < mw.cols; ++cc) {
            if (rr * win < img_h && cc * win < img_w) {
                ++real;
            } else if (mw.at(rr, cc)) {
                throw std::invalid_argument("flops report: padding-only window marked kept");
            }
        }
    }

    FlopsReport r;
    r.q = mw.kept();
    r.hw = real;

    const std::uint64_t n = u64(win) * u64(win);
    for (int i = 0; i < spec.body_depth; ++i) {
        LayerFlops l;
        l.name = "body." + std::to_string(i);
        l.dense_macs = macs_stl(spec.channels, spec.heads, spec.hidden, win, real);
        l.sparse_macs = macs_stl(spec.channels, spec.heads, spec.hidden, win, r.q);
        l.overhead_ops =
            r.q * (10 * n * u64(spec.channels) + 2 * u64(spec.heads) * n * n + n * u64(spec.hidden));
        r.body_dense_macs += l.dense_macs;
        r.body_sparse_macs += l.sparse_macs;
        r.per_layer.push_back(std::move(l));
    }
    add_head_tail(r, spec, img_h, img_w);
    return r;
}

} // namespace amsr
