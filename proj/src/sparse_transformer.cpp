#include "amsr/sparse_transformer.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace amsr {

namespace {

void check_sizes(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw std::invalid_argument(std::string("stl weights: ") + what + " has " +
                                    std::to_string(got) + " values, expected " +
                                    std::to_string(want));
    }
}

// y[t][r] = b[r] + sum_c w[r][c] * x[t][c], double accumulators.
void linear(const float* x, int n, int in, int out, const float* w, const float* b, float* y) {
    for (int t = 0; t < n; ++t) {
        const float* xt = x + static_cast<std::size_t>(t) * in;
        float* yt = y + static_cast<std::size_t>(t) * out;
        for (int r = 0; r < out; ++r) {
            const float* wr = w + static_cast<std::size_t>(r) * in;
            double acc = b[r];
            for (int c = 0; c < in; ++c) acc += static_cast<double>(wr[c]) * xt[c];
            yt[r] = static_cast<float>(acc);
        }
    }
}

void layer_norm_rows(const float* x, int n, int dim, const float* g, const float* b, float* y) {
    for (int t = 0; t < n; ++t) {
        const float* xt = x + static_cast<std::size_t>(t) * dim;
        float* yt = y + static_cast<std::size_t>(t) * dim;
        double mean = 0.0;
        for (int c = 0; c < dim; ++c) mean += xt[c];
        mean /= dim;
        double var = 0.0;
        for (int c = 0; c < dim; ++c) {
            const double d = xt[c] - mean;
            var += d * d;
        }
        var /= dim;
        const double inv = 1.0 / std::sqrt(var + 1e-5);
        for (int c = 0; c < dim; ++c) {
            yt[c] = static_cast<float>((xt[c] - mean) * inv * g[c] + b[c]);
        }
    }
}

// probs layout [heads][n][n]; qkv layout [n][3C].
void attention_probs(const float* qkv, int n, int dim, int heads, double* probs) {
    const int d = dim / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> row(static_cast<std::size_t>(n));
    for (int h = 0; h < heads; ++h) {
        double* ph = probs + static_cast<std::size_t>(h) * n * n;
        for (int i = 0; i < n; ++i) {
            const float* qi = qkv + static_cast<std::size_t>(i) * 3 * dim + h * d;
            double mx = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < n; ++j) {
                const float* kj = qkv + static_cast<std::size_t>(j) * 3 * dim + dim + h * d;
                double s = 0.0;
                for (int m = 0; m < d; ++m) s += static_cast<double>(qi[m]) * kj[m];
                row[j] = s * scale;
                mx = std::max(mx, row[j]);
            }
            double sum = 0.0;
            for (int j = 0; j < n; ++j) {
                row[j] = std::exp(row[j] - mx);
                sum += row[j];
            }
            double* pr = ph + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) pr[j] = row[j] / sum;
        }
    }
}

// In-place per-window MSA: x [n][C] -> proj(attention(x)).
void msa_window(const float* x, float* y, int n, const StlWeights& w,
                std::vector<float>& qkv, std::vector<double>& probs, std::vector<float>& ctx) {
    const int C = w.dim, heads = w.heads, d = C / heads;
    qkv.resize(static_cast<std::size_t>(n) * 3 * C);
    probs.resize(static_cast<std::size_t>(heads) * n * n);
    ctx.resize(static_cast<std::size_t>(n) * C);

    linear(x, n, C, 3 * C, w.qkv_w.data(), w.qkv_b.data(), qkv.data());
    attention_probs(qkv.data(), n, C, heads, probs.data());

    for (int h = 0; h < heads; ++h) {
        const double* ph = probs.data() + static_cast<std::size_t>(h) * n * n;
        for (int i = 0; i < n; ++i) {
            const double* pr = ph + static_cast<std::size_t>(i) * n;
            for (int m = 0; m < d; ++m) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j) {
                    const float* vj = qkv.data() + static_cast<std::size_t>(j) * 3 * C + 2 * C + h * d;
                    acc += pr[j] * vj[m];
                }
                ctx[static_cast<std::size_t>(i) * C + h * d + m] = static_cast<float>(acc);
            }
        }
    }
    linear(ctx.data(), n, C, C, w.proj_w.data(), w.proj_b.data(), y);
}

void mlp_rows(const float* x, int n, const StlWeights& w, float* y, std::vector<float>& hid) {
    hid.resize(static_cast<std::size_t>(n) * w.hidden);
    linear(x, n, w.dim, w.hidden, w.fc1_w.data(), w.fc1_b.data(), hid.data());
    for (float& v : hid) {
        v = static_cast<float>(0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))));
    }
    linear(hid.data(), n, w.hidden, w.dim, w.fc2_w.data(), w.fc2_b.data(), y);
}

struct Scratch {
    std::vector<float> qkv, ctx, normed, sub, hid;
    std::vector<double> probs;
};

// Full pre-norm block on a run of windows laid out contiguously:
// mid = MSA(LN1(x)) + x, out = MLP(LN2(mid)) + mid. Overwrites x.
void block_windows(float* x, int n_windows, int n, const StlWeights& w, Scratch& s,
                   ExecStats* stats) {
    const int C = w.dim;
    const std::size_t wsz = static_cast<std::size_t>(n) * C;
    s.normed.resize(wsz);
    s.sub.resize(wsz);
    for (int i = 0; i < n_windows; ++i) {
        float* xw = x + static_cast<std::size_t>(i) * wsz;
        layer_norm_rows(xw, n, C, w.ln1_g.data(), w.ln1_b.data(), s.normed.data());
        msa_window(s.normed.data(), s.sub.data(), n, w, s.qkv, s.probs, s.ctx);
        for (std::size_t p = 0; p < wsz; ++p) xw[p] += s.sub[p];
        layer_norm_rows(xw, n, C, w.ln2_g.data(), w.ln2_b.data(), s.normed.data());
        mlp_rows(s.normed.data(), n, w, s.sub.data(), s.hid);
        for (std::size_t p = 0; p < wsz; ++p) xw[p] += s.sub[p];
    }
    if (stats) {
        const std::uint64_t nn = static_cast<std::uint64_t>(n);
        const std::uint64_t cc = static_cast<std::uint64_t>(C);
        stats->gemm_macs += static_cast<std::uint64_t>(n_windows) *
                            (3 * nn * cc * cc + 2 * nn * nn * cc + nn * cc * cc +
                             2 * nn * cc * static_cast<std::uint64_t>(w.hidden));
    }
}

void check_grid(const Tensor& f, const StlWeights& w, const WindowDecision& mw) {
    validate_stl_weights(w);
    if (f.channels() != w.dim) {
        throw std::invalid_argument("stl forward: feature channels do not match weight dim");
    }
    if (f.height() % w.win != 0 || f.width() % w.win != 0) {
        throw std::invalid_argument("stl forward: dims not divisible by window size");
    }
    if (mw.win != w.win || mw.rows != f.height() / w.win || mw.cols != f.width() / w.win) {
        throw std::invalid_argument("stl forward: window decision grid mismatch");
    }
}

} // namespace

void validate_stl_weights(const StlWeights& w) {
    if (w.dim <= 0 || w.heads <= 0 || w.dim % w.heads != 0) {
        throw std::invalid_argument("stl weights: dim must be a positive multiple of heads");
    }
    if (w.hidden < 1) throw std::invalid_argument("stl weights: hidden must be >= 1");
    if (w.win <= 0) throw std::invalid_argument("stl weights: window side must be positive");
    const std::size_t C = static_cast<std::size_t>(w.dim);
    const std::size_t H = static_cast<std::size_t>(w.hidden);
    check_sizes(w.qkv_w.size(), 3 * C * C, "qkv weight");
    check_sizes(w.qkv_b.size(), 3 * C, "qkv bias");
    check_sizes(w.proj_w.size(), C * C, "proj weight");
    check_sizes(w.proj_b.size(), C, "proj bias");
    check_sizes(w.ln1_g.size(), C, "ln1 gamma");
    check_sizes(w.ln1_b.size(), C, "ln1 beta");
    check_sizes(w.ln2_g.size(), C, "ln2 gamma");
    check_sizes(w.ln2_b.size(), C, "ln2 beta");
    check_sizes(w.fc1_w.size(), H * C, "fc1 weight");
    check_sizes(w.fc1_b.size(), H, "fc1 bias");
    check_sizes(w.fc2_w.size(), C * H, "fc2 weight");
    check_sizes(w.fc2_b.size(), C, "fc2 bias");
}

TokenBatch window_partition(const Tensor& f, int win) {
    if (win <= 0) throw std::invalid_argument("window_partition: window side must be positive");
    if (f.height() % win != 0 || f.width() % win != 0) {
        throw std::invalid_argument("window_partition: dims not divisible by window size");
    }
    const int C = f.channels(), H = f.height(), W = f.width();
    const int rows = H / win, cols = W / win;

    TokenBatch tb;
    tb.rows = rows;
    tb.cols = cols;
    tb.win = win;
    tb.dim = C;
    tb.origin.reserve(static_cast<std::size_t>(rows) * cols);
    tb.tokens.resize(static_cast<std::size_t>(rows) * cols * win * win * C);

    std::size_t p = 0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            tb.origin.emplace_back(r, c);
            for (int py = 0; py < win; ++py) {
                for (int px = 0; px < win; ++px) {
                    const int y = r * win + py, x = c * win + px;
                    for (int ch = 0; ch < C; ++ch) {
                        tb.tokens[p++] = f.at(ch, y, x);
                    }
                }
            }
        }
    }
    return tb;
}

Tensor window_merge(const TokenBatch& tb, int H, int W) {
    if (tb.win <= 0 || H != tb.rows * tb.win || W != tb.cols * tb.win) {
        throw std::invalid_argument("window_merge: target dims do not match the window grid");
    }
    if (tb.n_windows() != tb.rows * tb.cols || tb.tokens_per_window() != tb.win * tb.win) {
        throw std::invalid_argument("window_merge: batch does not cover the full grid");
    }
    Tensor out(tb.dim, H, W);
    std::size_t p = 0;
    for (int i = 0; i < tb.n_windows(); ++i) {
        const auto [r, c] = tb.origin[i];
        if (r != i / tb.cols || c != i % tb.cols) {
            throw std::invalid_argument("window_merge: origins out of row-major order");
        }
        for (int py = 0; py < tb.win; ++py) {
            for (int px = 0; px < tb.win; ++px) {
                const int y = r * tb.win + py, x = c * tb.win + px;
                for (int ch = 0; ch < tb.dim; ++ch) {
                    out.at(ch, y, x) = tb.tokens[p++];
                }
            }
        }
    }
    return out;
}

std::vector<float> layer_norm(const std::vector<float>& tokens, int dim,
                              const std::vector<float>& gamma, const std::vector<float>& beta) {
    if (dim <= 0 || tokens.size() % static_cast<std::size_t>(dim) != 0) {
        throw std::invalid_argument("layer_norm: token array length must be a multiple of dim");
    }
    if (gamma.size() != static_cast<std::size_t>(dim) || beta.size() != static_cast<std::size_t>(dim)) {
        throw std::invalid_argument("layer_norm: gamma/beta length must equal dim");
    }
    std::vector<float> out(tokens.size());
    layer_norm_rows(tokens.data(), static_cast<int>(tokens.size() / dim), dim, gamma.data(),
                    beta.data(), out.data());
    return out;
}

TokenBatch window_msa(const TokenBatch& tb, const StlWeights& w) {
    validate_stl_weights(w);
    if (tb.dim != w.dim) throw std::invalid_argument("window_msa: token dim mismatch");
    const int n = tb.tokens_per_window();
    TokenBatch out = tb;
    std::vector<float> qkv, ctx;
    std::vector<double> probs;
    for (int i = 0; i < tb.n_windows(); ++i) {
        msa_window(tb.window(i), out.window(i), n, w, qkv, probs, ctx);
    }
    return out;
}

std::vector<double> attention_matrix(const TokenBatch& tb, int window, const StlWeights& w) {
    validate_stl_weights(w);
    if (tb.dim != w.dim) throw std::invalid_argument("attention_matrix: token dim mismatch");
    if (window < 0 || window >= tb.n_windows()) {
        throw std::invalid_argument("attention_matrix: window index out of range");
    }
    const int n = tb.tokens_per_window();
    std::vector<float> qkv(static_cast<std::size_t>(n) * 3 * w.dim);
    linear(tb.window(window), n, w.dim, 3 * w.dim, w.qkv_w.data(), w.qkv_b.data(), qkv.data());
    std::vector<double> probs(static_cast<std::size_t>(w.heads) * n * n);
    attention_probs(qkv.data(), n, w.dim, w.heads, probs.data());
    return probs;
}

Tensor stl_forward_train(const Tensor& f, const StlWeights& w, const WindowDecision& mw) {
    check_grid(f, w, mw);
    TokenBatch tb = window_partition(f, w.win);
    const int n = tb.tokens_per_window();
    const std::size_t wsz = static_cast<std::size_t>(n) * w.dim;

    auto masked_copy = [&](const std::vector<float>& src) {
        std::vector<float> m(src);
        for (int i = 0; i < tb.n_windows(); ++i) {
            if (!mw.bits[static_cast<std::size_t>(i)]) {
                std::fill(m.begin() + static_cast<std::ptrdiff_t>(i * wsz),
                          m.begin() + static_cast<std::ptrdiff_t>((i + 1) * wsz), 0.0f);
            }
        }
        return m;
    };

    Scratch s;
    std::vector<float> normed(tb.tokens.size()), sub(tb.tokens.size());

    // mid = MSA(LN(f ⊙ m_win)) + f
    std::vector<float> m1 = masked_copy(tb.tokens);
    layer_norm_rows(m1.data(), tb.n_windows() * n, w.dim, w.ln1_g.data(), w.ln1_b.data(),
                    normed.data());
    for (int i = 0; i < tb.n_windows(); ++i) {
        msa_window(normed.data() + i * wsz, sub.data() + i * wsz, n, w, s.qkv, s.probs, s.ctx);
    }
    std::vector<float> mid(tb.tokens.size());
    for (std::size_t p = 0; p < mid.size(); ++p) mid[p] = sub[p] + tb.tokens[p];

    // out = MLP(LN(mid ⊙ m_win)) + mid
    std::vector<float> m2 = masked_copy(mid);
    layer_norm_rows(m2.data(), tb.n_windows() * n, w.dim, w.ln2_g.data(), w.ln2_b.data(),
                    normed.data());
    mlp_rows(normed.data(), tb.n_windows() * n, w, sub.data(), s.hid);
    for (std::size_t p = 0; p < mid.size(); ++p) tb.tokens[p] = sub[p] + mid[p];

    return window_merge(tb, f.height(), f.width());
}

Tensor stl_forward_infer(const Tensor& f, const StlWeights& w, const WindowDecision& mw,
                         ExecStats* stats) {
    check_grid(f, w, mw);
    TokenBatch tb = window_partition(f, w.win);
    const int n = tb.tokens_per_window();
    const std::size_t wsz = static_cast<std::size_t>(n) * w.dim;

    Scratch s;
    for (int i = 0; i < tb.n_windows(); ++i) {
        if (!mw.bits[static_cast<std::size_t>(i)]) continue;
        block_windows(tb.tokens.data() + i * wsz, 1, n, w, s, stats);
    }
    return window_merge(tb, f.height(), f.width());
}

Tensor run_body_stl(const Tensor& f, const std::vector<StlWeights>& layers,
                    const WindowDecision& mw, RunMode mode, ExecStats* stats) {
    if (layers.empty()) return f;
    for (const auto& w : layers) {
        if (w.win != layers.front().win || w.dim != layers.front().dim) {
            throw std::invalid_argument("run_body_stl: layers disagree on window size or dim");
        }
    }

    if (mode == RunMode::train) {
        Tensor cur = f;
        for (const auto& w : layers) cur = stl_forward_train(cur, w, mw);
        return cur;
    }

    check_grid(f, layers.front(), mw);
    TokenBatch tb = window_partition(f, layers.front().win);
    const int n = tb.tokens_per_window();
    const std::size_t wsz = static_cast<std::size_t>(n) * tb.dim;

    // Kept windows only depend on themselves, so one gather serves all layers.
    std::vector<int> kept;
    for (int i = 0; i < tb.n_windows(); ++i) {
        if (mw.bits[static_cast<std::size_t>(i)]) kept.push_back(i);
    }
    std::vector<float> pack(kept.size() * wsz);
    for (std::size_t k = 0; k < kept.size(); ++k) {
        std::copy_n(tb.window(kept[k]), wsz, pack.data() + k * wsz);
    }
    Scratch s;
    for (const auto& w : layers) {
        block_windows(pack.data(), static_cast<int>(kept.size()), n, w, s, stats);
    }
    for (std::size_t k = 0; k < kept.size(); ++k) {
        std::copy_n(pack.data() + k * wsz, wsz, tb.window(kept[k]));
    }
    return window_merge(tb, f.height(), f.width());
}

} // namespace amsr
