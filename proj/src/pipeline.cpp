#include "amsr/pipeline.hpp"

#include "amsr/image_io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <span>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace amsr {

namespace {

Tensor pad_to_multiple(const Tensor& t, int win) {
    const int H = t.height(), W = t.width();
    const int Hp = (H + win - 1) / win * win;
    const int Wp = (W + win - 1) / win * win;
    if (Hp == H && Wp == W) return t;
    Tensor out(t.channels(), Hp, Wp);
    for (int c = 0; c < t.channels(); ++c) {
        for (int y = 0; y < H; ++y) {
            std::copy_n(t.channel(c) + static_cast<std::size_t>(y) * W, W,
                        out.channel(c) + static_cast<std::size_t>(y) * Wp);
        }
    }
    return out;
}

BitMask2D pad_mask(const BitMask2D& m, int win) {
    const int Hp = (m.height + win - 1) / win * win;
    const int Wp = (m.width + win - 1) / win * win;
    if (Hp == m.height && Wp == m.width) return m;
    BitMask2D out(Hp, Wp);
    for (int y = 0; y < m.height; ++y) {
        std::copy_n(m.bits.data() + static_cast<std::size_t>(y) * m.width, m.width,
                    out.bits.data() + static_cast<std::size_t>(y) * Wp);
    }
    return out;
}

Tensor crop(const Tensor& t, int H, int W) {
    if (t.height() == H && t.width() == W) return t;
    Tensor out(t.channels(), H, W);
    for (int c = 0; c < t.channels(); ++c) {
        for (int y = 0; y < H; ++y) {
            std::copy_n(t.channel(c) + static_cast<std::size_t>(y) * t.width(), W,
                        out.channel(c) + static_cast<std::size_t>(y) * W);
        }
    }
    return out;
}

BitMask2D all_ones(int h, int w) {
    BitMask2D m(h, w);
    std::fill(m.bits.begin(), m.bits.end(), std::uint8_t{1});
    return m;
}

// Cells that lie fully in the padding must never be kept: padding is never
// compute, in dense mode as much as in accelerated mode.
void force_off_padding(WindowDecision& d, int img_h, int img_w) {
    for (int r = 0; r < d.rows; ++r) {
        for (int c = 0; c < d.cols; ++c) {
            if (r * d.win >= img_h || c * d.win >= img_w) d.at(r, c) = 0;
        }
    }
}

int default_dilation(BodyKind kind) { return kind == BodyKind::cnn ? 5 : 11; }

} // namespace

SrResult super_resolve(const Tensor& lr, const BoundModel& model, const RunConfig& cfg) {
    if (lr.channels() != 3) throw std::invalid_argument("super_resolve: input must be RGB");
    for (float v : lr.values()) {
        if (!(v >= 0.0f && v <= 1.0f)) {
            throw std::invalid_argument("super_resolve: input values must lie in [0,1]");
        }
    }
    const int k = cfg.dilation_k == 0 ? default_dilation(model.spec.body_kind) : cfg.dilation_k;
    if (k <= 0 || k % 2 == 0) throw std::invalid_argument("super_resolve: dilation k must be odd");
    if (!(cfg.sigma >= 0.0 && cfg.sigma <= 1.5)) {
        throw std::invalid_argument("super_resolve: sigma must lie in [0, 1.5]");
    }

    const int H = lr.height(), W = lr.width();
    SrResult res;
    res.hfmap = highfreq_map(lr);

    if (cfg.mode == PipelineMode::dense) {
        res.mask = all_ones(H, W);
    } else {
        BitMask2D raw;
        switch (cfg.strategy) {
            case MaskStrategy::kmeans: raw = kmeans2_binarize(res.hfmap).mask; break;
            case MaskStrategy::fixed: raw = binarize_fixed(res.hfmap, cfg.fixed_threshold); break;
            case MaskStrategy::median: raw = binarize_median(res.hfmap); break;
        }
        res.mask = dilate(raw, k);
    }

    const Tensor f = conv3x3(lr, model.head);

    ExecStats stats;
    if (model.spec.body_kind == BodyKind::cnn) {
        res.body_out = run_body_cnn(f, model.cnn_body, res.mask, RunMode::infer, &stats);
        res.report = report(model.spec, res.mask);
    } else {
        const int win = model.spec.win;
        const Tensor fp = pad_to_multiple(f, win);
        const BitMask2D mp = pad_mask(res.mask, win);
        if (cfg.mode == PipelineMode::dense) {
            res.decision = WindowDecision(fp.height() / win, fp.width() / win, win);
            std::fill(res.decision.bits.begin(), res.decision.bits.end(), std::uint8_t{1});
        } else {
            res.decision = window_decision(mp, win, cfg.sigma);
        }
        force_off_padding(res.decision, H, W);
        res.body_out = crop(run_body_stl(fp, model.stl_body, res.decision, RunMode::infer, &stats),
                            H, W);
        res.report = report(model.spec, res.decision, H, W);
    }
    if (stats.gemm_macs != res.report.body_sparse_macs) {
        throw std::logic_error("super_resolve: instrumented MACs diverge from the analytic count");
    }

    Tensor up = pixel_shuffle(conv3x3(res.body_out, model.tail_conv), model.spec.scale);
    if (model.spec.final_conv) up = conv3x3(up, model.tail_final);
    for (float& v : std::span<float>(up.data(), up.size())) {
        v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    }
    res.sr = std::move(up);
    return res;
}

namespace {

int thread_cap() {
    if (const char* env = std::getenv("AMSR_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

std::string fmt(double v, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace

std::vector<BenchRow> bench_sweep(const BoundModel& model, const std::string& corpus_dir,
                                  SweepKind kind) {
    namespace fs = std::filesystem;
    std::vector<fs::path> images;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(corpus_dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
            images.push_back(entry.path());
        }
    }
    if (ec) throw std::invalid_argument("bench: cannot read corpus directory " + corpus_dir);
    if (images.empty()) throw std::invalid_argument("bench: no .ppm images in " + corpus_dir);
    std::sort(images.begin(), images.end());

    struct Setting {
        std::string label;
        RunConfig cfg;
    };
    std::vector<Setting> settings;
    if (kind == SweepKind::dilate) {
        for (int k : {1, 3, 5, 7, 9, 11}) {
            RunConfig cfg;
            cfg.dilation_k = k;
            settings.push_back({"k=" + std::to_string(k), cfg});
        }
    } else {
        for (double s : {1.0, 0.7, 0.5, 0.3, 0.0}) {
            RunConfig cfg;
            cfg.dilation_k = 5;
            cfg.sigma = s;
            settings.push_back({"sigma=" + fmt(s, 1), cfg});
        }
    }

    std::vector<std::vector<BenchRow>> per_image(images.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next.fetch_add(1); i < images.size(); i = next.fetch_add(1)) {
            const Tensor lr = load_image(images[i].string());
            const std::string stem = images[i].stem().string();

            RunConfig dense_cfg;
            dense_cfg.mode = PipelineMode::dense;
            const SrResult dense = super_resolve(lr, model, dense_cfg);

            for (const auto& s : settings) {
                const auto t0 = std::chrono::steady_clock::now();
                const SrResult acc = super_resolve(lr, model, s.cfg);
                const auto t1 = std::chrono::steady_clock::now();
                BenchRow row;
                row.image = stem;
                row.setting = s.label;
                row.coverage = acc.mask.coverage();
                row.fraction = acc.report.fraction();
                row.psnr_vs_dense = psnr(acc.sr, dense.sr, 1.0);
                row.ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
                per_image[i].push_back(std::move(row));
            }
        }
    };

    const int n_threads = std::min<int>(thread_cap(), static_cast<int>(images.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<BenchRow> rows;
    for (auto& img_rows : per_image) {
        for (auto& r : img_rows) rows.push_back(std::move(r));
    }
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "image,setting,coverage,fraction,psnr_vs_dense,ms\n";
    for (const auto& r : rows) {
        os << r.image << "," << r.setting << "," << fmt(r.coverage, 6) << ","
           << fmt(r.fraction, 6) << ",";
        if (std::isinf(r.psnr_vs_dense)) {
            os << "inf";
        } else {
            os << fmt(r.psnr_vs_dense, 4);
        }
        os << "," << fmt(r.ms, 3) << "\n";
    }
    return os.str();
}

double psnr_compare(const std::string& a_path, const std::string& b_path) {
    const Tensor a = load_image(a_path);
    const Tensor b = load_image(b_path);
    if (a.height() != b.height() || a.width() != b.width()) {
        throw std::invalid_argument("psnr: images have different dimensions");
    }
    return psnr(a, b, 1.0);
}

} // namespace amsr
