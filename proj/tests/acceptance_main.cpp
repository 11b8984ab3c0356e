// Acceptance gate: ten behavioral guarantees, one PASS/FAIL line each.
// Exits nonzero if any check fails. Heavier randomized sweeps carry their
// own runtime budgets so regressions in the sparse paths surface here.
#include "amsr/flops.hpp"
#include "amsr/freqmask.hpp"
#include "amsr/image_io.hpp"
#include "amsr/model.hpp"
#include "amsr/pipeline.hpp"
#include "amsr/sparse_cnn.hpp"
#include "amsr/sparse_transformer.hpp"
#include "amsr/stats.hpp"
#include "amsr/tensor.hpp"
#include "amsr/weights.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

using namespace amsr;
namespace fs = std::filesystem;

namespace {

const std::string kBin = AMSR_BIN;
const std::string kAssets = AMSR_ASSETS_DIR;

struct Failure {
    std::string detail;
};

void require(bool ok, const std::string& detail) {
    if (!ok) throw Failure{detail};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("amsr_accept_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int counter;
};
int TempDir::counter = 0;

int run_cli(const std::string& args) {
    const std::string cmd = kBin + " " + args + " >/dev/null 2>/dev/null";
    const int status = std::system(cmd.c_str());
    require(status != -1 && WIFEXITED(status), "could not launch the cli binary");
    return WEXITSTATUS(status);
}

std::string read_file(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    require(static_cast<bool>(in), "cannot read " + p);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::vector<std::string> corpus_images() {
    std::vector<std::string> v;
    for (int i = 1; i <= 5; ++i) v.push_back(kAssets + "/corpus/img" + std::to_string(i) + ".ppm");
    return v;
}

BoundModel load_bundled(const std::string& stem) {
    const ModelSpec spec = load_model_spec(kAssets + "/models/" + stem + ".json");
    const WeightStore ws = load_weights(kAssets + "/models/" + stem + ".amsrw");
    return amsr::bind(spec, ws, nullptr);
}

// --- criterion bodies ------------------------------------------------------

std::string conv_gemm_substitution() {
    testutil::Rng rng(0xACC00001u);
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    const int cases = 1000;
    for (int i = 0; i < cases; ++i) {
        const int c_in = rng.uniform_int(1, 8);
        const int c_out = rng.uniform_int(1, 8);
        const int h = rng.uniform_int(4, 16);
        const int w = rng.uniform_int(4, 16);
        const Tensor x = testutil::random_tensor(rng, c_in, h, w);
        const ConvWeights3x3 k = testutil::random_conv3x3(rng, c_out, c_in);
        const Tensor direct = conv3x3(x, k);
        const Tensor viaGemm = gemm1x1(unfold3x3(x), reshape3x3_to_1x1(k));
        worst = std::max(worst, testutil::max_abs_diff(direct, viaGemm));
    }
    const double secs = seconds_since(t0);
    require(worst <= 1e-5, "max |conv - unfold*gemm| = " + fmt(worst));
    require(secs < 30.0, "took " + fmt(secs) + " s, budget 30 s");
    return std::to_string(cases) + " cases, max diff " + fmt(worst) + ", " + fmt(secs) + " s";
}

std::string masked_body_cross_path() {
    testutil::Rng rng(0xACC00002u);
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    const int cases = 500;
    const Activation acts[] = {Activation::none, Activation::relu, Activation::prelu};
    for (int i = 0; i < cases; ++i) {
        const int c = rng.uniform_int(1, 8);
        const int h = rng.uniform_int(2, 32);
        const int w = rng.uniform_int(2, 32);
        const int nblocks = rng.uniform_int(1, 4);
        const Activation act = acts[rng.uniform_int(0, 2)];
        std::vector<MaskedConvBlock> blocks;
        for (int b = 0; b < nblocks; ++b) blocks.push_back(testutil::random_block(rng, c, act));
        const double density = i == 0 ? 0.0 : (i == 1 ? 1.0 : rng.prob());
        const BitMask2D m = testutil::random_mask(rng, h, w, density);
        const Tensor f = testutil::random_tensor(rng, c, h, w);

        const Tensor train = run_body_cnn(f, blocks, m, RunMode::train);
        const Tensor infer = run_body_cnn(f, blocks, m, RunMode::infer);
        worst = std::max(worst, testutil::max_abs_diff(train, infer));
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (m.at(y, x)) continue;
                for (int ch = 0; ch < c; ++ch) {
                    require(infer.at(ch, y, x) == f.at(ch, y, x),
                            "pruned pixel mutated at (" + std::to_string(y) + "," +
                                std::to_string(x) + ")");
                }
            }
        }
    }
    const double secs = seconds_since(t0);
    require(worst <= 1e-5, "max |train - infer| = " + fmt(worst));
    require(secs < 60.0, "took " + fmt(secs) + " s, budget 60 s");
    return std::to_string(cases) + " cases, max diff " + fmt(worst) + ", " + fmt(secs) + " s";
}

std::string instrumented_macs_proportional() {
    testutil::Rng rng(0xACC00003u);
    const int c = 4, h = 12, w = 12;
    std::vector<MaskedConvBlock> blocks;
    for (int b = 0; b < 3; ++b) blocks.push_back(testutil::random_block(rng, c, Activation::prelu));
    for (int i = 0; i < 20; ++i) {
        const double density = i == 0 ? 0.0 : (i == 1 ? 1.0 : rng.prob());
        const BitMask2D m = testutil::random_mask(rng, h, w, density);
        const std::uint64_t q = m.popcount();
        if (i == 0) require(q == 0, "case 0 must be the empty mask");
        if (i == 1) require(q == static_cast<std::uint64_t>(h) * w, "case 1 must be the full mask");
        const Tensor f = testutil::random_tensor(rng, c, h, w);
        const std::uint64_t per_block = q * 9ull * c * c;
        for (const auto& blk : blocks) {
            ExecStats stats;
            (void)block_forward_infer(f, blk, m, &stats);
            require(stats.gemm_macs == per_block,
                    "block counter " + std::to_string(stats.gemm_macs) + " != q*9*C*C = " +
                        std::to_string(per_block));
        }
        ExecStats total;
        (void)run_body_cnn(f, blocks, m, RunMode::infer, &total);
        require(total.gemm_macs == 3 * per_block, "stacked counter mismatch");
    }
    return "20 masks incl. empty and full, counters exact";
}

std::string window_locality() {
    testutil::Rng rng(0xACC00004u);
    const int dim = 32, heads = 4, hidden = 64, win = 8;
    const int sizes[] = {8, 16, 16, 16, 24};
    double worst = 0.0;
    const int cases = 200;
    for (int i = 0; i < cases; ++i) {
        const int h = sizes[rng.uniform_int(0, 4)];
        const int w = sizes[rng.uniform_int(0, 4)];
        const StlWeights sw = testutil::random_stl(rng, dim, heads, hidden, win);
        const Tensor f = testutil::random_tensor(rng, dim, h, w);
        const int rows = h / win, cols = w / win;
        WindowDecision d(rows, cols, win);
        for (auto& b : d.bits) b = rng.prob() < 0.5 ? 1 : 0;
        WindowDecision all(rows, cols, win);
        for (auto& b : all.bits) b = 1;

        const Tensor dense = stl_forward_infer(f, sw, all);
        const Tensor sparse = stl_forward_infer(f, sw, d);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const bool kept = d.at(y / win, x / win) != 0;
                for (int ch = 0; ch < dim; ++ch) {
                    if (kept) {
                        worst = std::max(worst, std::abs(static_cast<double>(sparse.at(ch, y, x)) -
                                                         dense.at(ch, y, x)));
                    } else {
                        require(sparse.at(ch, y, x) == f.at(ch, y, x),
                                "pruned window mutated at (" + std::to_string(y) + "," +
                                    std::to_string(x) + ")");
                    }
                }
            }
        }
    }
    require(worst <= 1e-5, "kept windows drift from dense by " + fmt(worst));

    // End to end: keep-everything threshold must reproduce the dense oracle.
    const BoundModel model = load_bundled("tiny-stl");
    const Tensor lr = load_image(corpus_images()[0]);
    RunConfig accel;
    accel.sigma = 0.0;
    RunConfig dense_cfg;
    dense_cfg.mode = PipelineMode::dense;
    const SrResult a = super_resolve(lr, model, accel);
    const SrResult b = super_resolve(lr, model, dense_cfg);
    const double e2e = testutil::max_abs_diff(a.sr, b.sr);
    require(e2e <= 1e-5, "sigma=0 run differs from dense by " + fmt(e2e));
    return std::to_string(cases) + " cases, kept-window diff " + fmt(worst) +
           ", sigma=0 end-to-end diff " + fmt(e2e);
}

std::string sigma_sweep_monotone() {
    const BoundModel model = load_bundled("tiny-stl");
    const auto rows = bench_sweep(model, kAssets + "/corpus", SweepKind::sigma);
    require(rows.size() == 25, "expected 5 images x 5 sigmas, got " + std::to_string(rows.size()));
    const char* labels[] = {"sigma=1.0", "sigma=0.7", "sigma=0.5", "sigma=0.3", "sigma=0.0"};
    for (int img = 0; img < 5; ++img) {
        for (int j = 0; j < 5; ++j) {
            const BenchRow& r = rows[img * 5 + j];
            require(r.setting == labels[j], "unexpected setting " + r.setting);
            if (j > 0) {
                const BenchRow& prev = rows[img * 5 + j - 1];
                require(prev.fraction < r.fraction,
                        r.image + ": fraction not strictly increasing at " + r.setting + " (" +
                            fmt(prev.fraction) + " -> " + fmt(r.fraction) + ")");
            }
        }
        const BenchRow& last = rows[img * 5 + 4];
        require(last.fraction == 1.0,
                last.image + ": sigma=0 fraction " + fmt(last.fraction) + " != 1");
    }
    return "5 images, fractions strictly increasing over sigma, 1.0 at sigma=0";
}

std::string dilation_sweep_monotone() {
    const BoundModel model = load_bundled("tiny-cnn");
    const auto rows = bench_sweep(model, kAssets + "/corpus", SweepKind::dilate);
    require(rows.size() == 30, "expected 5 images x 6 kernels, got " + std::to_string(rows.size()));
    for (int img = 0; img < 5; ++img) {
        for (int j = 1; j < 6; ++j) {
            const BenchRow& prev = rows[img * 6 + j - 1];
            const BenchRow& r = rows[img * 6 + j];
            require(prev.coverage <= r.coverage,
                    r.image + ": coverage decreased at " + r.setting);
            require(prev.fraction <= r.fraction,
                    r.image + ": fraction decreased at " + r.setting);
        }
    }
    return "5 images, coverage and fraction non-decreasing over k=1..11";
}

// Exhaustive best two-cluster split of a sorted sample, by prefix sums.
double best_split_sse(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const int n = static_cast<int>(v.size());
    std::vector<double> sum(n + 1, 0.0), sq(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        sum[i + 1] = sum[i] + v[i];
        sq[i + 1] = sq[i] + v[i] * v[i];
    }
    double best = 1e300;
    for (int s = 1; s < n; ++s) {
        const double a = sq[s] - sum[s] * sum[s] / s;
        const double b = (sq[n] - sq[s]) - (sum[n] - sum[s]) * (sum[n] - sum[s]) / (n - s);
        best = std::min(best, a + b);
    }
    return std::max(best, 0.0);
}

double partition_sse(const std::vector<float>& v, double thr) {
    double lo_sum = 0.0, hi_sum = 0.0;
    std::uint64_t lo_n = 0, hi_n = 0;
    for (float x : v) {
        if (x >= thr) {
            hi_sum += x;
            ++hi_n;
        } else {
            lo_sum += x;
            ++lo_n;
        }
    }
    const double lo_mean = lo_n ? lo_sum / lo_n : 0.0;
    const double hi_mean = hi_n ? hi_sum / hi_n : 0.0;
    double sse = 0.0;
    for (float x : v) {
        const double d = x - (x >= thr ? hi_mean : lo_mean);
        sse += d * d;
    }
    return sse;
}

std::string kmeans_on_corpus() {
    int max_iters = 0;
    for (const auto& img : corpus_images()) {
        const HighFreqMap hf = highfreq_map(load_image(img));
        const KmeansResult r = kmeans2_binarize(hf);
        require(r.iterations >= 1 && r.iterations <= 10,
                img + ": " + std::to_string(r.iterations) + " iterations");
        max_iters = std::max(max_iters, r.iterations);
        require(r.threshold == 0.5 * (r.center_low + r.center_high),
                img + ": threshold is not the center midpoint");
        double lo_sum = 0.0, hi_sum = 0.0;
        std::uint64_t lo_n = 0, hi_n = 0;
        for (float v : hf.values) {
            if (v >= r.threshold) {
                hi_sum += v;
                ++hi_n;
            } else {
                lo_sum += v;
                ++lo_n;
            }
        }
        require(lo_n > 0 && hi_n > 0, img + ": a cluster is empty");
        require(std::abs(lo_sum / lo_n - r.center_low) <= 1e-6,
                img + ": low center is not its cluster mean");
        require(std::abs(hi_sum / hi_n - r.center_high) <= 1e-6,
                img + ": high center is not its cluster mean");

        // Near-optimality on a subsample small enough for the exhaustive oracle.
        std::vector<float> sub;
        for (std::size_t i = 0; i < hf.values.size(); i += 13) sub.push_back(hf.values[i]);
        require(sub.size() <= 512, "subsample too large");
        const KmeansResult rs = kmeans2_binarize(HighFreqMap(1, static_cast<int>(sub.size()), sub));
        const double sse_k = partition_sse(sub, rs.threshold);
        const double sse_o = best_split_sse(std::vector<double>(sub.begin(), sub.end()));
        require(sse_k <= 1.05 * sse_o + 1e-12,
                img + ": kmeans SSE " + fmt(sse_k) + " > 1.05 x optimal " + fmt(sse_o));
    }
    return "5 maps, <= " + std::to_string(max_iters) +
           " iterations, fixed point holds, SSE within 1.05x of optimal split";
}

std::string analytic_report_sanity() {
    const ModelSpec cnn = load_model_spec(kAssets + "/models/tiny-cnn.json");
    const ModelSpec stl = load_model_spec(kAssets + "/models/tiny-stl.json");
    const int h = 80, w = 80;

    const FlopsReport full = report(stl, [&] {
        WindowDecision d(h / stl.win, w / stl.win, stl.win);
        for (auto& b : d.bits) b = 1;
        return d;
    }(), h, w);
    require(full.body_share() > 0.95,
            "attention body share " + fmt(full.body_share()) + " <= 0.95");

    const FlopsReport cnn_zero = report(cnn, BitMask2D(h, w));
    require(cnn_zero.body_sparse_macs == 0, "cnn zero-mask body is not free");
    require(cnn_zero.fraction() ==
                static_cast<double>(cnn_zero.head_macs + cnn_zero.tail_macs) /
                    static_cast<double>(cnn_zero.total_dense()),
            "cnn zero-mask fraction is not (head+tail)/total");

    const FlopsReport stl_zero = report(stl, WindowDecision(h / stl.win, w / stl.win, stl.win), h, w);
    require(stl_zero.body_sparse_macs == 0, "stl zero-decision body is not free");
    require(stl_zero.fraction() ==
                static_cast<double>(stl_zero.head_macs + stl_zero.tail_macs) /
                    static_cast<double>(stl_zero.total_dense()),
            "stl zero-decision fraction is not (head+tail)/total");
    return "attention body share " + fmt(full.body_share()) +
           ", zero-mask fraction reduces to (head+tail)/total exactly";
}

std::string roundtrip_and_corruption() {
    TempDir dir;
    testutil::Rng rng(0xACC00009u);
    const Tensor img = testutil::random_tensor(rng, 3, 17, 23, 0.0f, 1.0f);
    const std::string p = dir.file("rt.ppm");
    save_image(img, p);
    const Tensor back = load_image(p);
    const double err = testutil::max_abs_diff(img, back);
    require(err <= 1.0 / 510.0 + 1e-7, "round-trip error " + fmt(err) + " > 1/510");

    const std::string weights = kAssets + "/models/tiny-cnn.amsrw";
    const std::string spec = kAssets + "/models/tiny-cnn.json";
    const std::string input = corpus_images()[0];
    std::string raw = read_file(weights);

    std::string bad_magic = raw;
    bad_magic[0] = 'Z';
    write_file(dir.file("magic.amsrw"), bad_magic);
    require(run_cli("sr " + input + " --model " + spec + " --weights " + dir.file("magic.amsrw") +
                    " -o " + dir.file("o.ppm")) == 3,
            "bad magic did not exit 3");

    write_file(dir.file("short.amsrw"), raw.substr(0, raw.size() - 16));
    require(run_cli("sr " + input + " --model " + spec + " --weights " + dir.file("short.amsrw") +
                    " -o " + dir.file("o.ppm")) == 3,
            "manifest/payload mismatch did not exit 3");

    write_file(dir.file("deep.json"),
               R"({"name":"deep","scale":4,"channels":16,
                   "body":{"kind":"cnn","blocks":5,"activation":"relu"},
                   "tail":{"final_conv":false}})");
    require(run_cli("sr " + input + " --model " + dir.file("deep.json") + " --weights " + weights +
                    " -o " + dir.file("o.ppm")) == 4,
            "missing tensor did not exit 4");
    return "round-trip error " + fmt(err) + ", corruption exit codes 3/3/4";
}

std::string cli_determinism() {
    TempDir dir;
    const std::string base = "sr " + corpus_images()[1] + " --model " + kAssets +
                             "/models/tiny-cnn.json --weights " + kAssets +
                             "/models/tiny-cnn.amsrw";
    require(run_cli(base + " -o " + dir.file("a.ppm") + " --report " + dir.file("a.csv")) == 0,
            "first run failed");
    require(run_cli(base + " -o " + dir.file("b.ppm") + " --report " + dir.file("b.csv")) == 0,
            "second run failed");
    const std::string a = read_file(dir.file("a.ppm"));
    require(!a.empty() && a == read_file(dir.file("b.ppm")), "output images differ between runs");
    const std::string ac = read_file(dir.file("a.csv"));
    require(!ac.empty() && ac == read_file(dir.file("b.csv")), "reports differ between runs");
    return "repeated runs byte-identical (image and report)";
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* label;
        std::string (*body)();
    };
    const Criterion criteria[] = {
        {1, "conv3x3 matches unfold+1x1 GEMM substitution", conv_gemm_substitution},
        {2, "masked body agrees across train and infer paths", masked_body_cross_path},
        {3, "instrumented MACs equal Q*9*C*C per block", instrumented_macs_proportional},
        {4, "window pruning is local: kept match dense, pruned pass through", window_locality},
        {5, "sigma sweep fractions strictly increase, 100% at sigma=0", sigma_sweep_monotone},
        {6, "dilation sweep coverage and fraction are non-decreasing", dilation_sweep_monotone},
        {7, "k-means converges fast to a near-optimal fixed point", kmeans_on_corpus},
        {8, "analytic report: body share and zero-mask identity", analytic_report_sanity},
        {9, "image round-trip within 1/510; corrupt stores rejected", roundtrip_and_corruption},
        {10, "repeated sr runs are byte-identical", cli_determinism},
    };

    bool all_ok = true;
    for (const auto& c : criteria) {
        std::string note;
        bool ok = true;
        try {
            note = c.body();
        } catch (const Failure& f) {
            ok = false;
            note = f.detail;
        } catch (const std::exception& e) {
            ok = false;
            note = std::string("unexpected exception: ") + e.what();
        }
        all_ok = all_ok && ok;
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.label << " ("
                  << note << ")\n";
        std::cout.flush();
    }
    return all_ok ? 0 : 1;
}
