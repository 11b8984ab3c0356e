#include "amsr/errors.hpp"
#include "amsr/flops.hpp"
#include "amsr/image_io.hpp"
#include "amsr/model.hpp"
#include "amsr/pipeline.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

namespace {

// "kmeans", "median" or "fixed:<t>".
void parse_strategy(const std::string& s, amsr::RunConfig& cfg) {
    if (s == "kmeans") {
        cfg.strategy = amsr::MaskStrategy::kmeans;
    } else if (s == "median") {
        cfg.strategy = amsr::MaskStrategy::median;
    } else if (s.rfind("fixed:", 0) == 0) {
        cfg.strategy = amsr::MaskStrategy::fixed;
        std::size_t pos = 0;
        const std::string arg = s.substr(6);
        double t = 0.0;
        try {
            t = std::stod(arg, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad fixed threshold '" + arg + "'");
        }
        if (pos != arg.size() || !(t >= 0.0 && t <= 1.0)) {
            throw std::invalid_argument("fixed threshold must lie in [0,1], got '" + arg + "'");
        }
        cfg.fixed_threshold = t;
    } else {
        throw std::invalid_argument("unknown mask strategy '" + s +
                                    "' (want kmeans, median or fixed:<t>)");
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw amsr::io_error(path + ": cannot open for writing");
    out << text;
    if (!out) throw amsr::io_error(path + ": write failed");
}

amsr::BoundModel load_bound(const std::string& spec_path, const std::string& weights_path) {
    const amsr::ModelSpec spec = amsr::load_model_spec(spec_path);
    const amsr::WeightStore ws = amsr::load_weights(weights_path);
    std::vector<std::string> warnings;
    amsr::BoundModel model = amsr::bind(spec, ws, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    return model;
}

struct MaskArgs {
    std::string input, output, hfmap_out;
    std::string strategy = "kmeans";
    int dilate = 5;
};

struct SrArgs {
    std::string input, model, weights, output, report;
    bool dense = false;
    int dilate = 0; // 0 = body default
    double sigma = 0.5;
    std::string strategy = "kmeans";
};

struct FlopsArgs {
    std::string model, mask;
    double sigma = 0.5;
    bool csv = false;
};

struct BenchArgs {
    std::string model, weights, corpus, sweep, output;
};

struct PsnrArgs {
    std::string a, b;
};

int dispatch(const CLI::App& app, const MaskArgs& ma, const SrArgs& sa, const FlopsArgs& fa,
             const BenchArgs& ba, const PsnrArgs& pa) {
    if (app.got_subcommand("mask")) {
        amsr::RunConfig cfg;
        parse_strategy(ma.strategy, cfg);
        const amsr::Tensor lr = amsr::load_image(ma.input);
        const amsr::HighFreqMap hf = amsr::highfreq_map(lr);
        amsr::BitMask2D raw;
        switch (cfg.strategy) {
            case amsr::MaskStrategy::kmeans: raw = amsr::kmeans2_binarize(hf).mask; break;
            case amsr::MaskStrategy::fixed: raw = amsr::binarize_fixed(hf, cfg.fixed_threshold); break;
            case amsr::MaskStrategy::median: raw = amsr::binarize_median(hf); break;
        }
        amsr::save_mask_pgm(amsr::dilate(raw, ma.dilate), ma.output);
        if (!ma.hfmap_out.empty()) amsr::save_hfmap_pgm(hf, ma.hfmap_out);
        return 0;
    }
    if (app.got_subcommand("sr")) {
        const amsr::BoundModel model = load_bound(sa.model, sa.weights);
        amsr::RunConfig cfg;
        parse_strategy(sa.strategy, cfg);
        cfg.dilation_k = sa.dilate;
        cfg.sigma = sa.sigma;
        cfg.mode = sa.dense ? amsr::PipelineMode::dense : amsr::PipelineMode::accelerated;
        const amsr::Tensor lr = amsr::load_image(sa.input);
        const amsr::SrResult res = amsr::super_resolve(lr, model, cfg);
        amsr::save_image(res.sr, sa.output);
        if (!sa.report.empty()) write_text_file(sa.report, res.report.to_csv());
        return 0;
    }
    if (app.got_subcommand("flops")) {
        const amsr::ModelSpec spec = amsr::load_model_spec(fa.model);
        const amsr::BitMask2D mask = amsr::load_mask_pgm(fa.mask);
        amsr::FlopsReport rep;
        if (spec.body_kind == amsr::BodyKind::cnn) {
            rep = amsr::report(spec, mask);
        } else {
            const int win = spec.win;
            const int rows = (mask.height + win - 1) / win;
            const int cols = (mask.width + win - 1) / win;
            amsr::BitMask2D padded(rows * win, cols * win);
            for (int y = 0; y < mask.height; ++y) {
                for (int x = 0; x < mask.width; ++x) padded.at(y, x) = mask.at(y, x);
            }
            amsr::WindowDecision d = amsr::window_decision(padded, win, fa.sigma);
            for (int r = 0; r < d.rows; ++r) {
                for (int c = 0; c < d.cols; ++c) {
                    if (r * win >= mask.height || c * win >= mask.width) d.at(r, c) = 0;
                }
            }
            rep = amsr::report(spec, d, mask.height, mask.width);
        }
        std::cout << (fa.csv ? rep.to_csv() : rep.to_text());
        return 0;
    }
    if (app.got_subcommand("bench")) {
        const amsr::BoundModel model = load_bound(ba.model, ba.weights);
        const amsr::SweepKind kind =
            ba.sweep == "dilate" ? amsr::SweepKind::dilate : amsr::SweepKind::sigma;
        if (ba.sweep != "dilate" && ba.sweep != "sigma") {
            throw std::invalid_argument("sweep must be 'dilate' or 'sigma'");
        }
        const auto rows = amsr::bench_sweep(model, ba.corpus, kind);
        write_text_file(ba.output, amsr::bench_csv(rows));
        return 0;
    }
    if (app.got_subcommand("psnr")) {
        const double v = amsr::psnr_compare(pa.a, pa.b);
        if (std::isinf(v)) {
            std::cout << "inf\n";
        } else {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4f\n", v);
            std::cout << buf;
        }
        return 0;
    }
    return 2; // unreachable: a subcommand is required
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"training-free masked sparse super-resolution"};
    app.require_subcommand(1);

    MaskArgs ma;
    auto* mask_cmd = app.add_subcommand("mask", "generate a high-frequency pixel mask");
    mask_cmd->add_option("input", ma.input, "input P6/P5 image")->required();
    mask_cmd->add_option("--strategy", ma.strategy, "kmeans | fixed:<t> | median");
    mask_cmd->add_option("--dilate", ma.dilate, "odd dilation kernel size");
    mask_cmd->add_option("-o,--output", ma.output, "output mask PGM")->required();
    mask_cmd->add_option("--hfmap", ma.hfmap_out, "also save the high-frequency map");

    SrArgs sa;
    auto* sr_cmd = app.add_subcommand("sr", "super-resolve an image");
    sr_cmd->add_option("input", sa.input, "input P6/P5 image")->required();
    sr_cmd->add_option("--model", sa.model, "model spec JSON")->required();
    sr_cmd->add_option("--weights", sa.weights, "AMSRW1 weight container")->required();
    sr_cmd->add_flag("--dense", sa.dense, "disable pruning (oracle mode)");
    sr_cmd->add_option("--dilate", sa.dilate, "odd dilation kernel size (default per body)");
    sr_cmd->add_option("--sigma", sa.sigma, "window keep threshold in [0,1.5]");
    sr_cmd->add_option("--strategy", sa.strategy, "kmeans | fixed:<t> | median");
    sr_cmd->add_option("-o,--output", sa.output, "output PPM")->required();
    sr_cmd->add_option("--report", sa.report, "write the FLOPs report CSV here");

    FlopsArgs fa;
    auto* flops_cmd = app.add_subcommand("flops", "analytic MAC/FLOP report for a mask");
    flops_cmd->add_option("--model", fa.model, "model spec JSON")->required();
    flops_cmd->add_option("--mask", fa.mask, "pixel mask PGM")->required();
    flops_cmd->add_option("--sigma", fa.sigma, "window keep threshold (stl bodies)");
    flops_cmd->add_flag("--csv", fa.csv, "emit CSV instead of text");

    BenchArgs ba;
    auto* bench_cmd = app.add_subcommand("bench", "sweep dilation or sigma over a corpus");
    bench_cmd->add_option("--model", ba.model, "model spec JSON")->required();
    bench_cmd->add_option("--weights", ba.weights, "AMSRW1 weight container")->required();
    bench_cmd->add_option("--corpus", ba.corpus, "directory of .ppm images")->required();
    bench_cmd->add_option("--sweep", ba.sweep, "dilate | sigma")->required();
    bench_cmd->add_option("-o,--output", ba.output, "output CSV path")->required();

    PsnrArgs pa;
    auto* psnr_cmd = app.add_subcommand("psnr", "PSNR between two images");
    psnr_cmd->add_option("a", pa.a, "first image")->required();
    psnr_cmd->add_option("b", pa.b, "second image")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        return dispatch(app, ma, sa, fa, ba, pa);
    } catch (const amsr::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const amsr::bind_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
