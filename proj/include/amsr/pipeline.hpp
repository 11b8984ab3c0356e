#pragma once

#include "amsr/flops.hpp"
#include "amsr/freqmask.hpp"
#include "amsr/model.hpp"
#include "amsr/tensor.hpp"

#include <string>
#include <vector>

namespace amsr {

enum class MaskStrategy { kmeans, fixed, median };
enum class PipelineMode { accelerated, dense };

struct RunConfig {
    int dilation_k = 0; // 0 = body default (5 for cnn, 11 for stl); must be odd
    double sigma = 0.5; // window keep threshold, in [0, 1.5]
    MaskStrategy strategy = MaskStrategy::kmeans;
    double fixed_threshold = 0.5; // strategy fixed only
    PipelineMode mode = PipelineMode::accelerated;
};

struct SrResult {
    Tensor sr;               // scale*H x scale*W RGB in [0,1]
    FlopsReport report;
    HighFreqMap hfmap;
    BitMask2D mask;          // the pixel mask the body actually used
    WindowDecision decision; // stl bodies only (empty grid otherwise)
    Tensor body_out;         // body output features at LR resolution
};

// head -> masked body -> tail. Dense mode runs the same code with an
// all-ones mask (all real windows kept) and is the correctness oracle.
SrResult super_resolve(const Tensor& lr, const BoundModel& model, const RunConfig& cfg);

enum class SweepKind { dilate, sigma };

struct BenchRow {
    std::string image;   // file stem
    std::string setting; // "k=5" or "sigma=0.5"
    double coverage = 0.0;
    double fraction = 0.0;
    double psnr_vs_dense = 0.0;
    double ms = 0.0;
};

// Sweeps dilation k in {1,3,5,7,9,11} (sigma 0.5) or sigma in
// {1.0,0.7,0.5,0.3,0.0} (dilation 5) over every .ppm in the corpus
// directory. Images may be processed concurrently (AMSR_THREADS caps the
// worker count); rows come back image-major in filename order regardless.
std::vector<BenchRow> bench_sweep(const BoundModel& model, const std::string& corpus_dir,
                                  SweepKind kind);

// Header "image,setting,coverage,fraction,psnr_vs_dense,ms"; infinite PSNR
// prints as "inf".
std::string bench_csv(const std::vector<BenchRow>& rows);

// PSNR between two image files, peak 1.0 over RGB; shapes must match.
double psnr_compare(const std::string& a_path, const std::string& b_path);

} // namespace amsr
