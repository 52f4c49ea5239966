#pragma once
// Sliding-window orchestration: block scheduling over the padded image,
// border clamping, kernel-cache warm-up, algorithm dispatch, metrics.

#include <optional>
#include <stdexcept>
#include <vector>

#include "tqs/grid.hpp"
#include "tqs/image.hpp"
#include "tqs/rljsde.hpp"

namespace tqs {

enum class Algorithm { Ljsde, Rljsde };

struct ReconstructionConfig {
    int window = 32;
    int block = 4;
    SolverOptions solver;       // 200 iterations, step width 0.5
    WeightingConfig weighting;
    Precision precision = Precision::Double;
    bool clipOutput = true;
    Algorithm algorithm = Algorithm::Rljsde;
    int threads = 1;            // 0 = hardware concurrency
};

struct ReconstructionReport {
    Image output;
    double seconds = 0.0;        // block-processing wall time
    double warmSeconds = 0.0;    // kernel precompute time, reported separately
    long blocksProcessed = 0;
    size_t classesTotal = 0;     // distinct offset classes of this run's windows
    size_t classesInterior = 0;  // ... restricted to windows that needed no clamping
    size_t classesCreated = 0;   // cache misses during this run
    uint64_t cacheHits = 0;
    uint64_t cacheMisses = 0;
    std::optional<double> psnrDb; // vs reference when supplied; +inf when identical
};

// Row-major target blocks at stride `block`; each model window is centered on
// its block ((W-B)/2 lead) and clamped into the padded image. Internal edge
// padding makes the dimensions block-multiples; the output is cropped back.
// An external cache pointer shares kernels across runs (rljsde only).
ReconstructionReport reconstruct(const MeasurementFrame& frame, const QuadrantPattern& pattern,
                                 const ReconstructionConfig& config, KernelCache* cache = nullptr,
                                 const Image* reference = nullptr);

struct PaddedImage {
    Image image;
    int originalRows = 0;
    int originalCols = 0;
};

// edge-replication padding to even, block-multiple dimensions
PaddedImage pad_to_block_multiple(const Image& image, int block);

Image crop_image(const Image& image, int rows, int cols);

// 10*log10(1/MSE), peak 1.0; +infinity when the images are identical
double psnr(const Image& reference, const Image& estimate);

// each measurement value copied to its 2x2 cell (quality baseline)
Image nn_upsample(const MeasurementFrame& frame);

// simulate + reconstruct + PSNR against the (unpadded) input image
ReconstructionReport reconstruct_image(const Image& image, const QuadrantPattern& pattern,
                                       const ReconstructionConfig& config,
                                       KernelCache* cache = nullptr);

// thrown by bench when the two algorithms disagree beyond the threshold
struct EquivalenceError : std::runtime_error {
    EquivalenceError(const std::string& what, double maxAbs)
        : std::runtime_error(what), maxAbsDifference(maxAbs) {}
    double maxAbsDifference = 0.0;
};

struct BenchResult {
    int images = 0;
    double ljsdeMeanSeconds = 0.0;
    double rljsdeMeanSeconds = 0.0;     // excluding kernel precompute
    double rljsdeMeanWarmSeconds = 0.0; // precompute, averaged over runs
    double speedup = 0.0;               // ljsde / rljsde (excl. precompute)
    double speedupInclWarm = 0.0;
    double maxAbsDifference = 0.0;      // worst pixel deviation across the set

    bool scalingMeasured = false;       // per-block times at W=16 vs W=32
    double ljsdePerBlockSmall = 0.0, ljsdePerBlockLarge = 0.0;
    double rljsdePerBlockSmall = 0.0, rljsdePerBlockLarge = 0.0;
    double ljsdeScalingRatio = 0.0;
    double rljsdeScalingRatio = 0.0;
};

// Single-threaded, unclipped runs of both algorithms over the image set;
// throws if any pixel of any pair differs by more than `equivalenceThreshold`
// (timings for diverging algorithms would be meaningless). The optional
// scaling pass reruns the first image at window 16 and at `config.window`.
BenchResult bench(const std::vector<Image>& images, const QuadrantPattern& pattern,
                  const ReconstructionConfig& config, double equivalenceThreshold = 1e-6,
                  bool measureScaling = false);

} // namespace tqs
