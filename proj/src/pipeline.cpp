#include "tqs/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "parallel.hpp"
#include "tqs/ljsde.hpp"

namespace tqs {

namespace {

using clock_type = std::chrono::steady_clock;

double elapsed_seconds(clock_type::time_point from, clock_type::time_point to) {
    return std::chrono::duration<double>(to - from).count();
}

int round_up(int v, int multiple) { return (v + multiple - 1) / multiple * multiple; }

void validate_config(const ReconstructionConfig& cfg, const QuadrantPattern& pattern) {
    if (cfg.window < 2 || cfg.window % 2 != 0)
        throw std::invalid_argument("window size must be even and >= 2");
    if (cfg.block < 1 || cfg.window % cfg.block != 0)
        throw std::invalid_argument("block size must divide the window size");
    if ((cfg.window - cfg.block) % 2 != 0)
        throw std::invalid_argument("window/block sizes must center the target block");
    if (pattern.period % cfg.block != 0)
        throw std::invalid_argument("block size must divide the pattern period");
    if (cfg.solver.maxIterations < 0)
        throw std::invalid_argument("iteration count must be non-negative");
    if (cfg.solver.stepWidth <= 0.0 || cfg.solver.stepWidth > 1.0)
        throw std::invalid_argument("step width must lie in (0,1]");
    if (cfg.threads < 0)
        throw std::invalid_argument("thread count must be non-negative");
}

MeasurementFrame pad_frame(const MeasurementFrame& frame, int cellRows, int cellCols) {
    MeasurementFrame out(cellRows, cellCols);
    for (int r = 0; r < cellRows; ++r) {
        const int sr = std::min(r, frame.rows - 1);
        for (int c = 0; c < cellCols; ++c)
            out.at(r, c) = frame.at(sr, std::min(c, frame.cols - 1));
    }
    return out;
}

struct BlockTask {
    int blockRow = 0, blockCol = 0;   // top-left pixel of the target block
    int originRow = 0, originCol = 0; // clamped window origin
    bool interior = false;            // no clamping was necessary
};

} // namespace

ReconstructionReport reconstruct(const MeasurementFrame& frame, const QuadrantPattern& pattern,
                                 const ReconstructionConfig& config, KernelCache* cache,
                                 const Image* reference) {
    validate_config(config, pattern);
    if (frame.rows < 1 || frame.cols < 1)
        throw std::invalid_argument("empty measurement frame");

    const int W = config.window;
    const int B = config.block;
    const int M = 2 * frame.rows, N = 2 * frame.cols;
    const int step = std::lcm(B, 2);
    const int padM = round_up(M, step), padN = round_up(N, step);
    if (padM < W || padN < W)
        throw std::invalid_argument("image is smaller than the model window");

    const MeasurementFrame* work = &frame;
    MeasurementFrame padded;
    if (padM != M || padN != N) {
        padded = pad_frame(frame, padM / 2, padN / 2);
        work = &padded;
    }

    const int lead = (W - B) / 2;
    std::vector<BlockTask> tasks;
    tasks.reserve(static_cast<size_t>(padM / B) * (padN / B));
    std::set<OffsetClass> classesAll, classesInterior;
    std::map<OffsetClass, std::pair<int, int>> representative;
    for (int br = 0; br + B <= padM; br += B) {
        for (int bc = 0; bc + B <= padN; bc += B) {
            BlockTask t;
            t.blockRow = br;
            t.blockCol = bc;
            const int wantRow = br - lead, wantCol = bc - lead;
            t.originRow = std::clamp(wantRow, 0, padM - W);
            t.originCol = std::clamp(wantCol, 0, padN - W);
            t.interior = (t.originRow == wantRow && t.originCol == wantCol);

            const OffsetClass key = offset_class(t.originRow, t.originCol, pattern.period);
            classesAll.insert(key);
            if (t.interior)
                classesInterior.insert(key);
            representative.emplace(key, std::pair{t.originRow, t.originCol});
            tasks.push_back(t);
        }
    }

    const std::vector<double> q = frequency_weights(W, config.weighting);

    KernelCache localCache;
    const bool recurrent = config.algorithm == Algorithm::Rljsde;
    KernelCache* kernels = recurrent ? (cache ? cache : &localCache) : nullptr;

    ReconstructionReport report;
    const uint64_t hits0 = kernels ? kernels->hits() : 0;
    const uint64_t misses0 = kernels ? kernels->misses() : 0;

    auto make_kernels = [&](OffsetClass key) {
        return [&, key]() {
            const auto [orow, ocol] = representative.at(key);
            LocalMeasurementMatrix localA = extract_local_matrix(pattern, orow, ocol, W);
            const std::vector<double> w = spatial_weights(localA, config.weighting);
            return precompute_kernels(localA, w, config.precision);
        };
    };

    if (recurrent) {
        // serial warm pass so workers never duplicate a heavy precompute
        const auto warm0 = clock_type::now();
        for (const OffsetClass& key : classesAll)
            kernels->get_or_compute(key, make_kernels(key));
        report.warmSeconds = elapsed_seconds(warm0, clock_type::now());
    }

    Image canvas(padM, padN);
    const auto run0 = clock_type::now();
    const int nThreads = config.threads == 0
                             ? static_cast<int>(std::thread::hardware_concurrency())
                             : config.threads;
    detail::run_parallel(nThreads, tasks.size(), [&](size_t i) {
        const BlockTask& t = tasks[i];
        std::vector<double> window;
        if (recurrent) {
            const OffsetClass key = offset_class(t.originRow, t.originCol, pattern.period);
            auto set = kernels->get_or_compute(key, make_kernels(key));
            if (set->window != W)
                throw std::logic_error("kernel cache holds a different window size");
            const std::vector<double> y =
                gather_local_values(*work, t.originRow, t.originCol, W);
            window = rljsde_block(y, *set, q, config.solver);
        } else {
            LocalSystem sys = extract_local_system(pattern, *work, t.originRow, t.originCol, W);
            const std::vector<double> w = spatial_weights(sys.matrix, config.weighting);
            window = ljsde_block(sys.values, sys.matrix, w, q, config.solver);
        }

        const int rowInWin = t.blockRow - t.originRow;
        const int colInWin = t.blockCol - t.originCol;
        for (int r = 0; r < B; ++r) {
            for (int c = 0; c < B; ++c) {
                double v = window[static_cast<size_t>(rowInWin + r) * W + colInWin + c];
                if (config.clipOutput)
                    v = std::clamp(v, 0.0, 1.0);
                canvas.at(t.blockRow + r, t.blockCol + c) = v;
            }
        }
    });
    report.seconds = elapsed_seconds(run0, clock_type::now());

    report.output = (padM != M || padN != N) ? crop_image(canvas, M, N) : std::move(canvas);
    report.blocksProcessed = static_cast<long>(tasks.size());
    report.classesTotal = classesAll.size();
    report.classesInterior = classesInterior.size();
    if (kernels) {
        report.cacheHits = kernels->hits() - hits0;
        report.cacheMisses = kernels->misses() - misses0;
        report.classesCreated = report.cacheMisses;
    }
    if (reference) {
        if (!reference->same_size(report.output))
            throw std::invalid_argument("reference dimensions do not match the reconstruction");
        report.psnrDb = psnr(*reference, report.output);
    }
    return report;
}

PaddedImage pad_to_block_multiple(const Image& image, int block) {
    if (block < 1)
        throw std::invalid_argument("block size must be positive");
    if (image.rows < 1 || image.cols < 1)
        throw std::invalid_argument("empty image");

    const int step = std::lcm(block, 2);
    PaddedImage out;
    out.originalRows = image.rows;
    out.originalCols = image.cols;
    const int rows = round_up(image.rows, step), cols = round_up(image.cols, step);
    if (rows == image.rows && cols == image.cols) {
        out.image = image;
        return out;
    }
    out.image = Image(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const int sr = std::min(r, image.rows - 1);
        for (int c = 0; c < cols; ++c)
            out.image.at(r, c) = image.at(sr, std::min(c, image.cols - 1));
    }
    return out;
}

Image crop_image(const Image& image, int rows, int cols) {
    if (rows < 0 || cols < 0 || rows > image.rows || cols > image.cols)
        throw std::invalid_argument("crop exceeds image bounds");
    Image out(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            out.at(r, c) = image.at(r, c);
    return out;
}

double psnr(const Image& reference, const Image& estimate) {
    if (!reference.same_size(estimate))
        throw std::invalid_argument("psnr: dimension mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < reference.size(); ++i) {
        const double d = reference.values[i] - estimate.values[i];
        sum += d * d;
    }
    const double mse = sum / double(reference.size());
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

Image nn_upsample(const MeasurementFrame& frame) {
    Image out(2 * frame.rows, 2 * frame.cols);
    for (int r = 0; r < frame.rows; ++r)
        for (int c = 0; c < frame.cols; ++c) {
            const double v = frame.at(r, c);
            out.at(2 * r, 2 * c) = v;
            out.at(2 * r, 2 * c + 1) = v;
            out.at(2 * r + 1, 2 * c) = v;
            out.at(2 * r + 1, 2 * c + 1) = v;
        }
    return out;
}

ReconstructionReport reconstruct_image(const Image& image, const QuadrantPattern& pattern,
                                       const ReconstructionConfig& config, KernelCache* cache) {
    PaddedImage padded = pad_to_block_multiple(image, config.block);
    MeasurementFrame frame = simulate_measurement(padded.image, pattern);
    ReconstructionReport report = reconstruct(frame, pattern, config, cache);
    report.output = crop_image(report.output, padded.originalRows, padded.originalCols);
    report.psnrDb = psnr(image, report.output);
    return report;
}

BenchResult bench(const std::vector<Image>& images, const QuadrantPattern& pattern,
                  const ReconstructionConfig& config, double equivalenceThreshold,
                  bool measureScaling) {
    if (images.empty())
        throw std::invalid_argument("bench requires at least one image");

    ReconstructionConfig cfgL = config;
    cfgL.algorithm = Algorithm::Ljsde;
    cfgL.threads = 1;
    cfgL.clipOutput = false;
    ReconstructionConfig cfgR = cfgL;
    cfgR.algorithm = Algorithm::Rljsde;

    BenchResult result;
    result.images = static_cast<int>(images.size());
    KernelCache cache;

    double sumL = 0.0, sumR = 0.0, sumWarm = 0.0;
    for (const Image& image : images) {
        PaddedImage padded = pad_to_block_multiple(image, config.block);
        MeasurementFrame frame = simulate_measurement(padded.image, pattern);

        ReconstructionReport runL = reconstruct(frame, pattern, cfgL);
        ReconstructionReport runR = reconstruct(frame, pattern, cfgR, &cache);
        sumL += runL.seconds;
        sumR += runR.seconds;
        sumWarm += runR.warmSeconds;

        for (size_t i = 0; i < runL.output.size(); ++i)
            result.maxAbsDifference = std::max(
                result.maxAbsDifference, std::abs(runL.output.values[i] - runR.output.values[i]));
    }
    result.ljsdeMeanSeconds = sumL / result.images;
    result.rljsdeMeanSeconds = sumR / result.images;
    result.rljsdeMeanWarmSeconds = sumWarm / result.images;
    result.speedup = result.rljsdeMeanSeconds > 0.0
                         ? result.ljsdeMeanSeconds / result.rljsdeMeanSeconds
                         : std::numeric_limits<double>::infinity();
    const double inclusive = result.rljsdeMeanSeconds + result.rljsdeMeanWarmSeconds;
    result.speedupInclWarm = inclusive > 0.0 ? result.ljsdeMeanSeconds / inclusive
                                             : std::numeric_limits<double>::infinity();

    if (result.maxAbsDifference > equivalenceThreshold)
        throw EquivalenceError("algorithms diverged: max abs difference " +
                                   std::to_string(result.maxAbsDifference) + " exceeds " +
                                   std::to_string(equivalenceThreshold),
                               result.maxAbsDifference);

    if (measureScaling) {
        PaddedImage padded = pad_to_block_multiple(images.front(), config.block);
        MeasurementFrame frame = simulate_measurement(padded.image, pattern);
        const int smallW = 16;
        auto perBlock = [&](Algorithm algo, int window, double& out) {
            ReconstructionConfig cfg = cfgL;
            cfg.algorithm = algo;
            cfg.window = window;
            KernelCache scalingCache; // kernels are window-specific
            ReconstructionReport run = reconstruct(frame, pattern, cfg,
                                                   algo == Algorithm::Rljsde ? &scalingCache
                                                                             : nullptr);
            out = run.seconds / double(run.blocksProcessed);
        };
        perBlock(Algorithm::Ljsde, smallW, result.ljsdePerBlockSmall);
        perBlock(Algorithm::Ljsde, config.window, result.ljsdePerBlockLarge);
        perBlock(Algorithm::Rljsde, smallW, result.rljsdePerBlockSmall);
        perBlock(Algorithm::Rljsde, config.window, result.rljsdePerBlockLarge);
        result.ljsdeScalingRatio = result.ljsdePerBlockLarge / result.ljsdePerBlockSmall;
        result.rljsdeScalingRatio = result.rljsdePerBlockLarge / result.rljsdePerBlockSmall;
        result.scalingMeasured = true;
    }
    return result;
}

} // namespace tqs
