// three-quarter sampling toolbox: pattern synthesis, sensor simulation,
// reconstruction, output comparison, benchmarking, kernel memory accounting

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tqs/io.hpp"
#include "tqs/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitComparisonFailed = 1;
constexpr int kExitUsage = 2;

struct FormatOption {
    std::string value = "text";
    bool isJson() const { return value == "json"; }
};

void add_format_flag(CLI::App* cmd, FormatOption& fmt) {
    cmd->add_option("--format", fmt.value, "Report format (text|json)")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
}

json psnr_json(double db) {
    if (std::isinf(db))
        return json("identical");
    return json(db);
}

std::string psnr_text(double db) {
    if (std::isinf(db))
        return "identical";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", db);
    return buf;
}

struct ReconstructArgs {
    std::string input, patternPath, output, rawOutput, cachePath, referencePath;
    std::string algo = "rljsde";
    std::string precision = "double";
    int window = 32, block = 4, iterations = 200, threads = 0, bits = 8;
    double stepWidth = 0.5, spatialDecay = 0.8, frequencyExponent = 2.0;
    bool noClip = false;
    FormatOption format;
};

tqs::ReconstructionConfig to_config(const ReconstructArgs& a) {
    tqs::ReconstructionConfig cfg;
    cfg.window = a.window;
    cfg.block = a.block;
    cfg.solver.maxIterations = a.iterations;
    cfg.solver.stepWidth = a.stepWidth;
    cfg.weighting.spatialDecay = a.spatialDecay;
    cfg.weighting.frequencyExponent = a.frequencyExponent;
    cfg.precision = a.precision == "single" ? tqs::Precision::Single : tqs::Precision::Double;
    cfg.clipOutput = !a.noClip;
    cfg.algorithm = a.algo == "ljsde" ? tqs::Algorithm::Ljsde : tqs::Algorithm::Rljsde;
    cfg.threads = a.threads;
    return cfg;
}

void print_report(const tqs::ReconstructionReport& r, const ReconstructArgs& a) {
    if (a.format.isJson()) {
        json j{{"algorithm", a.algo},
               {"window", a.window},
               {"block", a.block},
               {"iterations", a.iterations},
               {"step_width", a.stepWidth},
               {"precision", a.precision},
               {"blocks", r.blocksProcessed},
               {"seconds", r.seconds},
               {"warm_seconds", r.warmSeconds},
               {"classes_total", r.classesTotal},
               {"classes_interior", r.classesInterior},
               {"classes_created", r.classesCreated},
               {"cache_hits", r.cacheHits},
               {"cache_misses", r.cacheMisses},
               {"rows", r.output.rows},
               {"cols", r.output.cols}};
        if (r.psnrDb)
            j["psnr_db"] = psnr_json(*r.psnrDb);
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::printf("algorithm:        %s\n", a.algo.c_str());
    std::printf("window/block:     %d/%d\n", a.window, a.block);
    std::printf("iterations:       %d (step width %g)\n", a.iterations, a.stepWidth);
    std::printf("precision:        %s\n", a.precision.c_str());
    std::printf("output:           %dx%d\n", r.output.rows, r.output.cols);
    std::printf("blocks:           %ld\n", r.blocksProcessed);
    std::printf("seconds:          %.3f\n", r.seconds);
    std::printf("warm seconds:     %.3f\n", r.warmSeconds);
    std::printf("offset classes:   %zu total, %zu interior, %zu created\n", r.classesTotal,
                r.classesInterior, r.classesCreated);
    std::printf("kernel cache:     %llu hits, %llu misses\n",
                static_cast<unsigned long long>(r.cacheHits),
                static_cast<unsigned long long>(r.cacheMisses));
    if (r.psnrDb)
        std::printf("psnr vs ref:      %s dB\n", psnr_text(*r.psnrDb).c_str());
}

int run_pattern(uint64_t seed, int period, const std::string& out) {
    tqs::QuadrantPattern p = tqs::generate_pattern(seed, period);
    tqs::write_pattern(out, p);
    std::printf("pattern: period=%d seed=%llu -> %s (%dx%d cells)\n", p.period,
                static_cast<unsigned long long>(p.seed), out.c_str(), p.cellsPerPeriod(),
                p.cellsPerPeriod());
    return kExitSuccess;
}

int run_simulate(const std::string& imagePath, const std::string& patternPath,
                 const std::string& out) {
    tqs::Image image = tqs::read_image_any(imagePath);
    tqs::QuadrantPattern pattern = tqs::read_pattern(patternPath);
    tqs::MeasurementFrame frame = tqs::simulate_measurement(image, pattern);
    tqs::write_frame(out, frame);
    std::printf("simulate: %dx%d image -> %dx%d frame (%zu measurements) -> %s\n", image.rows,
                image.cols, frame.rows, frame.cols, frame.size(), out.c_str());
    return kExitSuccess;
}

int run_reconstruct(const ReconstructArgs& a) {
    tqs::MeasurementFrame frame = tqs::read_frame(a.input);
    tqs::QuadrantPattern pattern = tqs::read_pattern(a.patternPath);
    tqs::ReconstructionConfig cfg = to_config(a);

    tqs::KernelCache cache;
    const bool useCacheFile = !a.cachePath.empty() && cfg.algorithm == tqs::Algorithm::Rljsde;
    tqs::KernelCacheHeader header{cfg.window, pattern.period, cfg.precision, cfg.weighting,
                                  tqs::pattern_digest(pattern)};
    bool cacheLoaded = false;
    if (useCacheFile && fs::exists(a.cachePath)) {
        tqs::load_kernel_cache(a.cachePath, cache, header);
        cacheLoaded = true;
    }

    tqs::Image reference;
    const tqs::Image* refPtr = nullptr;
    if (!a.referencePath.empty()) {
        reference = tqs::read_image_any(a.referencePath);
        refPtr = &reference;
    }

    tqs::ReconstructionReport report =
        tqs::reconstruct(frame, pattern, cfg,
                         cfg.algorithm == tqs::Algorithm::Rljsde ? &cache : nullptr, refPtr);

    if (useCacheFile && !cacheLoaded)
        tqs::save_kernel_cache(a.cachePath, cache, header);

    tqs::write_pgm(a.output, report.output, a.bits);
    if (!a.rawOutput.empty())
        tqs::write_raw_image(a.rawOutput, report.output);
    print_report(report, a);
    return kExitSuccess;
}

int run_compare(const std::string& pathA, const std::string& pathB, const std::string& refPath,
                double threshold, const FormatOption& fmt) {
    tqs::Image a = tqs::read_image_any(pathA);
    tqs::Image b = tqs::read_image_any(pathB);
    if (!a.same_size(b))
        throw std::invalid_argument("compare: image dimensions differ");

    double maxDiff = 0.0, sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a.values[i] - b.values[i]);
        maxDiff = std::max(maxDiff, d);
        sum += d * d;
    }
    const double mse = sum / double(a.size());
    const bool pass = maxDiff <= threshold;

    double psnrA = 0.0, psnrB = 0.0;
    bool haveRef = !refPath.empty();
    if (haveRef) {
        tqs::Image ref = tqs::read_image_any(refPath);
        psnrA = tqs::psnr(ref, a);
        psnrB = tqs::psnr(ref, b);
    }

    if (fmt.isJson()) {
        json j{{"max_abs_diff", maxDiff},
               {"mse", mse},
               {"threshold", threshold},
               {"pass", pass}};
        if (haveRef) {
            j["psnr_a_vs_ref"] = psnr_json(psnrA);
            j["psnr_b_vs_ref"] = psnr_json(psnrB);
        }
        std::cout << j.dump(2) << "\n";
    } else {
        std::printf("max abs diff:     %.3e\n", maxDiff);
        std::printf("mse:              %.3e\n", mse);
        if (haveRef) {
            std::printf("psnr A vs ref:    %s dB\n", psnr_text(psnrA).c_str());
            std::printf("psnr B vs ref:    %s dB\n", psnr_text(psnrB).c_str());
        }
        std::printf("result:           %s (threshold %.3e)\n", pass ? "PASS" : "FAIL", threshold);
    }
    return pass ? kExitSuccess : kExitComparisonFailed;
}

int run_bench(const std::string& dir, const ReconstructArgs& a, bool scaling, double threshold) {
    std::vector<fs::path> paths;
    if (!fs::is_directory(dir))
        throw std::invalid_argument("bench: not a directory: " + dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string ext = entry.path().extension().string();
        if (ext == ".pgm" || ext == ".tqsm")
            paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty())
        throw std::invalid_argument("bench: no .pgm/.tqsm images in " + dir);

    std::vector<tqs::Image> images;
    images.reserve(paths.size());
    for (const auto& p : paths)
        images.push_back(tqs::read_image_any(p.string()));

    tqs::QuadrantPattern pattern = tqs::read_pattern(a.patternPath);
    tqs::BenchResult r = tqs::bench(images, pattern, to_config(a), threshold, scaling);

    if (a.format.isJson()) {
        json j{{"images", r.images},
               {"ljsde_mean_seconds", r.ljsdeMeanSeconds},
               {"rljsde_mean_seconds", r.rljsdeMeanSeconds},
               {"rljsde_mean_warm_seconds", r.rljsdeMeanWarmSeconds},
               {"speedup", r.speedup},
               {"speedup_incl_warm", r.speedupInclWarm},
               {"max_abs_difference", r.maxAbsDifference}};
        if (r.scalingMeasured) {
            j["ljsde_per_block_w16"] = r.ljsdePerBlockSmall;
            j["ljsde_per_block_large"] = r.ljsdePerBlockLarge;
            j["rljsde_per_block_w16"] = r.rljsdePerBlockSmall;
            j["rljsde_per_block_large"] = r.rljsdePerBlockLarge;
            j["ljsde_scaling_ratio"] = r.ljsdeScalingRatio;
            j["rljsde_scaling_ratio"] = r.rljsdeScalingRatio;
        }
        std::cout << j.dump(2) << "\n";
    } else {
        std::printf("images:                 %d\n", r.images);
        std::printf("ljsde mean seconds:     %.3f\n", r.ljsdeMeanSeconds);
        std::printf("rljsde mean seconds:    %.3f (+%.3f warm)\n", r.rljsdeMeanSeconds,
                    r.rljsdeMeanWarmSeconds);
        std::printf("speedup:                %.2fx (%.2fx incl. warm)\n", r.speedup,
                    r.speedupInclWarm);
        std::printf("max abs difference:     %.3e\n", r.maxAbsDifference);
        if (r.scalingMeasured) {
            std::printf("ljsde per-block:        %.3e s (W=16)  %.3e s (W=%d)  ratio %.2f\n",
                        r.ljsdePerBlockSmall, r.ljsdePerBlockLarge, a.window,
                        r.ljsdeScalingRatio);
            std::printf("rljsde per-block:       %.3e s (W=16)  %.3e s (W=%d)  ratio %.2f\n",
                        r.rljsdePerBlockSmall, r.rljsdePerBlockLarge, a.window,
                        r.rljsdeScalingRatio);
        }
    }
    return kExitSuccess;
}

int run_kernel_report(int classes, int window, const std::string& precision, int local,
                      const FormatOption& fmt) {
    const tqs::Precision prec =
        precision == "double" ? tqs::Precision::Double : tqs::Precision::Single;
    tqs::MemoryReport r = tqs::kernel_memory_report(classes, window, prec, local);
    if (fmt.isJson()) {
        json j{{"classes", classes},
               {"window", window},
               {"precision", precision},
               {"b_bytes", r.bBytes},
               {"c_bytes", r.cBytes},
               {"d_bytes", r.dBytes},
               {"total_bytes", r.totalBytes},
               {"b_mb", r.bMegabytes()},
               {"c_mb", r.cMegabytes()},
               {"d_mb", r.dMegabytes()},
               {"total_mb", r.totalMegabytes()}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::printf("classes:    %d\n", classes);
        std::printf("window:     %d\n", window);
        std::printf("precision:  %s\n", precision.c_str());
        std::printf("B:          %12.6f MB  (%llu bytes)\n", r.bMegabytes(),
                    static_cast<unsigned long long>(r.bBytes));
        std::printf("C:          %12.6f MB  (%llu bytes)\n", r.cMegabytes(),
                    static_cast<unsigned long long>(r.cBytes));
        std::printf("D:          %12.6f MB  (%llu bytes)\n", r.dMegabytes(),
                    static_cast<unsigned long long>(r.dBytes));
        std::printf("total:      %12.6f MB  (%llu bytes)\n", r.totalMegabytes(),
                    static_cast<unsigned long long>(r.totalBytes));
    }
    return kExitSuccess;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"three-quarter sampling reconstruction toolbox"};
    app.require_subcommand(1);

    // pattern
    uint64_t seed = 1;
    int period = 32;
    std::string patternOut;
    auto* cmdPattern = app.add_subcommand("pattern", "Generate a sampling pattern file");
    cmdPattern->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmdPattern->add_option("--period", period, "Repetition period in pixels")
        ->capture_default_str();
    cmdPattern->add_option("-o,--output", patternOut, "Output pattern file")->required();

    // simulate
    std::string simImage, simPattern, simOut;
    auto* cmdSimulate = app.add_subcommand("simulate", "Simulate sensor measurements");
    cmdSimulate->add_option("--image", simImage, "Input image (.pgm or .tqsm)")->required();
    cmdSimulate->add_option("--pattern", simPattern, "Pattern file")->required();
    cmdSimulate->add_option("-o,--output", simOut, "Output measurement file")->required();

    // reconstruct
    ReconstructArgs rec;
    auto* cmdReconstruct = app.add_subcommand("reconstruct", "Reconstruct an image");
    cmdReconstruct->add_option("--input", rec.input, "Measurement file")->required();
    cmdReconstruct->add_option("--pattern", rec.patternPath, "Pattern file")->required();
    cmdReconstruct->add_option("-o,--output", rec.output, "Output image (.pgm)")->required();
    cmdReconstruct->add_option("--raw", rec.rawOutput, "Full-precision output dump (.tqsm)");
    cmdReconstruct->add_option("--algo", rec.algo, "Algorithm")
        ->check(CLI::IsMember({"ljsde", "rljsde"}))
        ->capture_default_str();
    cmdReconstruct->add_option("--window", rec.window, "Model window size")
        ->capture_default_str();
    cmdReconstruct->add_option("--block", rec.block, "Target block size")->capture_default_str();
    cmdReconstruct->add_option("--iterations", rec.iterations, "Iterations per block")
        ->capture_default_str();
    cmdReconstruct->add_option("--step", rec.stepWidth, "Update step width")
        ->capture_default_str();
    cmdReconstruct->add_option("--spatial-decay", rec.spatialDecay, "Spatial weight decay")
        ->capture_default_str();
    cmdReconstruct
        ->add_option("--frequency-exponent", rec.frequencyExponent, "Frequency weight exponent")
        ->capture_default_str();
    cmdReconstruct->add_option("--precision", rec.precision, "Kernel storage precision")
        ->check(CLI::IsMember({"single", "double"}))
        ->capture_default_str();
    cmdReconstruct->add_option("--threads", rec.threads, "Worker threads (0 = all cores)")
        ->capture_default_str();
    cmdReconstruct->add_option("--bits", rec.bits, "Output bit depth (8|16)")
        ->check(CLI::IsMember({8, 16}))
        ->capture_default_str();
    cmdReconstruct->add_flag("--no-clip", rec.noClip, "Skip clipping output to [0,1]");
    cmdReconstruct->add_option("--kernel-cache", rec.cachePath,
                               "Kernel cache file (.tqsk), loaded if present, else written");
    cmdReconstruct->add_option("--reference", rec.referencePath, "Reference image for PSNR");
    add_format_flag(cmdReconstruct, rec.format);

    // compare
    std::string cmpA, cmpB, cmpRef;
    double cmpThreshold = 1e-6;
    FormatOption cmpFormat;
    auto* cmdCompare = app.add_subcommand("compare", "Compare two images");
    cmdCompare->add_option("a", cmpA, "First image")->required();
    cmdCompare->add_option("b", cmpB, "Second image")->required();
    cmdCompare->add_option("--reference", cmpRef, "Reference image for PSNR");
    cmdCompare->add_option("--threshold", cmpThreshold, "Max abs difference for exit 0")
        ->capture_default_str();
    add_format_flag(cmdCompare, cmpFormat);

    // bench
    ReconstructArgs ben;
    std::string benchDir;
    bool benchScaling = false;
    double benchThreshold = 1e-6;
    auto* cmdBench = app.add_subcommand("bench", "Benchmark both algorithms on an image set");
    cmdBench->add_option("--images", benchDir, "Directory of .pgm/.tqsm images")->required();
    cmdBench->add_option("--pattern", ben.patternPath, "Pattern file")->required();
    cmdBench->add_option("--window", ben.window, "Model window size")->capture_default_str();
    cmdBench->add_option("--block", ben.block, "Target block size")->capture_default_str();
    cmdBench->add_option("--iterations", ben.iterations, "Iterations per block")
        ->capture_default_str();
    cmdBench->add_option("--step", ben.stepWidth, "Update step width")->capture_default_str();
    cmdBench->add_option("--threshold", benchThreshold, "Equivalence threshold")
        ->capture_default_str();
    cmdBench->add_flag("--scaling", benchScaling, "Also measure per-block window scaling");
    add_format_flag(cmdBench, ben.format);

    // kernel-report
    int krClasses = 64, krWindow = 32, krLocal = -1;
    std::string krPrecision = "single";
    FormatOption krFormat;
    auto* cmdKernelReport =
        app.add_subcommand("kernel-report", "Kernel memory accounting");
    cmdKernelReport->add_option("--classes", krClasses, "Offset class count")
        ->capture_default_str();
    cmdKernelReport->add_option("--window", krWindow, "Model window size")
        ->capture_default_str();
    cmdKernelReport->add_option("--precision", krPrecision, "Storage precision")
        ->check(CLI::IsMember({"single", "double"}))
        ->capture_default_str();
    cmdKernelReport->add_option("--local", krLocal,
                                "Local measurement count (-1 = interior default)");
    add_format_flag(cmdKernelReport, krFormat);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitSuccess : kExitUsage;
    }

    try {
        if (cmdPattern->parsed())
            return run_pattern(seed, period, patternOut);
        if (cmdSimulate->parsed())
            return run_simulate(simImage, simPattern, simOut);
        if (cmdReconstruct->parsed())
            return run_reconstruct(rec);
        if (cmdCompare->parsed())
            return run_compare(cmpA, cmpB, cmpRef, cmpThreshold, cmpFormat);
        if (cmdBench->parsed())
            return run_bench(benchDir, ben, benchScaling, benchThreshold);
        if (cmdKernelReport->parsed())
            return run_kernel_report(krClasses, krWindow, krPrecision, krLocal, krFormat);
    } catch (const tqs::EquivalenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitComparisonFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
