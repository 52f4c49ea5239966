#pragma once
// Recurrent solver: per offset class, the projection matrix B, the
// frequency-interaction matrix C and its diagonal D are precomputed once;
// each block then iterates on the projected residual alone.

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "tqs/basis.hpp"
#include "tqs/grid.hpp"
#include "tqs/ljsde.hpp" // IterationHook

namespace tqs {

enum class Precision { Single, Double };

// window origin modulo the pattern period; windows in the same class share
// the same local measurement matrix and hence the same kernels
struct OffsetClass {
    int row = 0;
    int col = 0;
    auto operator<=>(const OffsetClass&) const = default;
};

OffsetClass offset_class(int originRow, int originCol, int period);

template <class S>
struct KernelPlanes {
    std::vector<S> bRe, bIm; // B_mk, column k = sigma*W+rho contiguous over m: [k*L + m]
    std::vector<S> cRe, cIm; // C_sk(uk), column uk contiguous over sk: [uk*K + sk]
    std::vector<S> d;        // D_k = C_kk (real)
};

struct KernelSet {
    int window = 0;
    int local = 0;
    Precision precision = Precision::Double;
    KernelPlanes<double> p64; // populated when precision == Double
    KernelPlanes<float> p32;  // populated when precision == Single

    int freqCount() const { return window * window; }
    double dAt(int k) const {
        return precision == Precision::Double ? p64.d[k] : double(p32.d[k]);
    }
};

// B = (A^local Phi*) with the spatial weights folded in, C the weighted
// cross-products of the per-measurement transforms, D the diagonal of C.
// Accumulation is always double; `precision` selects the storage type only.
KernelSet precompute_kernels(const LocalMeasurementMatrix& localA, std::span<const double> weights,
                             Precision precision = Precision::Double);

// R_k = sum_m B_mk y_m
std::vector<cplx> init_projected_residual(const KernelSet& kernels, std::span<const double> yLocal);

// argmax of q_k |R_k|^2 / D_k over frequencies with D_k > 0; ties resolve to
// the smallest flattened index; index -1 when no frequency is admissible
Selection rljsde_select(std::span<const cplx> R, const KernelSet& kernels, std::span<const double> q);

// delta = R_u/D_u; coefficient and projected-residual update with step width
// gamma (one column read of C); returns the unscaled delta
cplx rljsde_update(std::vector<cplx>& R, ModelCoefficients& coeffs, const KernelSet& kernels,
                   int chosenIndex, double stepWidth);

// Full block solve on precomputed kernels. The energy-based early stop of the
// baseline is not available here (the measurement residual is never formed);
// the hook receives the projected residual instead.
std::vector<double> rljsde_block(std::span<const double> yLocal, const KernelSet& kernels,
                                 std::span<const double> q, const SolverOptions& options,
                                 const IterationHook& hook = {});

// Memoized per-class kernel store; concurrent readers, duplicate computation
// on racing misses tolerated (results are identical).
class KernelCache {
public:
    std::shared_ptr<const KernelSet> find(OffsetClass key) const;
    std::shared_ptr<const KernelSet> get_or_compute(OffsetClass key,
                                                    const std::function<KernelSet()>& factory);
    void insert(OffsetClass key, KernelSet kernels);

    size_t classCount() const;
    std::vector<OffsetClass> keys() const;
    uint64_t hits() const { return hits_.load(); }
    uint64_t misses() const { return misses_.load(); }
    void resetStats();
    void clear();

private:
    mutable std::shared_mutex mutex_;
    std::map<OffsetClass, std::shared_ptr<const KernelSet>> entries_;
    mutable std::atomic<uint64_t> hits_{0};
    mutable std::atomic<uint64_t> misses_{0};
};

struct MemoryReport {
    uint64_t bBytes = 0, cBytes = 0, dBytes = 0, totalBytes = 0;
    double bMegabytes() const { return double(bBytes) / 1e6; }
    double cMegabytes() const { return double(cBytes) / 1e6; }
    double dMegabytes() const { return double(dBytes) / 1e6; }
    double totalMegabytes() const { return double(totalBytes) / 1e6; }
};

// Byte accounting for `classes` kernel sets (localCount < 0 selects the
// interior-window value W*W/4). MB values use 10^6 bytes.
MemoryReport kernel_memory_report(int classes, int window, Precision precision, int localCount = -1);

// content digest over period and quadrant layout (FNV-1a)
uint64_t pattern_digest(const QuadrantPattern& pattern);

// Kernel-cache persistence. The header pins everything the kernels depend on;
// loading rejects any mismatch.
struct KernelCacheHeader {
    int window = 0;
    int period = 0;
    Precision precision = Precision::Double;
    WeightingConfig weighting;
    uint64_t patternDigest = 0;
};

void save_kernel_cache(const std::string& path, const KernelCache& cache,
                       const KernelCacheHeader& header);
void load_kernel_cache(const std::string& path, KernelCache& cache,
                       const KernelCacheHeader& expected);

} // namespace tqs
