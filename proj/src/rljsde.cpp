#include "tqs/rljsde.hpp"

#include <cstring>
#include <fstream>
#include <mutex>
#include <stdexcept>

#include "binio.hpp"

namespace tqs {

OffsetClass offset_class(int originRow, int originCol, int period) {
    if (period <= 0)
        throw std::invalid_argument("offset_class: period must be positive");
    auto wrap = [period](int v) { return ((v % period) + period) % period; };
    return OffsetClass{wrap(originRow), wrap(originCol)};
}

namespace {

// per-measurement conjugate transforms T_mk, frequency-major [k*L + m]
void build_transform(const LocalMeasurementMatrix& localA, std::vector<double>& tRe,
                     std::vector<double>& tIm) {
    const int W = localA.window;
    const int L = localA.localCount();
    tRe.resize(static_cast<size_t>(W) * W * L);
    tIm.resize(static_cast<size_t>(W) * W * L);

    FourierTable table(W);
    for (int sigma = 0; sigma < W; ++sigma) {
        for (int rho = 0; rho < W; ++rho) {
            const size_t k = static_cast<size_t>(sigma) * W + rho;
            double* colRe = tRe.data() + k * L;
            double* colIm = tIm.data() + k * L;
            for (int m = 0; m < L; ++m) {
                const LocalMeasurement& e = localA.entries[m];
                double re = 0.0, im = 0.0;
                for (const PixelCoeff& px : e.pixels) {
                    const cplx& u = table.unit[(px.eta * sigma + px.gamma * rho) % W];
                    re += px.coeff * u.real();
                    im -= px.coeff * u.imag(); // conjugate basis
                }
                colRe[m] = re;
                colIm[m] = im;
            }
        }
    }
}

template <class S>
void fill_planes(KernelPlanes<S>& out, const LocalMeasurementMatrix& localA,
                 std::span<const double> weights) {
    const int W = localA.window;
    const int L = localA.localCount();
    const int K = W * W;

    std::vector<double> tRe, tIm;
    build_transform(localA, tRe, tIm);

    // B = w (*) T, kept in double for the C accumulation below
    std::vector<double> bRe(tRe.size()), bIm(tIm.size());
    for (int k = 0; k < K; ++k) {
        const size_t base = static_cast<size_t>(k) * L;
        for (int m = 0; m < L; ++m) {
            bRe[base + m] = weights[m] * tRe[base + m];
            bIm[base + m] = weights[m] * tIm[base + m];
        }
    }

    out.bRe.resize(bRe.size());
    out.bIm.resize(bIm.size());
    for (size_t i = 0; i < bRe.size(); ++i) {
        out.bRe[i] = static_cast<S>(bRe[i]);
        out.bIm[i] = static_cast<S>(bIm[i]);
    }

    // C_sk,uk = sum_m B_m,sk * conj(T_m,uk); Hermitian, so only columns'
    // lower halves are summed and the rest mirrored
    out.cRe.resize(static_cast<size_t>(K) * K);
    out.cIm.resize(static_cast<size_t>(K) * K);
    out.d.resize(K);
    for (int uk = 0; uk < K; ++uk) {
        const double* uRe = tRe.data() + static_cast<size_t>(uk) * L;
        const double* uIm = tIm.data() + static_cast<size_t>(uk) * L;
        for (int sk = uk; sk < K; ++sk) {
            const double* sRe = bRe.data() + static_cast<size_t>(sk) * L;
            const double* sIm = bIm.data() + static_cast<size_t>(sk) * L;
            double accRe = 0.0, accIm = 0.0;
            for (int m = 0; m < L; ++m) {
                accRe += sRe[m] * uRe[m] + sIm[m] * uIm[m];
                accIm += sIm[m] * uRe[m] - sRe[m] * uIm[m];
            }
            out.cRe[static_cast<size_t>(uk) * K + sk] = static_cast<S>(accRe);
            out.cIm[static_cast<size_t>(uk) * K + sk] = static_cast<S>(accIm);
            if (sk != uk) {
                out.cRe[static_cast<size_t>(sk) * K + uk] = static_cast<S>(accRe);
                out.cIm[static_cast<size_t>(sk) * K + uk] = static_cast<S>(-accIm);
            }
        }
        out.d[uk] = out.cRe[static_cast<size_t>(uk) * K + uk];
    }
}

template <class S>
std::vector<cplx> init_impl(const KernelPlanes<S>& kp, int W, int L,
                            std::span<const double> yLocal) {
    const int K = W * W;
    std::vector<cplx> R(K);
    for (int k = 0; k < K; ++k) {
        const S* colRe = kp.bRe.data() + static_cast<size_t>(k) * L;
        const S* colIm = kp.bIm.data() + static_cast<size_t>(k) * L;
        double re = 0.0, im = 0.0;
        for (int m = 0; m < L; ++m) {
            re += double(colRe[m]) * yLocal[m];
            im += double(colIm[m]) * yLocal[m];
        }
        R[k] = cplx{re, im};
    }
    return R;
}

template <class S>
std::vector<double> block_impl(const KernelPlanes<S>& kp, int W, int L,
                               std::span<const double> yLocal, std::span<const double> q,
                               const SolverOptions& options, const IterationHook& hook) {
    const int K = W * W;
    std::vector<double> RRe(K), RIm(K);
    for (int k = 0; k < K; ++k) {
        const S* colRe = kp.bRe.data() + static_cast<size_t>(k) * L;
        const S* colIm = kp.bIm.data() + static_cast<size_t>(k) * L;
        double re = 0.0, im = 0.0;
        for (int m = 0; m < L; ++m) {
            re += double(colRe[m]) * yLocal[m];
            im += double(colIm[m]) * yLocal[m];
        }
        RRe[k] = re;
        RIm[k] = im;
    }

    ModelCoefficients coeffs(W);
    std::vector<cplx> snapshot;
    const double gamma = options.stepWidth;

    for (int iter = 0; iter < options.maxIterations; ++iter) {
        int best = -1;
        double bestScore = 0.0;
        for (int k = 0; k < K; ++k) {
            const double dk = double(kp.d[k]);
            if (dk <= 0.0)
                continue;
            const double s = selection_score(q[k], RRe[k] * RRe[k] + RIm[k] * RIm[k], dk);
            if (best < 0 || s > bestScore) {
                best = k;
                bestScore = s;
            }
        }
        if (best < 0)
            break;

        const int u = best;
        const double du = double(kp.d[u]);
        const double gdRe = gamma * (RRe[u] / du);
        const double gdIm = gamma * (RIm[u] / du);
        coeffs.add(u, cplx{gdRe, gdIm});

        const S* colRe = kp.cRe.data() + static_cast<size_t>(u) * K;
        const S* colIm = kp.cIm.data() + static_cast<size_t>(u) * K;
        for (int sk = 0; sk < K; ++sk) {
            const double cr = double(colRe[sk]), ci = double(colIm[sk]);
            RRe[sk] -= gdRe * cr - gdIm * ci;
            RIm[sk] -= gdRe * ci + gdIm * cr;
        }

        if (hook) {
            snapshot.resize(K);
            for (int k = 0; k < K; ++k)
                snapshot[k] = cplx{RRe[k], RIm[k]};
            hook(iter, u, cplx{gdRe, gdIm}, snapshot);
        }
    }
    return synthesize_real(coeffs);
}

} // namespace

KernelSet precompute_kernels(const LocalMeasurementMatrix& localA, std::span<const double> weights,
                             Precision precision) {
    const int L = localA.localCount();
    if (static_cast<int>(weights.size()) != L)
        throw std::invalid_argument("weight vector does not match local measurement count");

    KernelSet set;
    set.window = localA.window;
    set.local = L;
    set.precision = precision;
    if (precision == Precision::Double)
        fill_planes(set.p64, localA, weights);
    else
        fill_planes(set.p32, localA, weights);
    return set;
}

std::vector<cplx> init_projected_residual(const KernelSet& kernels, std::span<const double> yLocal) {
    if (static_cast<int>(yLocal.size()) != kernels.local)
        throw std::invalid_argument("measurement vector does not match kernel local count");
    return kernels.precision == Precision::Double
               ? init_impl(kernels.p64, kernels.window, kernels.local, yLocal)
               : init_impl(kernels.p32, kernels.window, kernels.local, yLocal);
}

Selection rljsde_select(std::span<const cplx> R, const KernelSet& kernels,
                        std::span<const double> q) {
    const int K = kernels.freqCount();
    if (static_cast<int>(R.size()) != K || static_cast<int>(q.size()) != K)
        throw std::invalid_argument("projected residual / frequency weights do not match kernels");

    Selection best{-1, 0.0};
    for (int k = 0; k < K; ++k) {
        const double dk = kernels.dAt(k);
        if (dk <= 0.0)
            continue;
        const double mag2 = R[k].real() * R[k].real() + R[k].imag() * R[k].imag();
        const double s = selection_score(q[k], mag2, dk);
        if (best.index < 0 || s > best.score) {
            best.index = k;
            best.score = s;
        }
    }
    return best;
}

cplx rljsde_update(std::vector<cplx>& R, ModelCoefficients& coeffs, const KernelSet& kernels,
                   int chosenIndex, double stepWidth) {
    const int K = kernels.freqCount();
    const double du = kernels.dAt(chosenIndex);
    if (du <= 0.0)
        throw std::invalid_argument("rljsde_update: chosen frequency has zero energy");

    const cplx delta = R[chosenIndex] / du;
    const cplx gd = stepWidth * delta;
    coeffs.add(chosenIndex, gd);

    auto apply = [&](const auto& planes) {
        const auto* colRe = planes.cRe.data() + static_cast<size_t>(chosenIndex) * K;
        const auto* colIm = planes.cIm.data() + static_cast<size_t>(chosenIndex) * K;
        for (int sk = 0; sk < K; ++sk) {
            const double cr = double(colRe[sk]), ci = double(colIm[sk]);
            R[sk] -= cplx{gd.real() * cr - gd.imag() * ci, gd.real() * ci + gd.imag() * cr};
        }
    };
    if (kernels.precision == Precision::Double)
        apply(kernels.p64);
    else
        apply(kernels.p32);
    return delta;
}

std::vector<double> rljsde_block(std::span<const double> yLocal, const KernelSet& kernels,
                                 std::span<const double> q, const SolverOptions& options,
                                 const IterationHook& hook) {
    if (static_cast<int>(yLocal.size()) != kernels.local)
        throw std::invalid_argument("measurement vector does not match kernel local count");
    if (static_cast<int>(q.size()) != kernels.freqCount())
        throw std::invalid_argument("frequency weight grid does not match kernels");
    if (options.stepWidth <= 0.0 || options.stepWidth > 1.0)
        throw std::invalid_argument("step width must lie in (0,1]");

    return kernels.precision == Precision::Double
               ? block_impl(kernels.p64, kernels.window, kernels.local, yLocal, q, options, hook)
               : block_impl(kernels.p32, kernels.window, kernels.local, yLocal, q, options, hook);
}

std::shared_ptr<const KernelSet> KernelCache::find(OffsetClass key) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : it->second;
}

std::shared_ptr<const KernelSet> KernelCache::get_or_compute(
    OffsetClass key, const std::function<KernelSet()>& factory) {
    if (auto hit = find(key)) {
        hits_.fetch_add(1, std::memory_order_relaxed);
        return hit;
    }
    misses_.fetch_add(1, std::memory_order_relaxed);
    auto computed = std::make_shared<const KernelSet>(factory());
    std::unique_lock lock(mutex_);
    auto [it, inserted] = entries_.emplace(key, computed);
    return it->second; // racing duplicates resolve to the first insert
}

void KernelCache::insert(OffsetClass key, KernelSet kernels) {
    auto value = std::make_shared<const KernelSet>(std::move(kernels));
    std::unique_lock lock(mutex_);
    entries_.emplace(key, std::move(value));
}

size_t KernelCache::classCount() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::vector<OffsetClass> KernelCache::keys() const {
    std::shared_lock lock(mutex_);
    std::vector<OffsetClass> out;
    out.reserve(entries_.size());
    for (const auto& [key, value] : entries_)
        out.push_back(key);
    return out;
}

void KernelCache::resetStats() {
    hits_.store(0);
    misses_.store(0);
}

void KernelCache::clear() {
    std::unique_lock lock(mutex_);
    entries_.clear();
}

MemoryReport kernel_memory_report(int classes, int window, Precision precision, int localCount) {
    if (classes < 0 || window <= 0)
        throw std::invalid_argument("kernel_memory_report: invalid shape");
    const uint64_t K = uint64_t(window) * window;
    const uint64_t L = localCount < 0 ? K / 4 : uint64_t(localCount);
    const uint64_t cplxBytes = precision == Precision::Single ? 8 : 16;

    MemoryReport r;
    r.bBytes = uint64_t(classes) * L * K * cplxBytes;
    r.cBytes = uint64_t(classes) * K * K * cplxBytes;
    r.dBytes = uint64_t(classes) * K * cplxBytes;
    r.totalBytes = r.bBytes + r.cBytes + r.dBytes;
    return r;
}

uint64_t pattern_digest(const QuadrantPattern& pattern) {
    uint64_t h = 14695981039346656037ull;
    auto mix = [&h](uint8_t byte) {
        h ^= byte;
        h *= 1099511628211ull;
    };
    for (int i = 0; i < 4; ++i)
        mix(static_cast<uint8_t>(uint32_t(pattern.period) >> (8 * i)));
    for (uint8_t q : pattern.opaque)
        mix(q);
    return h;
}

namespace {

constexpr char kKernelMagic[4] = {'T', 'Q', 'S', 'K'};

template <class S>
void write_plane(std::ostream& out, const std::vector<S>& v) {
    for (S x : v) {
        if constexpr (std::is_same_v<S, double>)
            binio::put_f64(out, x);
        else
            binio::put_f32(out, x);
    }
}

template <class S>
void read_plane(std::istream& in, std::vector<S>& v, size_t n) {
    v.resize(n);
    for (size_t i = 0; i < n; ++i) {
        if constexpr (std::is_same_v<S, double>)
            v[i] = binio::get_f64(in);
        else
            v[i] = binio::get_f32(in);
    }
}

template <class S>
void write_planes(std::ostream& out, const KernelPlanes<S>& p) {
    write_plane(out, p.bRe);
    write_plane(out, p.bIm);
    write_plane(out, p.cRe);
    write_plane(out, p.cIm);
    write_plane(out, p.d);
}

template <class S>
void read_planes(std::istream& in, KernelPlanes<S>& p, size_t K, size_t L) {
    read_plane(in, p.bRe, K * L);
    read_plane(in, p.bIm, K * L);
    read_plane(in, p.cRe, K * K);
    read_plane(in, p.cIm, K * K);
    read_plane(in, p.d, K);
}

} // namespace

void save_kernel_cache(const std::string& path, const KernelCache& cache,
                       const KernelCacheHeader& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error(path + ": cannot open for writing");

    const auto keys = cache.keys();
    out.write(kKernelMagic, 4);
    binio::put_u32(out, static_cast<uint32_t>(header.window));
    binio::put_u32(out, static_cast<uint32_t>(header.period));
    binio::put_u32(out, header.precision == Precision::Single ? 0u : 1u);
    binio::put_f64(out, header.weighting.spatialDecay);
    binio::put_f64(out, header.weighting.frequencyExponent);
    binio::put_u64(out, header.patternDigest);
    binio::put_u32(out, static_cast<uint32_t>(keys.size()));

    for (OffsetClass key : keys) {
        auto set = cache.find(key);
        if (!set)
            continue;
        if (set->window != header.window || set->precision != header.precision)
            throw std::runtime_error(path + ": cache entry does not match header");
        binio::put_u32(out, static_cast<uint32_t>(key.row));
        binio::put_u32(out, static_cast<uint32_t>(key.col));
        binio::put_u32(out, static_cast<uint32_t>(set->local));
        if (set->precision == Precision::Double)
            write_planes(out, set->p64);
        else
            write_planes(out, set->p32);
    }
    if (!out)
        throw std::runtime_error(path + ": write failed");
}

void load_kernel_cache(const std::string& path, KernelCache& cache,
                       const KernelCacheHeader& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error(path + ": cannot open for reading");

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kKernelMagic, 4) != 0)
        throw std::runtime_error(path + ": not a TQSK kernel cache");

    const int window = static_cast<int>(binio::get_u32(in));
    const int period = static_cast<int>(binio::get_u32(in));
    const Precision precision = binio::get_u32(in) == 0 ? Precision::Single : Precision::Double;
    const double spatialDecay = binio::get_f64(in);
    const double frequencyExponent = binio::get_f64(in);
    const uint64_t digest = binio::get_u64(in);
    const uint32_t classCount = binio::get_u32(in);
    if (!in)
        throw std::runtime_error(path + ": truncated header");

    if (window != expected.window || period != expected.period ||
        precision != expected.precision || digest != expected.patternDigest ||
        spatialDecay != expected.weighting.spatialDecay ||
        frequencyExponent != expected.weighting.frequencyExponent)
        throw std::runtime_error(path + ": kernel cache does not match the current configuration");

    const size_t K = static_cast<size_t>(window) * window;
    for (uint32_t i = 0; i < classCount; ++i) {
        OffsetClass key{static_cast<int>(binio::get_u32(in)), static_cast<int>(binio::get_u32(in))};
        const size_t L = binio::get_u32(in);
        if (!in || L > K)
            throw std::runtime_error(path + ": corrupt class record");

        KernelSet set;
        set.window = window;
        set.local = static_cast<int>(L);
        set.precision = precision;
        if (precision == Precision::Double)
            read_planes(in, set.p64, K, L);
        else
            read_planes(in, set.p32, K, L);
        if (!in)
            throw std::runtime_error(path + ": truncated class payload");
        cache.insert(key, std::move(set));
    }
}

} // namespace tqs
