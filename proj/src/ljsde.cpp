#include "tqs/ljsde.hpp"

#include <cmath>
#include <stdexcept>

namespace tqs {

double weighted_residual_energy(std::span<const cplx> residual, std::span<const double> weights) {
    if (residual.size() != weights.size())
        throw std::invalid_argument("weighted_residual_energy: length mismatch");
    double e = 0.0;
    for (size_t m = 0; m < residual.size(); ++m)
        e += (residual[m].real() * residual[m].real() + residual[m].imag() * residual[m].imag()) *
             weights[m];
    return e;
}

namespace {

// Weighted conjugate transform of the local measurement matrix, stored
// frequency-major (column k = flattened sigma*W+rho contiguous over m),
// split into real/imaginary planes. den[k] = sum_m w_m |T_mk|^2.
struct WeightedProjection {
    int window = 0;
    int local = 0;
    std::vector<double> re, im; // w_m * T_mk at [k*local + m]
    std::vector<double> den;
};

WeightedProjection build_projection(const LocalMeasurementMatrix& localA,
                                    std::span<const double> weights) {
    const int W = localA.window;
    const int L = localA.localCount();
    if (static_cast<int>(weights.size()) != L)
        throw std::invalid_argument("weight vector does not match local measurement count");

    WeightedProjection p;
    p.window = W;
    p.local = L;
    p.re.resize(static_cast<size_t>(W) * W * L);
    p.im.resize(static_cast<size_t>(W) * W * L);
    p.den.assign(static_cast<size_t>(W) * W, 0.0);

    FourierTable table(W);
    for (int sigma = 0; sigma < W; ++sigma) {
        for (int rho = 0; rho < W; ++rho) {
            const int k = sigma * W + rho;
            double* colRe = p.re.data() + static_cast<size_t>(k) * L;
            double* colIm = p.im.data() + static_cast<size_t>(k) * L;
            double den = 0.0;
            for (int m = 0; m < L; ++m) {
                const LocalMeasurement& e = localA.entries[m];
                double tRe = 0.0, tIm = 0.0;
                for (const PixelCoeff& px : e.pixels) {
                    const cplx& u = table.unit[(px.eta * sigma + px.gamma * rho) % W];
                    tRe += px.coeff * u.real();
                    tIm -= px.coeff * u.imag(); // conjugate basis
                }
                const double w = weights[m];
                colRe[m] = w * tRe;
                colIm[m] = w * tIm;
                den += w * (tRe * tRe + tIm * tIm);
            }
            p.den[k] = den;
        }
    }
    return p;
}

// numerators N_k = sum_m (w T)_mk r_m for every frequency, then the argmax of
// q_k |N_k|^2 / den_k; strict > scan keeps the smallest index on ties
Selection score_all(const WeightedProjection& p, const double* rRe, const double* rIm,
                    std::span<const double> q, double* numRe, double* numIm, double* scores) {
    const int K = p.window * p.window;
    const int L = p.local;
    Selection best{-1, 0.0};
    for (int k = 0; k < K; ++k) {
        const double* colRe = p.re.data() + static_cast<size_t>(k) * L;
        const double* colIm = p.im.data() + static_cast<size_t>(k) * L;
        double nRe = 0.0, nIm = 0.0;
        for (int m = 0; m < L; ++m) {
            nRe += colRe[m] * rRe[m] - colIm[m] * rIm[m];
            nIm += colRe[m] * rIm[m] + colIm[m] * rRe[m];
        }
        numRe[k] = nRe;
        numIm[k] = nIm;
        if (p.den[k] <= 0.0) {
            if (scores) scores[k] = 0.0;
            continue;
        }
        const double s = selection_score(q[k], nRe * nRe + nIm * nIm, p.den[k]);
        if (scores) scores[k] = s;
        if (best.index < 0 || s > best.score) {
            best.index = k;
            best.score = s;
        }
    }
    return best;
}

} // namespace

ScoredSelection ljsde_select(std::span<const cplx> residual, const LocalMeasurementMatrix& localA,
                             std::span<const double> weights, std::span<const double> q) {
    const int W = localA.window;
    const int K = W * W;
    const int L = localA.localCount();
    if (static_cast<int>(residual.size()) != L)
        throw std::invalid_argument("residual length does not match local measurement count");
    if (static_cast<int>(q.size()) != K)
        throw std::invalid_argument("frequency weight grid does not match window");

    WeightedProjection p = build_projection(localA, weights);
    std::vector<double> rRe(L), rIm(L);
    for (int m = 0; m < L; ++m) {
        rRe[m] = residual[m].real();
        rIm[m] = residual[m].imag();
    }
    ScoredSelection out;
    out.scores.resize(K);
    std::vector<double> numRe(K), numIm(K);
    out.best = score_all(p, rRe.data(), rIm.data(), q, numRe.data(), numIm.data(), out.scores.data());
    return out;
}

std::vector<double> ljsde_block(std::span<const double> yLocal, const LocalMeasurementMatrix& localA,
                                std::span<const double> weights, std::span<const double> q,
                                const SolverOptions& options, const IterationHook& hook) {
    const int W = localA.window;
    const int K = W * W;
    const int L = localA.localCount();
    if (static_cast<int>(yLocal.size()) != L)
        throw std::invalid_argument("measurement vector does not match local measurement count");
    if (static_cast<int>(q.size()) != K)
        throw std::invalid_argument("frequency weight grid does not match window");
    if (options.stepWidth <= 0.0 || options.stepWidth > 1.0)
        throw std::invalid_argument("step width must lie in (0,1]");

    WeightedProjection p = build_projection(localA, weights);

    std::vector<double> rRe(yLocal.begin(), yLocal.end()), rIm(L, 0.0);
    std::vector<double> numRe(K), numIm(K);
    ModelCoefficients coeffs(W);
    std::vector<cplx> snapshot;

    const double energyFloor = options.earlyStop ? options.earlyStopScale * L : -1.0;

    for (int iter = 0; iter < options.maxIterations; ++iter) {
        Selection sel = score_all(p, rRe.data(), rIm.data(), q, numRe.data(), numIm.data(), nullptr);
        if (sel.index < 0)
            break;

        const int u = sel.index;
        const double gamma = options.stepWidth;
        const cplx delta{numRe[u] / p.den[u], numIm[u] / p.den[u]};
        const double gdRe = gamma * delta.real(), gdIm = gamma * delta.imag();
        coeffs.add(u, cplx{gdRe, gdIm});

        // r_m -= gamma*delta * conj(T_mu); the stored column carries w_m T_mu
        const double* colRe = p.re.data() + static_cast<size_t>(u) * L;
        const double* colIm = p.im.data() + static_cast<size_t>(u) * L;
        for (int m = 0; m < L; ++m) {
            const double tRe = colRe[m] / weights[m];
            const double tIm = -colIm[m] / weights[m];
            rRe[m] -= gdRe * tRe - gdIm * tIm;
            rIm[m] -= gdRe * tIm + gdIm * tRe;
        }

        if (hook) {
            snapshot.resize(L);
            for (int m = 0; m < L; ++m)
                snapshot[m] = cplx{rRe[m], rIm[m]};
            hook(iter, u, cplx{gdRe, gdIm}, snapshot);
        }

        if (options.earlyStop) {
            double e = 0.0;
            for (int m = 0; m < L; ++m)
                e += (rRe[m] * rRe[m] + rIm[m] * rIm[m]) * weights[m];
            if (e < energyFloor)
                break;
        }
    }
    return synthesize_real(coeffs);
}

} // namespace tqs
