#include "tqs/basis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tqs {

cplx fourier_basis(int eta, int gamma, int sigma, int rho, int window) {
    double angle = 2.0 * std::numbers::pi *
                   (double(eta) * sigma + double(gamma) * rho) / window;
    return std::polar(1.0, angle);
}

FourierTable::FourierTable(int window_) : window(window_) {
    if (window <= 0 || window % 2 != 0)
        throw std::invalid_argument("FourierTable: window must be positive and even");
    unit.resize(window);
    unit[0] = cplx{1.0, 0.0};
    unit[window / 2] = cplx{-1.0, 0.0};
    for (int k = 1; k < window / 2; ++k) {
        double angle = 2.0 * std::numbers::pi * k / window;
        unit[k] = cplx{std::cos(angle), std::sin(angle)};
        unit[window - k] = std::conj(unit[k]);
    }
}

std::vector<cplx> synthesize(const ModelCoefficients& coeffs) {
    int W = coeffs.window;
    std::vector<cplx> out(static_cast<size_t>(W) * W, cplx{0.0, 0.0});
    if (coeffs.active.empty()) return out;

    FourierTable table(W);
    for (int flat : coeffs.active) {
        int sigma = flat / W;
        int rho = flat % W;
        cplx c = coeffs.coeffs[flat];
        double cre = c.real(), cim = c.imag();
        for (int eta = 0; eta < W; ++eta) {
            int rowPhase = eta * sigma;
            cplx* dst = out.data() + static_cast<size_t>(eta) * W;
            for (int gamma = 0; gamma < W; ++gamma) {
                const cplx& p = table.unit[(rowPhase + gamma * rho) % W];
                dst[gamma] += cplx{cre * p.real() - cim * p.imag(),
                                   cre * p.imag() + cim * p.real()};
            }
        }
    }
    return out;
}

std::vector<double> synthesize_real(const ModelCoefficients& coeffs) {
    int W = coeffs.window;
    std::vector<double> out(static_cast<size_t>(W) * W, 0.0);
    if (coeffs.active.empty()) return out;

    FourierTable table(W);
    for (int flat : coeffs.active) {
        int sigma = flat / W;
        int rho = flat % W;
        cplx c = coeffs.coeffs[flat];
        double cre = c.real(), cim = c.imag();
        for (int eta = 0; eta < W; ++eta) {
            int rowPhase = eta * sigma;
            double* dst = out.data() + static_cast<size_t>(eta) * W;
            for (int gamma = 0; gamma < W; ++gamma) {
                const cplx& p = table.unit[(rowPhase + gamma * rho) % W];
                dst[gamma] += cre * p.real() - cim * p.imag();
            }
        }
    }
    return out;
}

double spatial_weight(const LocalMeasurement& m, int window, const WeightingConfig& cfg) {
    double center = (window - 1) / 2.0;
    double dr = (m.cellEta + 0.5) - center;
    double dc = (m.cellGamma + 0.5) - center;
    return std::pow(cfg.spatialDecay, std::sqrt(dr * dr + dc * dc));
}

std::vector<double> spatial_weights(const LocalMeasurementMatrix& matrix, const WeightingConfig& cfg) {
    std::vector<double> w;
    w.reserve(matrix.entries.size());
    for (const auto& m : matrix.entries)
        w.push_back(spatial_weight(m, matrix.window, cfg));
    return w;
}

double frequency_weight(int sigma, int rho, int window, const WeightingConfig& cfg) {
    int half = window / 2;
    int cs = sigma <= half ? sigma : window - sigma;
    int cr = rho <= half ? rho : window - rho;
    double radius = std::sqrt(double(cs) * cs + double(cr) * cr);
    double maxRadius = std::numbers::sqrt2 * half * (1.0 + 1e-6);
    return std::pow(1.0 - radius / maxRadius, cfg.frequencyExponent);
}

std::vector<double> frequency_weights(int window, const WeightingConfig& cfg) {
    std::vector<double> q(static_cast<size_t>(window) * window);
    for (int sigma = 0; sigma < window; ++sigma)
        for (int rho = 0; rho < window; ++rho)
            q[static_cast<size_t>(sigma) * window + rho] =
                frequency_weight(sigma, rho, window, cfg);
    return q;
}

} // namespace tqs
