#pragma once
// Fourier basis over the model window, model coefficients and synthesis,
// and the spatial / frequency weighting functions shared by both solvers.

#include <complex>
#include <span>
#include <vector>

#include "tqs/grid.hpp"

namespace tqs {

using cplx = std::complex<double>;

struct WeightingConfig {
    double spatialDecay = 0.8;      // radial decay base of the spatial weights, in (0,1)
    double frequencyExponent = 2.0; // roll-off exponent of the frequency weights, >= 0
};

// basis value e^(2*pi*j*eta*sigma/W) * e^(2*pi*j*gamma*rho/W)
cplx fourier_basis(int eta, int gamma, int sigma, int rho, int window);

// Unit roots e^(2*pi*j*k/W). The upper half is the mirrored conjugate of the
// lower half by construction, so conjugate-symmetric frequency pairs evaluate
// to exact conjugates.
struct FourierTable {
    int window = 0;
    std::vector<cplx> unit;

    explicit FourierTable(int window_);

    cplx root(int k) const { return unit[k % window]; } // k >= 0
    cplx phi(int eta, int gamma, int sigma, int rho) const {
        return unit[(eta * sigma + gamma * rho) % window];
    }
};

// Sparse model in the frequency domain. `active` lists the flattened indices
// (sigma*W + rho) touched so far, in first-touch order.
struct ModelCoefficients {
    int window = 0;
    std::vector<cplx> coeffs;
    std::vector<int> active;
    std::vector<uint8_t> touched;

    explicit ModelCoefficients(int window_)
        : window(window_),
          coeffs(static_cast<size_t>(window_) * window_, cplx{0.0, 0.0}),
          touched(static_cast<size_t>(window_) * window_, 0) {}

    void add(int flatIndex, cplx delta) {
        coeffs[flatIndex] += delta;
        if (!touched[flatIndex]) {
            touched[flatIndex] = 1;
            active.push_back(flatIndex);
        }
    }
};

// Back-transform of the model to the image domain (unnormalized inverse DFT,
// evaluated over the touched coefficients only).
std::vector<cplx> synthesize(const ModelCoefficients& coeffs);

// Real part of the synthesis, as a W*W row-major grid.
std::vector<double> synthesize_real(const ModelCoefficients& coeffs);

// w_m = spatialDecay^d, d = Euclidean distance of the measurement cell center
// from the window center ((W-1)/2, (W-1)/2).
double spatial_weight(const LocalMeasurement& m, int window, const WeightingConfig& cfg);
std::vector<double> spatial_weights(const LocalMeasurementMatrix& matrix, const WeightingConfig& cfg);

// q over centered frequency indices, maximal at DC, strictly positive.
double frequency_weight(int sigma, int rho, int window, const WeightingConfig& cfg);
std::vector<double> frequency_weights(int window, const WeightingConfig& cfg);

// Greedy iteration shared knobs.
struct SolverOptions {
    int maxIterations = 200;
    double stepWidth = 0.5;      // orthogonality deficiency compensation, in (0,1]
    bool earlyStop = false;      // baseline only: stop once the weighted residual
    double earlyStopScale = 1e-14; // energy drops below earlyStopScale * L_local
};

struct Selection {
    int index = 0; // flattened sigma*W + rho
    double score = 0.0;
};

// shared scoring expression so both solvers round identically
inline double selection_score(double q, double magnitudeSq, double denom) {
    return q * magnitudeSq / denom;
}

} // namespace tqs
