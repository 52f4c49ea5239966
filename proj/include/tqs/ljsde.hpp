#pragma once
// Baseline block solver: greedy frequency selection with the selection
// numerator and denominator evaluated by direct summation over the local
// measurement matrix every iteration (no precomputed kernels). Serves as the
// correctness reference for the recurrent solver.

#include <functional>
#include <span>
#include <vector>

#include "tqs/basis.hpp"
#include "tqs/grid.hpp"

namespace tqs {

// E_w = sum_m |r_m|^2 * w_m
double weighted_residual_energy(std::span<const cplx> residual, std::span<const double> weights);

struct ScoredSelection {
    Selection best;             // best.index = -1 when no frequency is admissible
    std::vector<double> scores; // W*W grid, 0 at excluded frequencies
};

// argmax over (sigma,rho) of q * |sum_m w_m T_m r_m|^2 / sum_m w_m |T_m|^2,
// T the per-measurement conjugate basis transform. Frequencies whose
// denominator is zero are excluded; ties resolve to the smallest flattened
// index sigma*W + rho.
ScoredSelection ljsde_select(std::span<const cplx> residual, const LocalMeasurementMatrix& localA,
                             std::span<const double> weights, std::span<const double> q);

// Per-iteration trace hook, invoked after the coefficient and residual
// updates of each completed iteration.
using IterationHook =
    std::function<void(int iteration, int chosenIndex, cplx scaledDelta, std::span<const cplx> residual)>;

// Runs maxIterations greedy updates on one local system and returns the
// synthesized W*W window (real part). Early termination only when no
// admissible frequency remains or the optional energy stop triggers.
std::vector<double> ljsde_block(std::span<const double> yLocal, const LocalMeasurementMatrix& localA,
                                std::span<const double> weights, std::span<const double> q,
                                const SolverOptions& options, const IterationHook& hook = {});

} // namespace tqs
