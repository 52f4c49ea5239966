#pragma once
// Sensor data model: periodic three-quarter sampling patterns, measurement
// simulation and extraction of local measurement systems for a model window.
//
// One low-resolution sensor pixel covers a 2x2 block of the high-resolution
// grid; one quadrant of it is opaque, the remaining three quadrants are
// integrated with weight 1/3 each (rows of the measurement matrix sum to 1).

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tqs/image.hpp"

namespace tqs {

// Quadrant encoding: 0=top-left, 1=top-right, 2=bottom-left, 3=bottom-right.
struct QuadrantPattern {
    int period = 0;        // repetition period in high-res pixels
    uint64_t seed = 0;
    std::string rng;       // generator identity, e.g. "mt19937_64"
    std::vector<uint8_t> opaque; // (period/2)^2 quadrant indices, row-major

    int cellsPerPeriod() const { return period / 2; }

    // strictly periodic lookup over low-res cell coordinates
    uint8_t quadrant(long cellRow, long cellCol) const {
        const int pc = cellsPerPeriod();
        const long r = ((cellRow % pc) + pc) % pc;
        const long c = ((cellCol % pc) + pc) % pc;
        return opaque[static_cast<size_t>(r) * pc + c];
    }
};

// Deterministic pattern synthesis: each cell's opaque quadrant is drawn
// uniformly from {0,1,2,3} with mt19937_64, row-major over the period tile.
QuadrantPattern generate_pattern(uint64_t seed, int period, int blockSize = 4);

// The low-resolution sensor readout, one value per 2x2 cell.
struct MeasurementFrame {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    MeasurementFrame() = default;
    MeasurementFrame(int rows_, int cols_, double fill = 0.0)
        : rows(rows_), cols(cols_), values(static_cast<size_t>(rows_) * cols_, fill) {}

    double& at(int r, int c) { return values[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return values[static_cast<size_t>(r) * cols + c]; }
    size_t size() const { return values.size(); }
};

MeasurementFrame simulate_measurement(const Image& image, const QuadrantPattern& pattern);

// One sensor cell restricted to a model window: the three transparent pixels
// in window-local coordinates, each with coefficient 1/3.
struct PixelCoeff {
    int eta = 0;   // local row
    int gamma = 0; // local col
    double coeff = 0.0;
};

struct LocalMeasurement {
    std::array<PixelCoeff, 3> pixels;
    int cellEta = 0;   // local row of the cell's top-left pixel
    int cellGamma = 0; // local col of the cell's top-left pixel
};

struct LocalMeasurementMatrix {
    int window = 0;
    std::vector<LocalMeasurement> entries;

    int localCount() const { return static_cast<int>(entries.size()); }
};

struct LocalSystem {
    LocalMeasurementMatrix matrix;
    std::vector<double> values; // y^local, aligned with matrix.entries
};

// Measurements whose full 2x2 cell lies inside the window are included;
// cells straddling the window border are excluded entirely. Ordering is
// row-major over cell positions.
LocalMeasurementMatrix extract_local_matrix(const QuadrantPattern& pattern,
                                            int originRow, int originCol, int window);

LocalSystem extract_local_system(const QuadrantPattern& pattern, const MeasurementFrame& frame,
                                 int originRow, int originCol, int window);

// Gathers y^local for a window, aligned with extract_local_matrix ordering.
std::vector<double> gather_local_values(const MeasurementFrame& frame,
                                        int originRow, int originCol, int window);

} // namespace tqs
