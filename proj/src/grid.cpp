#include "tqs/grid.hpp"

#include <random>
#include <stdexcept>

namespace tqs {

QuadrantPattern generate_pattern(uint64_t seed, int period, int blockSize) {
    if (period < 4 || period % 2 != 0)
        throw std::invalid_argument("pattern period must be even and >= 4");
    if (blockSize < 1 || period % blockSize != 0)
        throw std::invalid_argument("pattern period must be divisible by the target block size");

    QuadrantPattern p;
    p.period = period;
    p.seed = seed;
    p.rng = "mt19937_64";
    const int pc = period / 2;
    p.opaque.resize(static_cast<size_t>(pc) * pc);

    // low two bits of each tempered output; row-major fill
    std::mt19937_64 gen(seed);
    for (auto& q : p.opaque)
        q = static_cast<uint8_t>(gen() & 3u);
    return p;
}

namespace {

// transparent pixel offsets of a 2x2 cell, row-major, skipping the opaque quadrant
inline void transparent_offsets(uint8_t opaque, int out[3][2]) {
    int n = 0;
    for (int dr = 0; dr < 2; ++dr)
        for (int dc = 0; dc < 2; ++dc) {
            const int q = dr * 2 + dc;
            if (q == opaque)
                continue;
            out[n][0] = dr;
            out[n][1] = dc;
            ++n;
        }
}

} // namespace

MeasurementFrame simulate_measurement(const Image& image, const QuadrantPattern& pattern) {
    if (image.rows % 2 != 0 || image.cols % 2 != 0)
        throw std::invalid_argument("image dimensions must be even");
    if (pattern.period <= 0 || pattern.opaque.empty())
        throw std::invalid_argument("invalid pattern");

    const double third = 1.0 / 3.0;
    MeasurementFrame frame(image.rows / 2, image.cols / 2);
    for (int r = 0; r < frame.rows; ++r) {
        for (int c = 0; c < frame.cols; ++c) {
            const uint8_t q = pattern.quadrant(r, c);
            int off[3][2];
            transparent_offsets(q, off);
            double y = 0.0;
            for (int t = 0; t < 3; ++t)
                y += third * image.at(2 * r + off[t][0], 2 * c + off[t][1]);
            frame.at(r, c) = y;
        }
    }
    return frame;
}

namespace {

inline int first_full_cell(int origin) { return (origin + 1) / 2; }
inline int last_full_cell(int origin, int window) { return (origin + window - 2) / 2; }

} // namespace

LocalMeasurementMatrix extract_local_matrix(const QuadrantPattern& pattern,
                                            int originRow, int originCol, int window) {
    if (originRow < 0 || originCol < 0)
        throw std::invalid_argument("window origin must be non-negative");
    if (window < 2 || window % 2 != 0)
        throw std::invalid_argument("window size must be even and >= 2");

    LocalMeasurementMatrix m;
    m.window = window;
    const int r0 = first_full_cell(originRow), r1 = last_full_cell(originRow, window);
    const int c0 = first_full_cell(originCol), c1 = last_full_cell(originCol, window);
    m.entries.reserve(static_cast<size_t>(r1 - r0 + 1) * (c1 - c0 + 1));

    const double third = 1.0 / 3.0;
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            LocalMeasurement e;
            e.cellEta = 2 * r - originRow;
            e.cellGamma = 2 * c - originCol;
            int off[3][2];
            transparent_offsets(pattern.quadrant(r, c), off);
            for (int t = 0; t < 3; ++t)
                e.pixels[t] = PixelCoeff{e.cellEta + off[t][0], e.cellGamma + off[t][1], third};
            m.entries.push_back(e);
        }
    }
    return m;
}

std::vector<double> gather_local_values(const MeasurementFrame& frame,
                                        int originRow, int originCol, int window) {
    const int r0 = first_full_cell(originRow), r1 = last_full_cell(originRow, window);
    const int c0 = first_full_cell(originCol), c1 = last_full_cell(originCol, window);
    std::vector<double> y;
    y.reserve(static_cast<size_t>(r1 - r0 + 1) * (c1 - c0 + 1));
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c)
            y.push_back(frame.at(r, c));
    return y;
}

LocalSystem extract_local_system(const QuadrantPattern& pattern, const MeasurementFrame& frame,
                                 int originRow, int originCol, int window) {
    const int imageRows = 2 * frame.rows, imageCols = 2 * frame.cols;
    if (originRow < 0 || originCol < 0 || originRow + window > imageRows ||
        originCol + window > imageCols)
        throw std::invalid_argument("model window exceeds image bounds");

    LocalSystem sys;
    sys.matrix = extract_local_matrix(pattern, originRow, originCol, window);
    sys.values = gather_local_values(frame, originRow, originCol, window);
    return sys;
}

} // namespace tqs
