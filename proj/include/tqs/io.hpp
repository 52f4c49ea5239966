#pragma once
// File formats: binary PGM (P5, 8/16-bit), TQSP pattern files (text) and
// TQSM frame files (binary, also used for full-precision image dumps).

#include <string>

#include "tqs/grid.hpp"
#include "tqs/image.hpp"

namespace tqs {

// P5, maxval 255 or 65535 (16-bit samples big-endian); values map linearly
// to [0,1]. Writing clamps to [0,1] and rounds to the nearest gray level.
Image read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Image& image, int bitDepth = 8);

// Text: `TQSP v1 period=<P> seed=<S> rng=<name>`, then P/2 lines of
// P/2 space-separated quadrant digits.
QuadrantPattern read_pattern(const std::string& path);
void write_pattern(const std::string& path, const QuadrantPattern& pattern);

// Binary: magic `TQSM`, u32 rows, u32 cols (little-endian), then
// rows*cols float64 values row-major.
MeasurementFrame read_frame(const std::string& path);
void write_frame(const std::string& path, const MeasurementFrame& frame);

// Full-precision image dump in the TQSM container (rows/cols are image
// dimensions instead of frame dimensions).
Image read_raw_image(const std::string& path);
void write_raw_image(const std::string& path, const Image& image);

// Reads a PGM or a raw TQSM dump, sniffing the leading magic bytes.
Image read_image_any(const std::string& path);

} // namespace tqs
