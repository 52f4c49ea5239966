#include "tqs/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "binio.hpp"

namespace tqs {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode) {
    std::ifstream in(path, mode);
    if (!in)
        fail(path, "cannot open for reading");
    return in;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
    std::ofstream out(path, mode);
    if (!out)
        fail(path, "cannot open for writing");
    return out;
}

// next header token, skipping whitespace and '#' comments
std::string pnm_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (!std::isspace(ch)) {
            tok.push_back(static_cast<char>(ch));
            break;
        }
    }
    while ((ch = in.get()) != EOF && !std::isspace(ch))
        tok.push_back(static_cast<char>(ch));
    return tok;
}

long parse_long(const std::string& path, const std::string& tok, const char* what) {
    try {
        size_t pos = 0;
        long v = std::stol(tok, &pos);
        if (pos != tok.size())
            throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        fail(path, std::string("malformed ") + what + " field");
    }
}

} // namespace

Image read_pgm(const std::string& path) {
    auto in = open_in(path, std::ios::binary);
    if (pnm_token(in) != "P5")
        fail(path, "not a binary PGM (P5) file");
    long cols = parse_long(path, pnm_token(in), "width");
    long rows = parse_long(path, pnm_token(in), "height");
    long maxval = parse_long(path, pnm_token(in), "maxval");
    if (cols <= 0 || rows <= 0)
        fail(path, "non-positive dimensions");
    if (maxval <= 0 || maxval > 65535)
        fail(path, "unsupported maxval");

    Image img(static_cast<int>(rows), static_cast<int>(cols));
    const double scale = 1.0 / double(maxval);
    if (maxval < 256) {
        std::vector<unsigned char> buf(img.size());
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!in)
            fail(path, "truncated pixel data");
        for (size_t i = 0; i < buf.size(); ++i)
            img.values[i] = buf[i] * scale;
    } else {
        std::vector<unsigned char> buf(img.size() * 2);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!in)
            fail(path, "truncated pixel data");
        for (size_t i = 0; i < img.size(); ++i) {
            unsigned v = unsigned(buf[2 * i]) << 8 | buf[2 * i + 1]; // big-endian samples
            img.values[i] = v * scale;
        }
    }
    return img;
}

void write_pgm(const std::string& path, const Image& image, int bitDepth) {
    if (bitDepth != 8 && bitDepth != 16)
        throw std::invalid_argument("write_pgm: bit depth must be 8 or 16");
    if (image.rows <= 0 || image.cols <= 0)
        throw std::invalid_argument("write_pgm: empty image");

    const unsigned maxval = bitDepth == 8 ? 255u : 65535u;
    auto out = open_out(path, std::ios::binary);
    out << "P5\n" << image.cols << " " << image.rows << "\n" << maxval << "\n";

    auto quantize = [&](double x) -> unsigned {
        double c = x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
        return static_cast<unsigned>(std::lround(c * maxval));
    };
    if (bitDepth == 8) {
        std::vector<unsigned char> buf(image.size());
        for (size_t i = 0; i < image.size(); ++i)
            buf[i] = static_cast<unsigned char>(quantize(image.values[i]));
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    } else {
        std::vector<unsigned char> buf(image.size() * 2);
        for (size_t i = 0; i < image.size(); ++i) {
            unsigned v = quantize(image.values[i]);
            buf[2 * i] = static_cast<unsigned char>(v >> 8);
            buf[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
        }
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
    if (!out)
        fail(path, "write failed");
}

QuadrantPattern read_pattern(const std::string& path) {
    auto in = open_in(path, std::ios::in);
    std::string line;
    if (!std::getline(in, line))
        fail(path, "empty pattern file");

    std::istringstream header(line);
    std::string magic, version, field;
    header >> magic >> version;
    if (magic != "TQSP" || version != "v1")
        fail(path, "not a TQSP v1 pattern file");

    QuadrantPattern p;
    bool havePeriod = false, haveSeed = false;
    while (header >> field) {
        auto eq = field.find('=');
        if (eq == std::string::npos)
            fail(path, "malformed header field '" + field + "'");
        std::string key = field.substr(0, eq), value = field.substr(eq + 1);
        if (key == "period") {
            p.period = static_cast<int>(parse_long(path, value, "period"));
            havePeriod = true;
        } else if (key == "seed") {
            try {
                p.seed = std::stoull(value);
            } catch (const std::exception&) {
                fail(path, "malformed seed field");
            }
            haveSeed = true;
        } else if (key == "rng") {
            p.rng = value;
        } else {
            fail(path, "unknown header field '" + key + "'");
        }
    }
    if (!havePeriod || !haveSeed)
        fail(path, "header missing period or seed");
    if (p.period < 4 || p.period % 2 != 0)
        fail(path, "invalid period");

    const int pc = p.period / 2;
    p.opaque.reserve(static_cast<size_t>(pc) * pc);
    for (int r = 0; r < pc; ++r) {
        if (!std::getline(in, line))
            fail(path, "truncated pattern grid");
        std::istringstream row(line);
        for (int c = 0; c < pc; ++c) {
            int q;
            if (!(row >> q) || q < 0 || q > 3)
                fail(path, "invalid quadrant digit in pattern grid");
            p.opaque.push_back(static_cast<uint8_t>(q));
        }
        int extra;
        if (row >> extra)
            fail(path, "excess values in pattern row");
    }
    return p;
}

void write_pattern(const std::string& path, const QuadrantPattern& pattern) {
    auto out = open_out(path, std::ios::out);
    out << "TQSP v1 period=" << pattern.period << " seed=" << pattern.seed
        << " rng=" << pattern.rng << "\n";
    const int pc = pattern.cellsPerPeriod();
    for (int r = 0; r < pc; ++r) {
        for (int c = 0; c < pc; ++c) {
            if (c) out << ' ';
            out << int(pattern.opaque[static_cast<size_t>(r) * pc + c]);
        }
        out << '\n';
    }
    if (!out)
        fail(path, "write failed");
}

namespace {

void write_tqsm(const std::string& path, int rows, int cols, const std::vector<double>& values) {
    auto out = open_out(path, std::ios::binary);
    out.write("TQSM", 4);
    binio::put_u32(out, static_cast<uint32_t>(rows));
    binio::put_u32(out, static_cast<uint32_t>(cols));
    for (double v : values)
        binio::put_f64(out, v);
    if (!out)
        fail(path, "write failed");
}

void read_tqsm(const std::string& path, int& rows, int& cols, std::vector<double>& values) {
    auto in = open_in(path, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TQSM", 4) != 0)
        fail(path, "not a TQSM file");
    uint32_t r = binio::get_u32(in), c = binio::get_u32(in);
    if (!in || r == 0 || c == 0 || r > (1u << 20) || c > (1u << 20))
        fail(path, "implausible dimensions");
    rows = static_cast<int>(r);
    cols = static_cast<int>(c);
    values.resize(static_cast<size_t>(rows) * cols);
    for (double& v : values)
        v = binio::get_f64(in);
    if (!in)
        fail(path, "truncated payload");
}

} // namespace

MeasurementFrame read_frame(const std::string& path) {
    MeasurementFrame f;
    read_tqsm(path, f.rows, f.cols, f.values);
    return f;
}

void write_frame(const std::string& path, const MeasurementFrame& frame) {
    write_tqsm(path, frame.rows, frame.cols, frame.values);
}

Image read_raw_image(const std::string& path) {
    Image img;
    read_tqsm(path, img.rows, img.cols, img.values);
    return img;
}

void write_raw_image(const std::string& path, const Image& image) {
    write_tqsm(path, image.rows, image.cols, image.values);
}

Image read_image_any(const std::string& path) {
    auto in = open_in(path, std::ios::binary);
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    in.close();
    if (std::memcmp(magic, "TQSM", 4) == 0)
        return read_raw_image(path);
    return read_pgm(path);
}

} // namespace tqs
