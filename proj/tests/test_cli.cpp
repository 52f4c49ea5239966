#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "synthetic.hpp"
#include "tqs/io.hpp"

using namespace tqs;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    if (const char* env = std::getenv("TQS_CLI"))
        return env;
#ifdef TQS_CLI_PATH
    return TQS_CLI_PATH;
#else
    FAIL("TQS_CLI must point at the CLI binary");
    return "";
#endif
}

struct RunResult {
    int exitCode = -1;
    std::string out;
    std::string err;
};

struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() /
              ("tqs_cli_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(dir);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    std::string file(const std::string& name) const { return (dir / name).string(); }

    RunResult run(const std::string& args) const {
        const std::string outPath = file("__stdout"), errPath = file("__stderr");
        const std::string cmd = cli_path() + " " + args + " > " + outPath + " 2> " + errPath;
        const int status = std::system(cmd.c_str());
        RunResult r;
        r.exitCode = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        auto slurp = [](const std::string& p) {
            std::ifstream in(p, std::ios::binary);
            return std::string{std::istreambuf_iterator<char>(in),
                               std::istreambuf_iterator<char>()};
        };
        r.out = slurp(outPath);
        r.err = slurp(errPath);
        return r;
    }
};

std::vector<char> raw_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("pattern subcommand is deterministic and validated") {
    TempDir tmp;
    const RunResult a = tmp.run("pattern --seed 7 --period 32 -o " + tmp.file("a.tqsp"));
    CHECK(a.exitCode == 0);
    CHECK(a.out.find("period=32") != std::string::npos);

    const RunResult b = tmp.run("pattern --seed 7 --period 32 -o " + tmp.file("b.tqsp"));
    CHECK(b.exitCode == 0);
    CHECK(raw_bytes(tmp.file("a.tqsp")) == raw_bytes(tmp.file("b.tqsp")));

    const QuadrantPattern p = read_pattern(tmp.file("a.tqsp"));
    CHECK(p.seed == 7);
    CHECK(p.opaque == generate_pattern(7, 32).opaque);

    // unusable period and missing output are usage errors
    CHECK(tmp.run("pattern --seed 1 --period 30 -o " + tmp.file("x.tqsp")).exitCode == 2);
    CHECK(tmp.run("pattern --seed 1 --period 32").exitCode == 2);
}

TEST_CASE("top-level usage errors") {
    TempDir tmp;
    CHECK(tmp.run("").exitCode == 2);
    CHECK(tmp.run("frobnicate").exitCode == 2);
    CHECK(tmp.run("--help").exitCode == 0);
    CHECK(tmp.run("reconstruct --help").exitCode == 0);
}

TEST_CASE("simulate produces the expected frame") {
    TempDir tmp;
    tmp.run("pattern --seed 3 --period 16 -o " + tmp.file("p.tqsp"));

    const Image img = testing::synthetic_image(32, 48, 55);
    write_raw_image(tmp.file("in.tqsm"), img);
    const RunResult r = tmp.run("simulate --image " + tmp.file("in.tqsm") + " --pattern " +
                                tmp.file("p.tqsp") + " -o " + tmp.file("y.tqsm"));
    CHECK(r.exitCode == 0);
    CHECK(r.out.find("16x24 frame") != std::string::npos);

    const MeasurementFrame got = read_frame(tmp.file("y.tqsm"));
    const MeasurementFrame want = simulate_measurement(img, generate_pattern(3, 16));
    CHECK(got.values == want.values);

    // missing input is a usage error with a diagnostic
    const RunResult bad = tmp.run("simulate --image " + tmp.file("nope.tqsm") + " --pattern " +
                                  tmp.file("p.tqsp") + " -o " + tmp.file("z.tqsm"));
    CHECK(bad.exitCode == 2);
    CHECK(bad.err.find("error:") != std::string::npos);
}

TEST_CASE("reconstruct writes images and reports") {
    TempDir tmp;
    tmp.run("pattern --seed 7 --period 32 -o " + tmp.file("p.tqsp"));

    const Image img = testing::synthetic_image(48, 48, 60);
    write_raw_image(tmp.file("ref.tqsm"), img);
    const MeasurementFrame frame = simulate_measurement(img, generate_pattern(7, 32));
    write_frame(tmp.file("y.tqsm"), frame);

    const std::string base = "reconstruct --input " + tmp.file("y.tqsm") + " --pattern " +
                             tmp.file("p.tqsp") + " --window 16 --iterations 8 --threads 1";

    SUBCASE("text report") {
        const RunResult r = tmp.run(base + " -o " + tmp.file("out.pgm") + " --reference " +
                                    tmp.file("ref.tqsm"));
        CHECK(r.exitCode == 0);
        CHECK(r.out.find("algorithm:        rljsde") != std::string::npos);
        CHECK(r.out.find("blocks:           144") != std::string::npos);
        CHECK(r.out.find("psnr vs ref:") != std::string::npos);
        const Image out = read_pgm(tmp.file("out.pgm"));
        CHECK(out.rows == 48);
        CHECK(out.cols == 48);
    }

    SUBCASE("json report with raw dump") {
        const RunResult r = tmp.run(base + " -o " + tmp.file("out.pgm") + " --raw " +
                                    tmp.file("out.tqsm") + " --bits 16 --format json");
        CHECK(r.exitCode == 0);
        const json j = json::parse(r.out);
        CHECK(j["algorithm"] == "rljsde");
        CHECK(j["blocks"] == 144);
        CHECK(j["rows"] == 48);
        CHECK(j["cols"] == 48);
        CHECK(j["window"] == 16);

        const Image raw = read_raw_image(tmp.file("out.tqsm"));
        const Image quantized = read_pgm(tmp.file("out.pgm"));
        REQUIRE(raw.same_size(quantized));
        for (size_t i = 0; i < raw.size(); ++i)
            CHECK(std::abs(raw.values[i] - quantized.values[i]) <= 0.5 / 65535.0 + 1e-12);
    }

    SUBCASE("baseline algorithm") {
        const RunResult r = tmp.run("reconstruct --input " + tmp.file("y.tqsm") + " --pattern " +
                                    tmp.file("p.tqsp") +
                                    " --window 16 --iterations 4 --threads 1 --algo ljsde -o " +
                                    tmp.file("outL.pgm"));
        CHECK(r.exitCode == 0);
        CHECK(r.out.find("algorithm:        ljsde") != std::string::npos);
    }

    SUBCASE("invalid algorithm value") {
        CHECK(tmp.run(base + " --algo magic -o " + tmp.file("x.pgm")).exitCode == 2);
    }
}

TEST_CASE("kernel cache files short-circuit the warm pass") {
    TempDir tmp;
    tmp.run("pattern --seed 7 --period 32 -o " + tmp.file("p.tqsp"));
    const Image img = testing::synthetic_image(48, 48, 61);
    write_frame(tmp.file("y.tqsm"), simulate_measurement(img, generate_pattern(7, 32)));

    const std::string base = "reconstruct --input " + tmp.file("y.tqsm") + " --pattern " +
                             tmp.file("p.tqsp") +
                             " --window 16 --iterations 6 --threads 1 --kernel-cache " +
                             tmp.file("k.tqsk");

    const RunResult first = tmp.run(base + " -o " + tmp.file("o1.pgm") + " --format json");
    CHECK(first.exitCode == 0);
    CHECK(fs::exists(tmp.file("k.tqsk")));
    const json j1 = json::parse(first.out);
    CHECK(j1["classes_created"].get<int>() > 0);

    const RunResult second = tmp.run(base + " -o " + tmp.file("o2.pgm") + " --format json");
    CHECK(second.exitCode == 0);
    const json j2 = json::parse(second.out);
    CHECK(j2["classes_created"] == 0);
    CHECK(raw_bytes(tmp.file("o1.pgm")) == raw_bytes(tmp.file("o2.pgm")));

    // a cache for a different setup is refused
    const RunResult clash = tmp.run(base + " --precision single -o " + tmp.file("o3.pgm"));
    CHECK(clash.exitCode == 2);
    CHECK(clash.err.find("error:") != std::string::npos);
}

TEST_CASE("compare gates on the pixel threshold") {
    TempDir tmp;
    const Image img = testing::synthetic_image(24, 24, 70);
    write_raw_image(tmp.file("a.tqsm"), img);

    Image perturbed = img;
    perturbed.at(3, 4) += 0.125;
    write_raw_image(tmp.file("b.tqsm"), perturbed);

    const RunResult same =
        tmp.run("compare " + tmp.file("a.tqsm") + " " + tmp.file("a.tqsm") + " --threshold 0");
    CHECK(same.exitCode == 0);
    CHECK(same.out.find("PASS") != std::string::npos);

    const RunResult diff = tmp.run("compare " + tmp.file("a.tqsm") + " " + tmp.file("b.tqsm"));
    CHECK(diff.exitCode == 1);
    CHECK(diff.out.find("FAIL") != std::string::npos);

    const RunResult json1 = tmp.run("compare " + tmp.file("a.tqsm") + " " + tmp.file("b.tqsm") +
                                    " --threshold 0.2 --reference " + tmp.file("a.tqsm") +
                                    " --format json");
    CHECK(json1.exitCode == 0);
    const json j = json::parse(json1.out);
    CHECK(j["pass"] == true);
    CHECK(j["max_abs_diff"].get<double>() == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(j["psnr_a_vs_ref"] == "identical");
    CHECK(j["psnr_b_vs_ref"].is_number());

    // dimension mismatch is a usage error
    write_raw_image(tmp.file("c.tqsm"), Image(8, 8, 0.5));
    CHECK(tmp.run("compare " + tmp.file("a.tqsm") + " " + tmp.file("c.tqsm")).exitCode == 2);
}

TEST_CASE("bench runs both algorithms over an image directory") {
    TempDir tmp;
    tmp.run("pattern --seed 7 --period 32 -o " + tmp.file("p.tqsp"));
    fs::create_directories(tmp.dir / "imgs");
    write_pgm((tmp.dir / "imgs" / "a.pgm").string(), testing::synthetic_image(32, 32, 80), 16);
    write_pgm((tmp.dir / "imgs" / "b.pgm").string(), testing::synthetic_image(32, 32, 81), 16);
    std::ofstream(tmp.dir / "imgs" / "ignore.txt") << "not an image";

    const RunResult r = tmp.run("bench --images " + (tmp.dir / "imgs").string() + " --pattern " +
                                tmp.file("p.tqsp") +
                                " --window 16 --iterations 6 --format json");
    CHECK(r.exitCode == 0);
    const json j = json::parse(r.out);
    CHECK(j["images"] == 2);
    CHECK(j["max_abs_difference"].get<double>() <= 1e-6);
    CHECK(j["speedup"].get<double>() > 0.0);
    CHECK_FALSE(j.contains("ljsde_scaling_ratio"));

    // empty directory is a usage error
    fs::create_directories(tmp.dir / "empty");
    const RunResult empty = tmp.run("bench --images " + (tmp.dir / "empty").string() +
                                    " --pattern " + tmp.file("p.tqsp"));
    CHECK(empty.exitCode == 2);
}

TEST_CASE("kernel-report prints the accounting table") {
    TempDir tmp;
    const RunResult text = tmp.run("kernel-report --classes 64 --window 32 --precision single");
    CHECK(text.exitCode == 0);
    CHECK(text.out.find("134.217728") != std::string::npos);
    CHECK(text.out.find("536.870912") != std::string::npos);
    CHECK(text.out.find("0.524288") != std::string::npos);
    CHECK(text.out.find("671.612928") != std::string::npos);

    const RunResult j = tmp.run(
        "kernel-report --classes 64 --window 32 --precision single --format json");
    CHECK(j.exitCode == 0);
    const json parsed = json::parse(j.out);
    CHECK(parsed["b_bytes"] == 134217728);
    CHECK(parsed["c_bytes"] == 536870912);
    CHECK(parsed["d_bytes"] == 524288);
    CHECK(parsed["total_bytes"] == 671612928);

    const RunResult dbl = tmp.run(
        "kernel-report --classes 64 --window 32 --precision double --format json");
    const json parsedDbl = json::parse(dbl.out);
    CHECK(parsedDbl["total_bytes"] == 2 * 671612928ull);

    CHECK(tmp.run("kernel-report --classes -3").exitCode == 2);
}
