#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kTool = SATLOC_BIN;
const std::string kMapSynth = MAP_SYNTH_BIN;

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

const fs::path& work_dir()
{
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "satloc_test_cli";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Result run(const std::string& args, const std::string& exe = kTool)
{
    const fs::path out = work_dir() / "stdout.txt";
    const fs::path err = work_dir() / "stderr.txt";
    const std::string cmd = "'" + exe + "' " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::size_t count_lines(const std::string& text)
{
    std::size_t n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

const std::string kWaypoints = "--waypoints '100,50;100,150'";

/// Map, codebook and rendered trajectory shared by the tests; built on first
/// use and reused when already present.
const fs::path& artifacts()
{
    static const fs::path dir = [] {
        const fs::path d = work_dir() / "artifacts";
        if (!fs::exists(d / "cb" / "codebook.klcb")) {
            fs::remove_all(d);
            Result r = run("build-map --seed 3 --size 800 --mpp 0.25 -o '" + (d / "map").string() + "'");
            if (r.code != 0) throw std::runtime_error("build-map failed: " + r.err);
            r = run("build-codebook --map '" + (d / "map" / "map").string() + "' " + kWaypoints +
                    " --dim 16 --train-images 120 -o '" + (d / "cb").string() + "'");
            if (r.code != 0) throw std::runtime_error("build-codebook failed: " + r.err);
        }
        return d;
    }();
    return dir;
}

}  // namespace

TEST(Cli, HelpExitsZero)
{
    EXPECT_EQ(run("--help").code, 0);
    EXPECT_EQ(run("bench --help").code, 0);
    EXPECT_EQ(run("--help", kMapSynth).code, 0);
}

TEST(Cli, UsageErrorsExitOne)
{
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("no-such-command").code, 1);
    EXPECT_EQ(run("bench --no-such-flag").code, 1);
    EXPECT_EQ(run("bench --dim notanumber").code, 1);
    EXPECT_EQ(run("localize --covariance-weighting bogus").code, 1);
}

TEST(Cli, BuildMapWritesArtifactsAndCreatesDirectory)
{
    const fs::path out = work_dir() / "new" / "nested" / "map";
    fs::remove_all(work_dir() / "new");
    const Result r = run("build-map --seed 7 --size 256 --mpp 0.25 -o '" + out.string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(out / "map.png"));
    EXPECT_TRUE(fs::exists(out / "map.json"));
    EXPECT_TRUE(fs::exists(out / "map.occ.png"));
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(manifest["subcommand"], "build-map");
    EXPECT_EQ(manifest["config"]["seed"], "7");
    const auto sidecar = nlohmann::json::parse(slurp(out / "map.json"));
    EXPECT_EQ(sidecar["width_px"], 256);
    EXPECT_EQ(sidecar["meters_per_pixel"], 0.25);
}

TEST(Cli, BuildMapIsDeterministic)
{
    const fs::path a = work_dir() / "det_a", b = work_dir() / "det_b";
    ASSERT_EQ(run("build-map --seed 5 --size 128 -o '" + a.string() + "'").code, 0);
    ASSERT_EQ(run("build-map --seed 5 --size 128 -o '" + b.string() + "'").code, 0);
    EXPECT_EQ(slurp(a / "map.png"), slurp(b / "map.png"));
}

TEST(Cli, InvalidMppFailsWithoutPartialFiles)
{
    const fs::path out = work_dir() / "bad_mpp";
    fs::remove_all(out);
    const Result r = run("build-map --seed 7 --size 64 --mpp 0 -o '" + out.string() + "'");
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(r.err.empty());
    EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, MapSynthGeneratesAndRenders)
{
    const fs::path out = work_dir() / "ms";
    ASSERT_EQ(run("generate --seed 2 --size 512 -o '" + out.string() + "'", kMapSynth).code, 0);
    const Result r = run("render --map '" + (out / "map").string() + "' --pose 64,64,10 -o '" + (out / "view").string() + "'",
                         kMapSynth);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(out / "view" / "view.png"));
    EXPECT_TRUE(fs::exists(out / "view" / "view.json"));
}

TEST(Cli, CodebookHasFortyTwoColumnsPerMeter)
{
    const fs::path cb = artifacts() / "cb" / "codebook.klcb";
    // 4200 columns of 2 * 16 + 32 bytes after the fixed part.
    const auto manifest = nlohmann::json::parse(slurp(artifacts() / "cb" / "manifest.json"));
    ASSERT_TRUE(fs::exists(artifacts() / "cb" / "encoder.klen"));
    const std::size_t size = fs::file_size(cb);
    EXPECT_EQ(manifest["codebook_bytes"], size);
    EXPECT_EQ((size - 48 - manifest["encoder_id"].get<std::string>().size()) % 64, 0u);
    EXPECT_EQ((size - 48 - manifest["encoder_id"].get<std::string>().size()) / 64, 4200u);
    EXPECT_EQ(manifest["columns"], 4200);
}

TEST(Cli, CodebookRebuildIsByteIdentical)
{
    const fs::path again = work_dir() / "cb_again";
    const Result r = run("build-codebook --map '" + (artifacts() / "map" / "map").string() + "' " + kWaypoints +
                         " --dim 16 --train-images 120 -o '" + again.string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(again / "codebook.klcb"), slurp(artifacts() / "cb" / "codebook.klcb"));
    EXPECT_EQ(slurp(again / "encoder.klen"), slurp(artifacts() / "cb" / "encoder.klen"));
}

TEST(Cli, SingleImageLocalizeWritesOneRow)
{
    const fs::path view = work_dir() / "single";
    ASSERT_EQ(run("render --map '" + (artifacts() / "map" / "map").string() + "' --pose 100.5,102,1.5 -o '" +
                  view.string() + "'")
                  .code,
              0);
    const Result r = run("localize --codebook '" + (artifacts() / "cb" / "codebook.klcb").string() + "' --encoder '" +
                         (artifacts() / "cb" / "encoder.klen").string() + "' --image '" + (view / "view.png").string() +
                         "' --prior 100,101,0");
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_EQ(count_lines(r.out), 2u) << r.out;
    const std::string row = r.out.substr(r.out.find('\n') + 1);
    std::vector<std::string> fields;
    std::stringstream ss(row);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    ASSERT_GE(fields.size(), 10u);
    EXPECT_NEAR(std::stod(fields[4]), 100.5, 0.5);
    EXPECT_NEAR(std::stod(fields[5]), 102.0, 0.5);
    EXPECT_EQ(fields[9], "1");
}

TEST(Cli, BatchLocalizeRowCountMatchesFrames)
{
    const fs::path frames = work_dir() / "traj";
    Result r = run("render --map '" + (artifacts() / "map" / "map").string() + "' --waypoints '100,50;100,80' -o '" +
                   frames.string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto manifest = nlohmann::json::parse(slurp(frames / "manifest.json"));
    const std::size_t n = manifest["frames"].get<std::size_t>();
    EXPECT_EQ(n, 29u);
    const fs::path out = work_dir() / "batch";
    r = run("localize --codebook '" + (artifacts() / "cb" / "codebook.klcb").string() + "' --encoder '" +
            (artifacts() / "cb" / "encoder.klen").string() + "' --frames '" + frames.string() + "' -o '" + out.string() +
            "'");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(count_lines(slurp(out / "estimates.csv")), n + 1);
    EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST(Cli, MissingCodebookNamesThePath)
{
    const std::string missing = (work_dir() / "nope" / "missing.klcb").string();
    const Result r = run("localize --codebook '" + missing + "' --encoder x.klen --image x.png --prior 0,0,0");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
}

TEST(Cli, EvaluateWritesOneReportPerCondition)
{
    const fs::path out = work_dir() / "eval";
    fs::remove_all(out);
    const Result r = run("evaluate --map '" + (artifacts() / "map" / "map").string() + "' --codebook '" +
                         (artifacts() / "cb" / "codebook.klcb").string() + "' --encoder '" +
                         (artifacts() / "cb" / "encoder.klen").string() + "' --waypoints '100,50;100,150'" +
                         " --conditions matched,flipped --frame-spacing 5 -o '" + out.string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    for (const std::string c : {"matched", "flipped"}) {
        ASSERT_TRUE(fs::exists(out / ("report_" + c + ".json"))) << c;
        const auto rep = nlohmann::json::parse(slurp(out / ("report_" + c + ".json")));
        EXPECT_EQ(rep["condition"], c);
        EXPECT_EQ(rep["frames"]["total"], 20);
        EXPECT_TRUE(rep.contains("config"));
        EXPECT_TRUE(fs::exists(out / ("frames_" + c + ".csv")));
        EXPECT_TRUE(fs::exists(out / ("errors_" + c + ".csv")));
    }
    EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST(Cli, BenchReportsLatencyAndChecksum)
{
    const fs::path out = work_dir() / "bench";
    const Result a = run("bench --dim 1000 --window 336 --iters 200 -o '" + out.string() + "'");
    ASSERT_EQ(a.code, 0) << a.err;
    const auto j = nlohmann::json::parse(slurp(out / "bench.json"));
    ASSERT_FALSE(j["results"].empty());
    double checksum = 0.0;
    bool first = true;
    for (const auto& res : j["results"]) {
        EXPECT_GT(res["mean_ms"].get<double>(), 0.0);
        if (first) checksum = res["checksum"].get<double>(), first = false;
        EXPECT_NEAR(res["checksum"].get<double>(), checksum, 1e-9 * std::abs(checksum));
    }
    const Result b = run("bench --dim 1000 --window 336 --iters 200 -o '" + out.string() + "'");
    ASSERT_EQ(b.code, 0);
    const auto k = nlohmann::json::parse(slurp(out / "bench.json"));
    EXPECT_EQ(k["results"][0]["checksum"], j["results"][0]["checksum"]);
}

TEST(Cli, ConfigFileComposesWithFlagsWinning)
{
    const fs::path cfg = work_dir() / "run.cfg";
    {
        std::ofstream out(cfg);
        out << "# bench settings\n[bench]\ndim = 16\nwindow = 21\niters = 5\n[evaluate]\nconditions = matched\n";
    }
    const fs::path out = work_dir() / "cfg_bench";
    Result r = run("bench --config '" + cfg.string() + "' --dim 24 -o '" + out.string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(out / "bench.json"));
    EXPECT_EQ(j["dim"], 24);
    EXPECT_EQ(j["window"], 21);
    EXPECT_EQ(j["iters"], 5);
    const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(m["config"]["dim"], "24");
    EXPECT_EQ(m["config"]["window"], "21");

    {
        std::ofstream bad(work_dir() / "bad.cfg");
        bad << "no_such_key = 1\n";
    }
    r = run("bench --config '" + (work_dir() / "bad.cfg").string() + "'");
    EXPECT_EQ(r.code, 1);
    r = run("bench --config '" + (work_dir() / "missing.cfg").string() + "'");
    EXPECT_EQ(r.code, 1);
}

TEST(Cli, BuildCodebookFromImportedEmbeddings)
{
    // 1 m path: 42 records of D = 2, value (id, 1.0) for small ids is exact in half precision.
    const fs::path embx = work_dir() / "ext.embx";
    {
        std::ofstream out(embx, std::ios::binary);
        auto put = [&out](std::uint64_t v, int bytes) {
            for (int i = 0; i < bytes; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
        };
        out.write("EMBX", 4);
        put(1, 2);
        put(2, 4);
        put(42, 8);
        for (std::uint64_t id = 0; id < 42; ++id) {
            put(id, 8);
            put(0x3C00, 2);  // 1.0
            put(0xC000, 2);  // -2.0
        }
    }
    const fs::path out = work_dir() / "imported";
    Result r = run("build-codebook --import-embeddings '" + embx.string() +
                   "' --waypoints '0,0;0,1' --encoder-id ext-v1 -o '" + out.string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("N=42 D=2"), std::string::npos) << r.out;
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(manifest["encoder_id"], "ext-v1");
    EXPECT_EQ(manifest["columns"], 42);
    EXPECT_FALSE(fs::exists(out / "encoder.klen"));

    // A 2 m path needs 84 records.
    r = run("build-codebook --import-embeddings '" + embx.string() + "' --waypoints '0,0;0,2' -o '" +
            (work_dir() / "imported_bad").string() + "'");
    EXPECT_EQ(r.code, 2);
}
