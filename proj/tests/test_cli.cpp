// End-to-end checks of the fpaint binary: byte-reproducibility given --seed,
// format round-trips, and the error discipline of each subcommand. The
// binary path arrives via the FPAINT_BIN environment variable set by ctest.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fpaint/image_io.hpp"

namespace fs = std::filesystem;
using fpaint::read_file_bytes;

namespace {

std::string fpaint_bin() {
    const char* env = std::getenv("FPAINT_BIN");
    REQUIRE_MESSAGE(env != nullptr, "FPAINT_BIN not set (run through ctest)");
    return env;
}

struct Workspace {
    fs::path root;
    Workspace() {
        root = fs::temp_directory_path() / ("fpaint_cli_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Workspace() { fs::remove_all(root); }
    std::string p(const std::string& rel) const { return (root / rel).string(); }
};

int run(const std::string& args, std::string* output = nullptr) {
    static int call = 0;
    const std::string out_path =
        (fs::temp_directory_path() / ("fpaint_cli_out_" + std::to_string(::getpid()) + "_" +
                                      std::to_string(call++)))
            .string();
    const std::string cmd = fpaint_bin() + " " + args + " > " + out_path + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) *output = read_file_bytes(out_path);
    fs::remove(out_path);
    return WEXITSTATUS(status);
}

void write_small_config(const std::string& path, int steps) {
    std::ofstream out(path);
    out << "model.base_channels = 8\n"
        << "model.channel_mult = 1,2\n"
        << "model.attention_levels = 1\n"
        << "model.head_count = 2\n"
        << "model.embed_dim = 16\n"
        << "model.noise_emb_dim = 16\n"
        << "model.diffusion_steps = 200\n"
        << "train.steps = " << steps << "\n"
        << "train.batch = 1\n"
        << "train.lr = 1e-3\n";
}

bool dirs_byte_identical(const fs::path& a, const fs::path& b) {
    std::vector<std::string> names_a, names_b;
    for (auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) names_a.push_back(fs::relative(e.path(), a).string());
    for (auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) names_b.push_back(fs::relative(e.path(), b).string());
    std::sort(names_a.begin(), names_a.end());
    std::sort(names_b.begin(), names_b.end());
    if (names_a != names_b) return false;
    for (const auto& name : names_a) {
        if (read_file_bytes((a / name).string()) != read_file_bytes((b / name).string())) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("gen-data writes the documented layout and is byte-deterministic") {
    Workspace ws;
    std::string out;
    CHECK(run("gen-data --out " + ws.p("d1") + " --num-pairs 4 --size 32x32 --signal sketch --seed 7",
              &out) == 0);
    int pair_dirs = 0;
    for (auto& e : fs::directory_iterator(ws.p("d1"))) pair_dirs += e.is_directory();
    CHECK(pair_dirs == 4);
    for (const char* f : {"source.ppm", "target.ppm", "signal.pgm", "corr_res8.bin", "corr_res16.bin",
                          "meta.txt"}) {
        CHECK(fs::exists(ws.p("d1/pair_00000/") + f));
    }
    CHECK(run("gen-data --out " + ws.p("d2") + " --num-pairs 4 --size 32x32 --signal sketch --seed 7") == 0);
    CHECK(dirs_byte_identical(ws.p("d1"), ws.p("d2")));
    // different seed differs
    CHECK(run("gen-data --out " + ws.p("d3") + " --num-pairs 4 --size 32x32 --signal sketch --seed 8") == 0);
    CHECK_FALSE(dirs_byte_identical(ws.p("d1"), ws.p("d3")));
}

TEST_CASE("gen-data rejects bad sizes and unwritable paths") {
    Workspace ws;
    std::string out;
    CHECK(run("gen-data --out " + ws.p("x") + " --num-pairs 1 --size banana --signal sketch", &out) != 0);
    CHECK(run("gen-data --out /proc/none/x --num-pairs 1 --size 32x32 --signal sketch", &out) != 0);
}

TEST_CASE("train produces identical checkpoints and logs for identical seeds") {
    Workspace ws;
    REQUIRE(run("gen-data --out " + ws.p("data") + " --num-pairs 5 --size 32x32 --signal sketch --seed 3") == 0);
    write_small_config(ws.p("cfg.txt"), 12);
    std::string out;
    CHECK(run("train --data " + ws.p("data") + " --config " + ws.p("cfg.txt") +
                  " --signal sketch --ckpt-out " + ws.p("a.fpck") + " --seed 5 --log " + ws.p("a.log"),
              &out) == 0);
    CHECK(run("train --data " + ws.p("data") + " --config " + ws.p("cfg.txt") +
              " --signal sketch --ckpt-out " + ws.p("b.fpck") + " --seed 5 --log " + ws.p("b.log")) == 0);
    CHECK(read_file_bytes(ws.p("a.fpck")) == read_file_bytes(ws.p("b.fpck")));
    CHECK(read_file_bytes(ws.p("a.log")) == read_file_bytes(ws.p("b.log")));

    // log: '#' header lines then exactly --steps data lines
    std::istringstream log(read_file_bytes(ws.p("a.log")));
    std::string line;
    int data_lines = 0;
    bool lambda_line = false;
    while (std::getline(log, line)) {
        if (!line.empty() && line[0] == '#') {
            if (line.find("lambda_match = 1") != std::string::npos) lambda_line = true;
        } else if (!line.empty()) {
            ++data_lines;
        }
    }
    CHECK(data_lines == 12);
    CHECK(lambda_line);
}

TEST_CASE("train rejects a signal mismatch and unknown config keys") {
    Workspace ws;
    REQUIRE(run("gen-data --out " + ws.p("data") + " --num-pairs 3 --size 32x32 --signal sketch --seed 3") == 0);
    write_small_config(ws.p("cfg.txt"), 3);
    std::string out;
    CHECK(run("train --data " + ws.p("data") + " --config " + ws.p("cfg.txt") +
                  " --signal coarse --ckpt-out " + ws.p("x.fpck"),
              &out) != 0);
    CHECK(out.find("signal") != std::string::npos);

    std::ofstream bad(ws.p("bad.txt"));
    bad << "train.oops = 1\n";
    bad.close();
    CHECK(run("train --data " + ws.p("data") + " --config " + ws.p("bad.txt") +
                  " --signal sketch --ckpt-out " + ws.p("x.fpck"),
              &out) != 0);
    CHECK(out.find("unknown key") != std::string::npos);
}

TEST_CASE("edit is byte-deterministic, validates signals, and defaults to 25 steps") {
    Workspace ws;
    REQUIRE(run("gen-data --out " + ws.p("data") + " --num-pairs 4 --size 32x32 --signal sketch --seed 4") == 0);
    write_small_config(ws.p("cfg.txt"), 8);
    REQUIRE(run("train --data " + ws.p("data") + " --config " + ws.p("cfg.txt") +
                " --signal sketch --ckpt-out " + ws.p("m.fpck") + " --seed 2") == 0);

    const std::string src = ws.p("data/pair_00000/source.ppm");
    const std::string sig = ws.p("data/pair_00000/signal.pgm");
    CHECK(run("edit --ckpt " + ws.p("m.fpck") + " --source " + src + " --signal-file " + sig +
              " --out " + ws.p("e1.ppm") + " --seed 6") == 0);
    CHECK(run("edit --ckpt " + ws.p("m.fpck") + " --source " + src + " --signal-file " + sig +
              " --out " + ws.p("e2.ppm") + " --seed 6") == 0);
    CHECK(read_file_bytes(ws.p("e1.ppm")) == read_file_bytes(ws.p("e2.ppm")));
    // explicit --steps 25 must agree with the default
    CHECK(run("edit --ckpt " + ws.p("m.fpck") + " --source " + src + " --signal-file " + sig +
              " --out " + ws.p("e3.ppm") + " --steps 25 --seed 6") == 0);
    CHECK(read_file_bytes(ws.p("e1.ppm")) == read_file_bytes(ws.p("e3.ppm")));
    // a different seed changes the output
    CHECK(run("edit --ckpt " + ws.p("m.fpck") + " --source " + src + " --signal-file " + sig +
              " --out " + ws.p("e4.ppm") + " --seed 7") == 0);
    CHECK(read_file_bytes(ws.p("e1.ppm")) != read_file_bytes(ws.p("e4.ppm")));

    // signal type mismatch (drag file against a sketch model)
    std::ofstream drag(ws.p("drag.txt"));
    drag << "1 1 2 2\n";
    drag.close();
    std::string out;
    CHECK(run("edit --ckpt " + ws.p("m.fpck") + " --source " + src + " --signal-file " +
                  ws.p("drag.txt") + " --out " + ws.p("x.ppm"),
              &out) != 0);
    CHECK(out.find("does not match") != std::string::npos);
}

TEST_CASE("drag signal files with out-of-bounds coordinates are rejected with the line") {
    Workspace ws;
    REQUIRE(run("gen-data --out " + ws.p("data") + " --num-pairs 4 --size 32x32 --signal drag --seed 9") == 0);
    write_small_config(ws.p("cfg.txt"), 8);
    REQUIRE(run("train --data " + ws.p("data") + " --config " + ws.p("cfg.txt") +
                " --signal drag --ckpt-out " + ws.p("m.fpck") + " --seed 2") == 0);
    std::ofstream bad(ws.p("bad.txt"));
    bad << "1 1 2 2\n999 0 3 3\n";
    bad.close();
    std::string out;
    CHECK(run("edit --ckpt " + ws.p("m.fpck") + " --source " + ws.p("data/pair_00000/source.ppm") +
                  " --signal-file " + ws.p("bad.txt") + " --out " + ws.p("x.ppm"),
              &out) != 0);
    CHECK(out.find("line 2") != std::string::npos);
}

TEST_CASE("ablate emits the structural row count and a lossless csv") {
    Workspace ws;
    REQUIRE(run("gen-data --out " + ws.p("data") + " --num-pairs 4 --size 32x32 --signal sketch --seed 3") == 0);
    REQUIRE(run("gen-data --out " + ws.p("eval") + " --num-pairs 3 --size 32x32 --signal sketch --seed 31") == 0);
    write_small_config(ws.p("cfg.txt"), 6);
    for (int seed : {1, 2}) {
        REQUIRE(run("train --data " + ws.p("data") + " --config " + ws.p("cfg.txt") +
                    " --signal sketch --ckpt-out " + ws.p("m" + std::to_string(seed) + ".fpck") +
                    " --seed " + std::to_string(seed)) == 0);
    }
    std::ofstream runs(ws.p("runs.txt"));
    runs << "# label seed checkpoint\n";
    runs << "matching 1 " << ws.p("m1.fpck") << "\n";
    runs << "matching 2 " << ws.p("m2.fpck") << "\n";
    runs.close();
    std::string out;
    CHECK(run("ablate --data " + ws.p("eval") + " --runs " + ws.p("runs.txt") + " --out-table " +
                  ws.p("t.txt") + " --out-csv " + ws.p("t.csv") + " --sample-steps 3",
              &out) == 0);
    // 2 per-seed rows + 1 mean row (+ header lines in the table)
    std::istringstream csv(read_file_bytes(ws.p("t.csv")));
    std::string line;
    int rows = 0;
    bool mean_row = false;
    std::getline(csv, line);  // header
    CHECK(line == "config,seed,ssim,match_acc");
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        ++rows;
        if (line.find("matching,mean,") == 0) mean_row = true;
    }
    CHECK(rows == 3);
    CHECK(mean_row);

    // missing checkpoint is rejected naming the config
    std::ofstream runs2(ws.p("runs2.txt"));
    runs2 << "ghost 5 " << ws.p("missing.fpck") << "\n";
    runs2.close();
    CHECK(run("ablate --data " + ws.p("eval") + " --runs " + ws.p("runs2.txt"), &out) != 0);
    CHECK(out.find("ghost") != std::string::npos);
}

TEST_CASE("viz-attn writes one heatmap per query token") {
    Workspace ws;
    REQUIRE(run("gen-data --out " + ws.p("data") + " --num-pairs 2 --size 32x32 --signal sketch --seed 13") == 0);
    write_small_config(ws.p("cfg.txt"), 6);
    REQUIRE(run("train --data " + ws.p("data") + " --config " + ws.p("cfg.txt") +
                " --signal sketch --ckpt-out " + ws.p("m.fpck") + " --seed 2") == 0);
    std::string out;
    CHECK(run("viz-attn --ckpt " + ws.p("m.fpck") + " --pair " + ws.p("data/pair_00001") +
                  " --query 8,8 --query 20,12 --out-prefix " + ws.p("hm"),
              &out) == 0);
    CHECK(fs::exists(ws.p("hm_q8x8.pgm")));
    CHECK(fs::exists(ws.p("hm_q20x12.pgm")));
    // heatmap dims equal the image dims
    fpaint::Tensor<float> hm = fpaint::read_pgm(ws.p("hm_q8x8.pgm"));
    CHECK(hm.dim(1) == 32);
    CHECK(hm.dim(2) == 32);
    // out-of-range query is rejected
    CHECK(run("viz-attn --ckpt " + ws.p("m.fpck") + " --pair " + ws.p("data/pair_00001") +
                  " --query 40,0 --out-prefix " + ws.p("hm"),
              &out) != 0);
}

TEST_CASE("checkpoints with a tampered version are refused") {
    Workspace ws;
    REQUIRE(run("gen-data --out " + ws.p("data") + " --num-pairs 2 --size 32x32 --signal sketch --seed 3") == 0);
    write_small_config(ws.p("cfg.txt"), 3);
    REQUIRE(run("train --data " + ws.p("data") + " --config " + ws.p("cfg.txt") +
                " --signal sketch --ckpt-out " + ws.p("m.fpck") + " --seed 2") == 0);
    std::string bytes = read_file_bytes(ws.p("m.fpck"));
    bytes[4] = 42;
    fpaint::atomic_write_file(ws.p("bad.fpck"), bytes);
    std::string out;
    CHECK(run("edit --ckpt " + ws.p("bad.fpck") + " --source " + ws.p("data/pair_00000/source.ppm") +
                  " --signal-file " + ws.p("data/pair_00000/signal.pgm") + " --out " + ws.p("x.ppm"),
              &out) != 0);
    CHECK(out.find("version") != std::string::npos);
}
