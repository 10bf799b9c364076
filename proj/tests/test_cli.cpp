#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "flearn/checkpoint.hpp"
#include "flearn/scene.hpp"

using namespace flearn;
namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "flearn_cli_tests";

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Runs the real binary through the shell, capturing exit code and streams.
RunResult run(const std::string& args, const std::string& env = "") {
    static int counter = 0;
    const fs::path so = kDir / ("out_" + std::to_string(counter) + ".txt");
    const fs::path se = kDir / ("err_" + std::to_string(counter) + ".txt");
    ++counter;
    std::string cmd;
    if (!env.empty()) cmd += "env " + env + " ";
    cmd += FLEARN_BIN;
    cmd += " " + args + " >" + so.string() + " 2>" + se.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(so);
    r.err = slurp(se);
    return r;
}

// Flags for a 16x16 scene whose geometry fits the smaller canvas.
std::string tiny_scene_flags() {
    return "--size 16 --circle-cx 5 --circle-cy 5 --circle-r 3 --square-x 7 --square-y 7 "
           "--square-side 6 --overlap 2 --thickness 1";
}

// Generates the shared tiny scene once; several cases train against it.
fs::path tiny_scene_dir() {
    static fs::path dir;
    if (dir.empty()) {
        dir = kDir / "scene16";
        const RunResult r = run("gen-scene --out " + dir.string() + " " + tiny_scene_flags());
        REQUIRE(r.code == 0);
    }
    return dir;
}

struct SuiteDir {
    SuiteDir() {
        fs::remove_all(kDir);
        fs::create_directories(kDir);
    }
};
const SuiteDir kSuiteDir;  // lives for the whole binary; keeps artifacts between cases

}  // namespace

TEST_CASE("help, version and usage errors") {
    const RunResult help = run("--help");
    CHECK(help.code == 0);
    for (const char* sub : {"gen-scene", "train", "bench", "report", "gradcheck"}) {
        CAPTURE(sub);
        CHECK(help.out.find(sub) != std::string::npos);
    }

    const RunResult version = run("--version");
    CHECK(version.code == 0);
    CHECK(version.out.find("0.1.0") != std::string::npos);

    CHECK(run("").code == 1);                       // a subcommand is required
    CHECK(run("polish").code == 1);                 // unknown subcommand
    CHECK(run("train --no-such-flag").code == 1);   // unknown flag
    CHECK(run("report").code == 1);                 // missing required --raw
    CHECK(run("bench --trials 0").code == 1);
    CHECK(run("train --model resnet").code == 1);
    CHECK(run("train --threshold 1.5").code == 1);
}

TEST_CASE("gen-scene writes a loadable scene and rejects bad geometry") {
    const fs::path dir = kDir / "scene_out";
    const RunResult r =
        run("gen-scene --out " + dir.string() + " " + tiny_scene_flags() + " --grid 2x2");
    CHECK(r.code == 0);
    CHECK(r.out.find("effective config") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "FAILED"));
    for (const char* f : {"scene.json", "target.pgm", "fragment_0.pgm", "fragment_3.pgm"}) {
        CAPTURE(f);
        CHECK(fs::exists(dir / f));
    }
    const FragmentScene scene = load_scene(dir);
    CHECK(scene.config.image_size == 16);
    CHECK(scene.fragment_count() == 4);

    // a 1x2 grid gives two fragments; 1x1 is rejected (nothing to fuse)
    const fs::path dir12 = kDir / "scene_1x2";
    CHECK(run("gen-scene --out " + dir12.string() + " " + tiny_scene_flags() + " --grid 1x2")
              .code == 0);
    CHECK(load_scene(dir12).fragment_count() == 2);
    CHECK(fs::exists(dir12 / "fragment_1.pgm"));
    CHECK_FALSE(fs::exists(dir12 / "fragment_2.pgm"));
    CHECK(run("gen-scene --out " + (kDir / "x").string() + " " + tiny_scene_flags() +
              " --grid 1x1")
              .code == 1);

    // geometry and flag validation
    const RunResult no_overlap =
        run("gen-scene --out " + (kDir / "x").string() +
            " --size 16 --circle-cx 5 --circle-cy 5 --circle-r 3 --square-x 7 --square-y 7 "
            "--square-side 6 --thickness 1 --overlap 0");
    CHECK(no_overlap.code == 1);
    CHECK(no_overlap.err.find("overlap") != std::string::npos);
    CHECK(run("gen-scene --out " + (kDir / "x").string() + " --size 16")
              .code == 1);  // default circle does not fit a 16x16 canvas
    CHECK(run("gen-scene --out " + (kDir / "x").string() + " " + tiny_scene_flags() +
              " --grid 4by4")
              .code == 1);
    CHECK(run("gen-scene --out " + (kDir / "x").string() + " " + tiny_scene_flags() +
              " --stroke dotted")
              .code == 1);

    // oversized overlap is legal but warned about on stderr
    const RunResult warn =
        run("gen-scene --out " + (kDir / "scene_warn").string() +
            " --size 16 --circle-cx 5 --circle-cy 5 --circle-r 3 --square-x 7 --square-y 7 "
            "--square-side 6 --thickness 1 --overlap 16");
    CHECK(warn.code == 0);
    CHECK(warn.err.find("warning:") != std::string::npos);
    CHECK(warn.err.find("cover the whole image") != std::string::npos);
}

TEST_CASE("FLEARN_OUT_DIR supplies the default output directory") {
    const fs::path dir = kDir / "env_out";
    const RunResult r =
        run("gen-scene " + tiny_scene_flags(), "FLEARN_OUT_DIR=" + dir.string());
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "scene.json"));
}

TEST_CASE("train: outputs, determinism, lr=0 and checkpoints") {
    const fs::path scene = tiny_scene_dir();
    const fs::path out1 = kDir / "train1";
    const std::string base = "train --scene " + scene.string() +
                             " --model bconv --hidden 4 --epochs 2 --seed 5 --reproducible";

    const RunResult r1 = run(base + " --out " + out1.string());
    CHECK(r1.code == 0);
    CHECK(r1.out.find("finished 2 epochs") != std::string::npos);
    CHECK_FALSE(fs::exists(out1 / "FAILED"));
    for (const char* f : {"initial.flpc", "final.flpc", "series.csv", "bconv_epoch_001.pgm"}) {
        CAPTURE(f);
        CHECK(fs::exists(out1 / f));
    }
    // 2 epochs -> header + 2 rows
    const std::string series = slurp(out1 / "series.csv");
    CHECK(std::count(series.begin(), series.end(), '\n') == 3);
    CHECK(series.rfind("trial_seed,model_kind,epoch,", 0) == 0);

    // the checkpoints parse and training actually moved the weights
    const auto initial = load_checkpoint(out1 / "initial.flpc");
    const auto final_ckpt = load_checkpoint(out1 / "final.flpc");
    REQUIRE(initial.size() == final_ckpt.size());
    CHECK(initial[0].first == final_ckpt[0].first);
    bool moved = false;
    for (std::size_t i = 0; i < initial.size(); ++i) {
        if (!(initial[i].second == final_ckpt[i].second)) moved = true;
    }
    CHECK(moved);

    SUBCASE("re-running the same seed is byte-identical; another seed is not") {
        const fs::path out2 = kDir / "train2";
        CHECK(run(base + " --out " + out2.string()).code == 0);
        CHECK(slurp(out2 / "series.csv") == series);
        CHECK(slurp(out2 / "final.flpc") == slurp(out1 / "final.flpc"));

        const fs::path out3 = kDir / "train3";
        CHECK(run("train --scene " + scene.string() +
                  " --model bconv --hidden 4 --epochs 2 --seed 6 --out " + out3.string())
                  .code == 0);
        CHECK(slurp(out3 / "series.csv") != series);
    }

    SUBCASE("lr = 0 trains in place: final equals initial bitwise") {
        const fs::path out = kDir / "train_lr0";
        CHECK(run("train --scene " + scene.string() +
                  " --model bconv --hidden 4 --epochs 2 --seed 5 --lr 0 --out " + out.string())
                  .code == 0);
        CHECK(slurp(out / "initial.flpc") == slurp(out / "final.flpc"));
    }

    SUBCASE("an absurd learning rate diverges: exit 2 and a FAILED marker") {
        const fs::path out = kDir / "train_div";
        const RunResult r = run("train --scene " + scene.string() +
                                " --model bconv --hidden 4 --epochs 4 --seed 5 --lr 1e300 --out " +
                                out.string());
        CHECK(r.code == 2);
        CHECK(r.err.find("diverged") != std::string::npos);
        CHECK(fs::exists(out / "FAILED"));
        CHECK(fs::exists(out / "series.csv"));  // partial series is still flushed
    }
}

TEST_CASE("bench: full pipeline, determinism across runs and job counts, report re-derivation") {
    const fs::path scene = tiny_scene_dir();
    const std::string base = "bench --scene " + scene.string() +
                             " --models bconv,flearn --trials 2 --epochs 2 --hidden 4 "
                             "--snapshot-epochs 1,2 --reproducible";

    const fs::path out1 = kDir / "bench1";
    const RunResult r1 = run(base + " --jobs 1 --out " + out1.string());
    CHECK(r1.code == 0);
    CHECK(r1.out.find("final-epoch mean F1") != std::string::npos);
    CHECK_FALSE(fs::exists(out1 / "FAILED"));
    for (const char* f : {"raw.csv", "aggregate.csv", "curves.svg", "run_manifest.json"}) {
        CAPTURE(f);
        CHECK(fs::exists(out1 / f));
    }
    for (const char* f : {"bconv_epoch_001.pgm", "bconv_epoch_002.pgm", "flearn_epoch_001.pgm",
                          "flearn_epoch_002.pgm"}) {
        CAPTURE(f);
        CHECK(fs::exists(out1 / "snapshots" / f));
    }
    const std::string raw = slurp(out1 / "raw.csv");
    CHECK(std::count(raw.begin(), raw.end(), '\n') == 1 + 2 * 2 * 2);

    // identical invocation and a parallel one produce identical bytes
    const fs::path out2 = kDir / "bench2";
    CHECK(run(base + " --jobs 1 --out " + out2.string()).code == 0);
    const fs::path out3 = kDir / "bench3";
    CHECK(run(base + " --jobs 8 --out " + out3.string()).code == 0);
    for (const char* f : {"raw.csv", "aggregate.csv", "curves.svg"}) {
        CAPTURE(f);
        CHECK(slurp(out1 / f) == slurp(out2 / f));
        CHECK(slurp(out1 / f) == slurp(out3 / f));
    }
    for (const char* f : {"bconv_epoch_002.pgm", "flearn_epoch_002.pgm"}) {
        CAPTURE(f);
        CHECK(slurp(out1 / "snapshots" / f) == slurp(out3 / "snapshots" / f));
    }

    // report re-derives identical raw, aggregate and curves from raw.csv
    const fs::path rep = kDir / "report1";
    const RunResult rr = run("report --raw " + (out1 / "raw.csv").string() + " --out " +
                             rep.string());
    CHECK(rr.code == 0);
    CHECK(slurp(rep / "raw.csv") == raw);
    CHECK(slurp(rep / "aggregate.csv") == slurp(out1 / "aggregate.csv"));
    CHECK(slurp(rep / "curves.svg") == slurp(out1 / "curves.svg"));

    // bad report inputs: missing file is I/O, empty file is usage
    CHECK(run("report --raw " + (kDir / "nope.csv").string() + " --out " +
              (kDir / "r2").string())
              .code == 3);
    std::ofstream(kDir / "empty.csv") << "trial_seed,model_kind,epoch,loss,precision,recall,f1\n";
    CHECK(run("report --raw " + (kDir / "empty.csv").string() + " --out " +
              (kDir / "r3").string())
              .code == 1);
}

TEST_CASE("gradcheck: passes honestly, fails the negative control, bounds the size") {
    const RunResult ok = run("gradcheck --model bconv --size 4 --seed 3");
    CHECK(ok.code == 0);
    CHECK(ok.out.find("all gradients match") != std::string::npos);
    CHECK(ok.out.find("classifier.weight") != std::string::npos);

    const RunResult corrupt =
        run("gradcheck --model bconv --size 4 --seed 3 --corrupt classifier.weight");
    CHECK(corrupt.code == 2);
    CHECK(corrupt.out.find("FAIL") != std::string::npos);
    CHECK(corrupt.err.find("gradient check failed") != std::string::npos);

    CHECK(run("gradcheck --model bconv --size 128").code == 1);
    CHECK(run("gradcheck --model bconv --size 1").code == 1);
}
