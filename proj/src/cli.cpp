#include "flearn/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flearn/bench.hpp"
#include "flearn/checkpoint.hpp"
#include "flearn/gradcheck.hpp"
#include "flearn/version.hpp"

namespace flearn {
namespace {

namespace fs = std::filesystem;

// Distinguishes "the numbers went wrong" (divergence, gradient mismatch)
// from plumbing failures; mapped to kExitNumeric at the top level.
struct NumericFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string default_out(const char* fallback) {
    const char* env = std::getenv("FLEARN_OUT_DIR");
    return (env && *env) ? env : fallback;
}

// Marks the output directory with a FAILED file unless done() is reached,
// so interrupted runs never masquerade as complete ones.
class OutputGuard {
  public:
    explicit OutputGuard(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::remove(dir_ / "FAILED", ec);  // stale marker from a previous run
    }
    OutputGuard(const OutputGuard&) = delete;
    OutputGuard& operator=(const OutputGuard&) = delete;
    ~OutputGuard() {
        if (!armed_) return;
        std::ofstream mark(dir_ / "FAILED");
        mark << "this run did not complete; treat any files here as partial\n";
    }
    void done() { armed_ = false; }

  private:
    fs::path dir_;
    bool armed_ = true;
};

template <class T>
std::string str(const T& v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

std::string str(bool v) { return v ? "true" : "false"; }

std::string str(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out.empty() ? "(none)" : out;
}

void echo_line(const std::string& key, const std::string& value) {
    std::cout << "  " << key;
    for (std::size_t i = key.size(); i < 20; ++i) std::cout << ' ';
    std::cout << " = " << value << '\n';
}

void echo_scene(const SceneConfig& s) {
    echo_line("scene.size", str(s.image_size));
    echo_line("scene.circle", "cx=" + str(s.circle_cx) + " cy=" + str(s.circle_cy) +
                                  " r=" + str(s.circle_r));
    echo_line("scene.square", "x=" + str(s.square_x) + " y=" + str(s.square_y) +
                                  " side=" + str(s.square_side));
    echo_line("scene.grid", str(s.grid_rows) + "x" + str(s.grid_cols));
    echo_line("scene.overlap", str(s.overlap));
    echo_line("scene.stroke", s.stroke == StrokeMode::Outline
                                  ? "outline(" + str(s.thickness) + ")"
                                  : "filled");
}

void parse_grid(const std::string& text, SceneConfig& cfg) {
    const std::size_t x = text.find('x');
    std::size_t used_r = 0, used_c = 0;
    int rows = 0, cols = 0;
    try {
        rows = std::stoi(text.substr(0, x), &used_r);
        cols = std::stoi(text.substr(x + 1), &used_c);
    } catch (const std::logic_error&) {
        used_r = std::string::npos;  // fall through to the shared error below
    }
    if (x == std::string::npos || used_r != x || used_c != text.size() - x - 1) {
        throw std::invalid_argument("grid must look like ROWSxCOLS, e.g. 2x2; got \"" + text +
                                    "\"");
    }
    cfg.grid_rows = rows;
    cfg.grid_cols = cols;
}

std::vector<ModelKind> parse_kinds(const std::vector<std::string>& names) {
    std::vector<ModelKind> kinds;
    kinds.reserve(names.size());
    for (const std::string& n : names) kinds.push_back(parse_model_kind(n));
    return kinds;
}

// The default snapshot schedule, clipped to the configured epoch range so
// short runs stay valid without explicit flags.
std::vector<int> default_snapshots(int epochs) {
    std::vector<int> out;
    for (int e : {1, 10, 25, 50}) {
        if (e <= epochs) out.push_back(e);
    }
    return out;
}

FragmentScene resolve_scene(const std::string& dir) {
    if (dir.empty()) return make_scene(SceneConfig{});
    return load_scene(dir);
}

// ---------------------------------------------------------------- gen-scene

struct GenSceneOpts {
    std::string out = default_out("scene");
    std::string grid = "2x2";
    std::string stroke = "outline";
    SceneConfig scene;
};

int run_gen_scene(GenSceneOpts& o) {
    parse_grid(o.grid, o.scene);
    o.scene.stroke = parse_stroke_mode(o.stroke);
    o.scene.validate();

    std::cout << "effective config:\n";
    echo_line("subcommand", "gen-scene");
    echo_line("out", o.out);
    echo_scene(o.scene);

    if (auto warn = degenerate_overlap_warning(o.scene)) {
        std::cerr << "warning: " << *warn << '\n';
    }
    const FragmentScene scene = make_scene(o.scene);
    fs::create_directories(o.out);
    OutputGuard guard(o.out);
    save_scene(scene, o.out);
    guard.done();
    std::cout << "wrote " << o.out << "/target.pgm, " << scene.fragment_count()
              << " fragment PGMs and scene.json\n";
    return kExitOk;
}

// -------------------------------------------------------------------- train

struct TrainOpts {
    std::string scene_dir;  // empty: built-in default scene
    std::string out = default_out("run");
    std::string model = "flearn";
    int hidden = 64;
    std::vector<int> snapshot_epochs;
    bool snapshots_given = false;
    bool reproducible = false;
    TrainConfig train;
};

int run_train(TrainOpts& o) {
    const ModelKind kind = parse_model_kind(o.model);
    o.train.snapshot_epochs =
        o.snapshots_given ? o.snapshot_epochs : default_snapshots(o.train.epochs);
    o.train.validate();
    const FragmentScene scene = resolve_scene(o.scene_dir);

    std::cout << "effective config:\n";
    echo_line("subcommand", "train");
    echo_line("scene", o.scene_dir.empty() ? "(built-in default)" : o.scene_dir);
    echo_line("out", o.out);
    echo_line("model", to_string(kind));
    echo_line("hidden", str(o.hidden));
    echo_line("seed", str(o.train.seed));
    echo_line("epochs", str(o.train.epochs));
    echo_line("lr", str(o.train.learning_rate));
    echo_line("threshold", str(o.train.eval_threshold));
    echo_line("steps-per-epoch", str(o.train.steps_per_epoch));
    echo_line("snapshot-epochs", str(o.train.snapshot_epochs));
    echo_line("reproducible", str(o.reproducible));
    echo_scene(scene.config);

    ModelConfig mc;
    mc.kind = kind;
    mc.hidden_channels = o.hidden;
    mc.in_channels = scene.fragment_count();
    mc.image_size = scene.config.image_size;
    mc.validate();
    Model model = build_model(mc);
    init_weights(model, o.train.seed);

    fs::create_directories(o.out);
    OutputGuard guard(o.out);
    save_checkpoint(fs::path(o.out) / "initial.flpc", model.params);
    const EpochSeries series = train_model(model, scene, o.train);
    save_checkpoint(fs::path(o.out) / "final.flpc", model.params);

    // Reuse the benchmark exporters by wrapping the single trial as a
    // one-kind, one-trial report. Only recorded snapshot epochs are asked
    // for, so a diverged run still flushes what it has.
    BenchmarkReport rep;
    rep.config.kinds = {kind};
    rep.config.n_trials = 1;
    rep.config.snapshot_trial = 0;
    rep.config.snapshot_epochs.clear();
    for (const auto& [epoch, tensor] : series.snapshots) {
        (void)tensor;
        rep.config.snapshot_epochs.push_back(epoch);
    }
    TrialResult trial;
    trial.trial = 0;
    trial.seed = o.train.seed;
    trial.series = series;
    rep.results.push_back(KindResults{kind, {std::move(trial)}});
    export_raw_csv(rep, fs::path(o.out) / "series.csv");
    export_snapshots(rep, o.out);

    if (series.diverged()) {
        // keep the partial outputs, but leave the FAILED marker in place
        throw NumericFailure("training diverged at epoch " + std::to_string(series.diverged_at) +
                             " (non-finite loss); partial outputs left in " + o.out);
    }
    guard.done();
    const EpochRecord& last = series.epochs.back();
    std::cout << "finished " << series.epochs.size() << " epochs: loss=" << last.loss
              << " f1=" << last.f1 << '\n';
    std::cout << "wrote " << o.out
              << "/{initial.flpc, final.flpc, series.csv} and snapshot PGMs\n";
    return kExitOk;
}

// -------------------------------------------------------------------- bench

struct BenchOpts {
    std::string scene_dir;
    std::string out = default_out("bench");
    std::vector<std::string> models = {"bconv",      "flearn",     "conv-casv1",
                                       "conv-casv2", "conv-parv1", "conv-parv2"};
    std::vector<int> snapshot_epochs;
    bool snapshots_given = false;
    BenchmarkConfig cfg;
};

int run_bench(BenchOpts& o) {
    o.cfg.kinds = parse_kinds(o.models);
    o.cfg.snapshot_epochs =
        o.snapshots_given ? o.snapshot_epochs : default_snapshots(o.cfg.train.epochs);
    const FragmentScene scene = resolve_scene(o.scene_dir);
    o.cfg.scene = scene.config;
    o.cfg.validate();

    std::cout << "effective config:\n";
    echo_line("subcommand", "bench");
    echo_line("scene", o.scene_dir.empty() ? "(built-in default)" : o.scene_dir);
    echo_line("out", o.out);
    {
        std::string names;
        for (std::size_t i = 0; i < o.cfg.kinds.size(); ++i) {
            if (i) names += ',';
            names += to_string(o.cfg.kinds[i]);
        }
        echo_line("models", names);
    }
    echo_line("trials", str(o.cfg.n_trials));
    echo_line("seed", str(o.cfg.base_seed));
    echo_line("jobs", str(o.cfg.jobs));
    echo_line("epochs", str(o.cfg.train.epochs));
    echo_line("lr", str(o.cfg.train.learning_rate));
    echo_line("threshold", str(o.cfg.train.eval_threshold));
    echo_line("hidden", str(o.cfg.model.hidden_channels));
    echo_line("snapshot-epochs", str(o.cfg.snapshot_epochs));
    echo_line("snapshot-trial", str(o.cfg.snapshot_trial));
    echo_line("reproducible", str(o.cfg.reproducible));
    echo_scene(o.cfg.scene);

    const BenchmarkReport report =
        run_benchmark(o.cfg, [](const std::string& line) { std::cerr << line << '\n'; });

    // Snapshots come from one designated trial; if that trial fell over the
    // requested epochs cannot all be written, which is a numeric failure,
    // not a plumbing one.
    for (const KindResults& kr : report.results) {
        const EpochSeries& s = kr.trials[o.cfg.snapshot_trial].series;
        if (s.diverged() && !o.cfg.snapshot_epochs.empty() &&
            *std::max_element(o.cfg.snapshot_epochs.begin(), o.cfg.snapshot_epochs.end()) >=
                s.diverged_at) {
            throw NumericFailure("snapshot trial " + std::to_string(o.cfg.snapshot_trial) +
                                 " diverged at epoch " + std::to_string(s.diverged_at) + " for " +
                                 to_string(kr.kind) + "; snapshots incomplete");
        }
    }

    fs::create_directories(o.out);
    OutputGuard guard(o.out);
    export_csv(report, fs::path(o.out) / "raw.csv", fs::path(o.out) / "aggregate.csv");
    export_curves_svg(report, fs::path(o.out) / "curves.svg");
    export_snapshots(report, fs::path(o.out) / "snapshots");
    write_run_manifest(report, fs::path(o.out) / "run_manifest.json");
    guard.done();

    std::cout << "finished " << o.cfg.kinds.size() * static_cast<std::size_t>(o.cfg.n_trials)
              << " trials in " << str(report.total_wall_seconds) << "s\n";
    std::cout << "final-epoch mean F1:\n";
    for (const KindAggregate& agg : report.aggregates) {
        std::string line = agg.epochs.empty() ? "(no finished trials)"
                                              : str(agg.epochs.back().f1_mean);
        if (agg.divergent_trials > 0) {
            line += "  (" + std::to_string(agg.divergent_trials) + " divergent)";
        }
        echo_line(to_string(agg.kind), line);
    }
    std::cout << "wrote " << o.out
              << "/{raw.csv, aggregate.csv, curves.svg, run_manifest.json} and snapshots/\n";
    return kExitOk;
}

// ------------------------------------------------------------------- report

struct ReportOpts {
    std::string raw;
    std::string out = default_out("report");
};

int run_report(ReportOpts& o) {
    std::cout << "effective config:\n";
    echo_line("subcommand", "report");
    echo_line("raw", o.raw);
    echo_line("out", o.out);

    BenchmarkReport rep;
    rep.results = load_raw_csv(o.raw);
    if (rep.results.empty()) {
        throw std::invalid_argument("report: " + o.raw + " holds no data rows");
    }
    compute_aggregates(rep);

    fs::create_directories(o.out);
    OutputGuard guard(o.out);
    export_raw_csv(rep, fs::path(o.out) / "raw.csv");
    export_aggregate_csv(rep, fs::path(o.out) / "aggregate.csv");
    export_curves_svg(rep, fs::path(o.out) / "curves.svg");
    guard.done();
    std::cout << "wrote " << o.out << "/{raw.csv, aggregate.csv, curves.svg}\n";
    return kExitOk;
}

// ----------------------------------------------------------------- gradcheck

struct GradcheckOpts {
    std::string model = "flearn";
    int size = 8;
    std::uint64_t seed = 42;
    std::string corrupt;  // test hook: perturb this group's analytic gradient
};

int run_gradcheck(GradcheckOpts& o) {
    constexpr double kTolerance = 1e-4;
    const ModelKind kind = parse_model_kind(o.model);

    std::cout << "effective config:\n";
    echo_line("subcommand", "gradcheck");
    echo_line("model", to_string(kind));
    echo_line("size", str(o.size));
    echo_line("seed", str(o.seed));
    if (!o.corrupt.empty()) echo_line("corrupt", o.corrupt);

    ModelConfig mc;
    mc.kind = kind;
    Model model = build_model(mc);
    const std::vector<GradCheckRow> rows =
        gradcheck_model(model, o.size, o.seed, 1e-5, 24, o.corrupt);

    std::size_t width = 4;
    for (const GradCheckRow& r : rows) width = std::max(width, r.group.size());
    std::cout << "\nparameter group";
    for (std::size_t i = std::string("parameter group").size(); i < width; ++i) std::cout << ' ';
    std::cout << "  coords  max rel error  result\n";
    bool ok = true;
    for (const GradCheckRow& r : rows) {
        const bool pass = r.max_rel_error <= kTolerance;
        ok = ok && pass;
        std::cout << r.group;
        for (std::size_t i = r.group.size(); i < width; ++i) std::cout << ' ';
        char buf[48];
        std::snprintf(buf, sizeof(buf), "  %6zu  %13.3e  %s\n", r.checked, r.max_rel_error,
                      pass ? "pass" : "FAIL");
        std::cout << buf;
    }
    std::cout << (ok ? "\nall gradients match finite differences (tolerance 1e-4)\n"
                     : "\ngradient mismatch above tolerance 1e-4\n");
    if (!ok) {
        throw NumericFailure("gradient check failed for " + to_string(kind));
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"fragment-fusion testbed: frequency-domain feature learning (DFT -> "
                 "convolutions -> IDFT -> magnitude) against space-domain baselines on a "
                 "synthetic geometry-recovery task"};
    app.option_defaults()->always_capture_default();
    app.set_version_flag("--version", std::string(kVersion));
    app.set_config("--config", "",
                   "config file (INI/TOML, one [subcommand] section each; flags override it)");
    app.require_subcommand(1);

    GenSceneOpts gopts;
    CLI::App* gen = app.add_subcommand(
        "gen-scene", "render the circle+square structure and cut it into overlapping fragments");
    gen->add_option("--out", gopts.out, "output directory");
    gen->add_option("--size", gopts.scene.image_size, "image side length in pixels");
    gen->add_option("--grid", gopts.grid, "fragment grid as ROWSxCOLS");
    gen->add_option("--overlap", gopts.scene.overlap, "tile dilation across seams, pixels");
    gen->add_option("--circle-cx", gopts.scene.circle_cx, "circle center x (column)");
    gen->add_option("--circle-cy", gopts.scene.circle_cy, "circle center y (row)");
    gen->add_option("--circle-r", gopts.scene.circle_r, "circle radius");
    gen->add_option("--square-x", gopts.scene.square_x, "square top-left column");
    gen->add_option("--square-y", gopts.scene.square_y, "square top-left row");
    gen->add_option("--square-side", gopts.scene.square_side, "square side length");
    gen->add_option("--stroke", gopts.stroke, "filled or outline")
        ->check(CLI::IsMember({"filled", "outline"}));
    gen->add_option("--thickness", gopts.scene.thickness, "outline stroke width");

    TrainOpts topts;
    CLI::App* train = app.add_subcommand("train", "train one model on one scene for one seed");
    train->add_option("--scene", topts.scene_dir,
                      "scene directory from gen-scene (default: built-in scene)");
    train->add_option("--model", topts.model, "model kind");
    train->add_option("--seed", topts.train.seed, "weight-init seed");
    train->add_option("--epochs", topts.train.epochs, "training epochs");
    train->add_option("--lr", topts.train.learning_rate, "Adam learning rate");
    train->add_option("--threshold", topts.train.eval_threshold, "F1 binarization threshold");
    train->add_option("--steps-per-epoch", topts.train.steps_per_epoch,
                      "optimizer steps per epoch");
    train->add_option("--hidden", topts.hidden, "hidden channel width");
    CLI::Option* tsnap = train->add_option("--snapshot-epochs", topts.snapshot_epochs,
                                           "epochs whose prediction maps to save as PGM")
                             ->delimiter(',');
    train->add_option("--out", topts.out, "output directory");
    train->add_flag("--reproducible", topts.reproducible,
                    "assert byte-stable outputs (runs are deterministic either way)");

    BenchOpts bopts;
    CLI::App* bench = app.add_subcommand(
        "bench", "run the full seeded multi-trial comparison and export reports");
    bench->add_option("--scene", bopts.scene_dir,
                      "scene directory from gen-scene (default: built-in scene)");
    bench->add_option("--models", bopts.models, "comma-separated model kinds")->delimiter(',');
    bench->add_option("--trials", bopts.cfg.n_trials, "trials per model kind");
    bench->add_option("--seed", bopts.cfg.base_seed, "base seed; trial seeds derive from it");
    bench->add_option("--jobs", bopts.cfg.jobs, "worker threads");
    bench->add_option("--epochs", bopts.cfg.train.epochs, "training epochs per trial");
    bench->add_option("--lr", bopts.cfg.train.learning_rate, "Adam learning rate");
    bench->add_option("--threshold", bopts.cfg.train.eval_threshold,
                      "F1 binarization threshold");
    bench->add_option("--hidden", bopts.cfg.model.hidden_channels, "hidden channel width");
    CLI::Option* bsnap = bench->add_option("--snapshot-epochs", bopts.snapshot_epochs,
                                           "epochs whose prediction maps to save as PGM")
                             ->delimiter(',');
    bench->add_option("--snapshot-trial", bopts.cfg.snapshot_trial,
                      "trial index whose predictions are snapshotted");
    bench->add_option("--out", bopts.out, "output directory");
    bench->add_flag("--reproducible", bopts.cfg.reproducible,
                    "assert byte-stable outputs (runs are deterministic either way)");

    ReportOpts ropts;
    CLI::App* report =
        app.add_subcommand("report", "recompute aggregates and plots from a raw CSV");
    report->add_option("--raw", ropts.raw, "raw per-epoch CSV from a previous bench run")
        ->required();
    report->add_option("--out", ropts.out, "output directory");

    GradcheckOpts kopts;
    CLI::App* gradcheck = app.add_subcommand(
        "gradcheck", "compare analytic gradients against central finite differences");
    gradcheck->add_option("--model", kopts.model, "model kind");
    gradcheck->add_option("--size", kopts.size, "probe image side length (2..16)");
    gradcheck->add_option("--seed", kopts.seed, "probe seed");
    gradcheck->add_option("--corrupt", kopts.corrupt,
                          "perturb this group's analytic gradient (negative control)")
        ->group("");  // test hook, hidden from --help

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message and the --help hint
        return kExitUsage;
    }
    topts.snapshots_given = tsnap->count() > 0;
    bopts.snapshots_given = bsnap->count() > 0;

    try {
        if (gen->parsed()) return run_gen_scene(gopts);
        if (train->parsed()) return run_train(topts);
        if (bench->parsed()) return run_bench(bopts);
        if (report->parsed()) return run_report(ropts);
        if (gradcheck->parsed()) return run_gradcheck(kopts);
    } catch (const NumericFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitUsage;  // unreachable: a subcommand is required
}

}  // namespace flearn
