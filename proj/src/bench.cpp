#include "flearn/bench.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "flearn/metrics.hpp"
#include "flearn/pgm.hpp"
#include "flearn/rng.hpp"
#include "flearn/version.hpp"

namespace flearn {

void BenchmarkConfig::validate() const {
    if (kinds.empty()) throw std::invalid_argument("bench: need at least one model kind");
    if (n_trials < 1) throw std::invalid_argument("bench: n_trials must be >= 1");
    if (jobs < 1) throw std::invalid_argument("bench: jobs must be >= 1");
    if (snapshot_trial < 0 || snapshot_trial >= n_trials) {
        throw std::invalid_argument("bench: snapshot trial outside [0, n_trials)");
    }
    TrainConfig t = train;
    t.snapshot_epochs = snapshot_epochs;
    t.validate();
    scene.validate();
}

BenchmarkReport run_benchmark(const BenchmarkConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();
    const FragmentScene scene = make_scene(cfg.scene);

    BenchmarkReport report;
    report.config = cfg;
    report.results.resize(cfg.kinds.size());
    for (std::size_t ki = 0; ki < cfg.kinds.size(); ++ki) {
        report.results[ki].kind = cfg.kinds[ki];
        report.results[ki].trials.resize(cfg.n_trials);
    }

    struct Task {
        std::size_t kind_index;
        int trial;
    };
    std::vector<Task> tasks;
    tasks.reserve(cfg.kinds.size() * static_cast<std::size_t>(cfg.n_trials));
    for (std::size_t ki = 0; ki < cfg.kinds.size(); ++ki) {
        for (int t = 0; t < cfg.n_trials; ++t) tasks.push_back({ki, t});
    }

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mu;
    std::exception_ptr first_error;
    std::mutex error_mu;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task task = tasks[i];
            try {
                ModelConfig mc = cfg.model;
                mc.kind = cfg.kinds[task.kind_index];
                TrainConfig tc = cfg.train;
                tc.seed = trial_seed(cfg.base_seed, task.trial);
                tc.snapshot_epochs =
                    task.trial == cfg.snapshot_trial ? cfg.snapshot_epochs : std::vector<int>{};
                const auto t0 = std::chrono::steady_clock::now();
                EpochSeries series = train_one_trial(mc, scene, tc);
                const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;

                TrialResult& slot = report.results[task.kind_index].trials[task.trial];
                slot.trial = task.trial;
                slot.seed = tc.seed;
                slot.series = std::move(series);
                slot.wall_seconds = dt.count();
                const std::size_t finished = done.fetch_add(1) + 1;
                if (progress) {
                    std::ostringstream line;
                    line << "[" << finished << "/" << tasks.size() << "] "
                         << to_string(mc.kind) << " trial " << task.trial;
                    if (slot.series.diverged()) {
                        line << " DIVERGED at epoch " << slot.series.diverged_at;
                    } else {
                        line << " f1=" << slot.series.epochs.back().f1;
                    }
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), " (%.1fs)", dt.count());
                    line << buf;
                    std::lock_guard<std::mutex> lock(progress_mu);
                    progress(line.str());
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int n_threads = std::min<std::size_t>(cfg.jobs, tasks.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    compute_aggregates(report);
    const std::chrono::duration<double> total = std::chrono::steady_clock::now() - t_start;
    report.total_wall_seconds = total.count();
    return report;
}

void compute_aggregates(BenchmarkReport& report) {
    report.aggregates.clear();
    for (const KindResults& kr : report.results) {
        KindAggregate agg;
        agg.kind = kr.kind;
        // A trial counts only when it ran the full epoch range; divergence
        // truncates the series (and reloaded CSVs carry no explicit flag).
        std::size_t epochs = 0;
        for (const TrialResult& t : kr.trials) {
            if (!t.series.diverged()) epochs = std::max(epochs, t.series.epochs.size());
        }
        auto complete = [epochs](const TrialResult& t) {
            return !t.series.diverged() && t.series.epochs.size() == epochs;
        };
        for (const TrialResult& t : kr.trials) {
            if (!complete(t)) ++agg.divergent_trials;
        }
        agg.epochs.resize(epochs);
        for (std::size_t e = 0; e < epochs; ++e) {
            EpochAggregate& ea = agg.epochs[e];
            ea.epoch = static_cast<int>(e) + 1;
            double sf = 0, sp = 0, sr = 0;
            int n = 0;
            for (const TrialResult& t : kr.trials) {
                if (!complete(t)) continue;
                const EpochRecord& rec = t.series.epochs[e];
                sf += rec.f1;
                sp += rec.precision;
                sr += rec.recall;
                ++n;
            }
            ea.n = n;
            if (n == 0) continue;
            ea.f1_mean = sf / n;
            ea.precision_mean = sp / n;
            ea.recall_mean = sr / n;
            if (n >= 2) {
                double vf = 0, vp = 0, vr = 0;
                for (const TrialResult& t : kr.trials) {
                    if (!complete(t)) continue;
                    const EpochRecord& rec = t.series.epochs[e];
                    vf += (rec.f1 - ea.f1_mean) * (rec.f1 - ea.f1_mean);
                    vp += (rec.precision - ea.precision_mean) * (rec.precision - ea.precision_mean);
                    vr += (rec.recall - ea.recall_mean) * (rec.recall - ea.recall_mean);
                }
                ea.f1_std = std::sqrt(vf / (n - 1));
                ea.precision_std = std::sqrt(vp / (n - 1));
                ea.recall_std = std::sqrt(vr / (n - 1));
            }
        }
        report.aggregates.push_back(std::move(agg));
    }
}

namespace {

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

[[noreturn]] void io_fail(const std::filesystem::path& path, const std::string& why) {
    throw std::runtime_error("bench: " + path.string() + ": " + why);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
    if (!out) io_fail(path, "cannot open for writing");
    return out;
}

}  // namespace

void export_raw_csv(const BenchmarkReport& report, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "trial_seed,model_kind,epoch,loss,precision,recall,f1\n";
    for (const KindResults& kr : report.results) {
        const std::string kind = to_string(kr.kind);
        for (const TrialResult& t : kr.trials) {
            for (const EpochRecord& rec : t.series.epochs) {
                out << t.seed << ',' << kind << ',' << rec.epoch << ',' << fmt6(rec.loss) << ','
                    << fmt6(rec.precision) << ',' << fmt6(rec.recall) << ',' << fmt6(rec.f1)
                    << '\n';
            }
        }
    }
    if (!out) io_fail(path, "write failed");
}

void export_aggregate_csv(const BenchmarkReport& report, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "model_kind,epoch,f1_mean,f1_std,precision_mean,precision_std,recall_mean,"
           "recall_std,n\n";
    for (const KindAggregate& agg : report.aggregates) {
        const std::string kind = to_string(agg.kind);
        for (const EpochAggregate& ea : agg.epochs) {
            out << kind << ',' << ea.epoch << ',' << fmt6(ea.f1_mean) << ',' << fmt6(ea.f1_std)
                << ',' << fmt6(ea.precision_mean) << ',' << fmt6(ea.precision_std) << ','
                << fmt6(ea.recall_mean) << ',' << fmt6(ea.recall_std) << ',' << ea.n << '\n';
        }
    }
    if (!out) io_fail(path, "write failed");
}

void export_csv(const BenchmarkReport& report, const std::filesystem::path& raw_path,
                const std::filesystem::path& aggregate_path) {
    export_raw_csv(report, raw_path);
    export_aggregate_csv(report, aggregate_path);
}

namespace {

// Chart geometry, fixed so output bytes are stable.
constexpr double kCanvasW = 800, kCanvasH = 500;
constexpr double kPlotL = 60, kPlotT = 40, kPlotR = 640, kPlotB = 450;

const char* kind_color(ModelKind kind) {
    switch (kind) {
        case ModelKind::BConv: return "#1f77b4";
        case ModelKind::FLearn: return "#d62728";
        case ModelKind::ConvCasV1: return "#2ca02c";
        case ModelKind::ConvCasV2: return "#9467bd";
        case ModelKind::ConvParV1: return "#ff7f0e";
        case ModelKind::ConvParV2: return "#8c564b";
    }
    return "#000000";
}

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

void export_curves_svg(const BenchmarkReport& report, const std::filesystem::path& path) {
    int epochs = 0;
    for (const KindAggregate& agg : report.aggregates) {
        epochs = std::max(epochs, static_cast<int>(agg.epochs.size()));
    }
    if (report.aggregates.empty() || epochs == 0) {
        throw std::invalid_argument("svg export: report holds no epochs");
    }
    const auto x_of = [epochs](int epoch) {
        if (epochs == 1) return (kPlotL + kPlotR) / 2.0;
        return kPlotL + (kPlotR - kPlotL) * (epoch - 1) / static_cast<double>(epochs - 1);
    };
    const auto y_of = [](double f1) { return kPlotB - (kPlotB - kPlotT) * f1; };

    std::ofstream out = open_out(path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kCanvasW << "\" height=\""
        << kCanvasH << "\" viewBox=\"0 0 " << kCanvasW << " " << kCanvasH << "\">\n";
    out << "  <rect x=\"0\" y=\"0\" width=\"" << kCanvasW << "\" height=\"" << kCanvasH
        << "\" fill=\"white\"/>\n";
    out << "  <text x=\"" << (kPlotL + kPlotR) / 2
        << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
           "mean F1 per epoch</text>\n";
    // Horizontal gridlines at F1 = 0, 0.25, ..., 1.
    for (int i = 0; i <= 4; ++i) {
        const double f1 = i * 0.25;
        const double y = y_of(f1);
        out << "  <line x1=\"" << fmt4(kPlotL) << "\" y1=\"" << fmt4(y) << "\" x2=\""
            << fmt4(kPlotR) << "\" y2=\"" << fmt4(y)
            << "\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n";
        out << "  <text x=\"" << fmt4(kPlotL - 8) << "\" y=\"" << fmt4(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << fmt4(f1)
            << "</text>\n";
    }
    // X ticks at epoch 1 and every multiple of 10.
    for (int e = 1; e <= epochs; ++e) {
        if (e != 1 && e % 10 != 0) continue;
        const double x = x_of(e);
        out << "  <line x1=\"" << fmt4(x) << "\" y1=\"" << fmt4(kPlotB) << "\" x2=\"" << fmt4(x)
            << "\" y2=\"" << fmt4(kPlotB + 5) << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
        out << "  <text x=\"" << fmt4(x) << "\" y=\"" << fmt4(kPlotB + 20)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << e
            << "</text>\n";
    }
    out << "  <text x=\"" << (kPlotL + kPlotR) / 2 << "\" y=\"" << fmt4(kPlotB + 38)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">epoch</text>\n";
    out << "  <line x1=\"" << fmt4(kPlotL) << "\" y1=\"" << fmt4(kPlotT) << "\" x2=\""
        << fmt4(kPlotL) << "\" y2=\"" << fmt4(kPlotB)
        << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    out << "  <line x1=\"" << fmt4(kPlotL) << "\" y1=\"" << fmt4(kPlotB) << "\" x2=\""
        << fmt4(kPlotR) << "\" y2=\"" << fmt4(kPlotB)
        << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

    for (const KindAggregate& agg : report.aggregates) {
        if (agg.epochs.empty()) continue;
        out << "  <polyline fill=\"none\" stroke=\"" << kind_color(agg.kind)
            << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < agg.epochs.size(); ++i) {
            if (i) out << ' ';
            out << fmt4(x_of(agg.epochs[i].epoch)) << ',' << fmt4(y_of(agg.epochs[i].f1_mean));
        }
        out << "\"/>\n";
    }

    // Legend, config order, top-right.
    double ly = kPlotT + 10;
    for (const KindAggregate& agg : report.aggregates) {
        out << "  <line x1=\"" << fmt4(kPlotR + 16) << "\" y1=\"" << fmt4(ly) << "\" x2=\""
            << fmt4(kPlotR + 44) << "\" y2=\"" << fmt4(ly) << "\" stroke=\""
            << kind_color(agg.kind) << "\" stroke-width=\"2\"/>\n";
        out << "  <text x=\"" << fmt4(kPlotR + 50) << "\" y=\"" << fmt4(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << to_string(agg.kind)
            << "</text>\n";
        ly += 20;
    }
    out << "</svg>\n";
    if (!out) io_fail(path, "write failed");
}

void export_snapshots(const BenchmarkReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const KindResults& kr : report.results) {
        if (report.config.snapshot_trial >= static_cast<int>(kr.trials.size())) {
            throw std::invalid_argument("snapshots: snapshot trial missing from results");
        }
        const TrialResult& trial = kr.trials[report.config.snapshot_trial];
        for (int epoch : report.config.snapshot_epochs) {
            const auto it = std::find_if(
                trial.series.snapshots.begin(), trial.series.snapshots.end(),
                [epoch](const auto& s) { return s.first == epoch; });
            if (it == trial.series.snapshots.end()) {
                throw std::invalid_argument("snapshots: epoch " + std::to_string(epoch) +
                                            " not recorded for " + to_string(kr.kind) +
                                            (trial.series.diverged() ? " (trial diverged)" : ""));
            }
            const Tensor& prob = it->second;
            PgmImage img;
            img.height = prob.dim(1);
            img.width = prob.dim(2);
            img.pixels.resize(prob.size());
            for (std::size_t i = 0; i < prob.size(); ++i) {
                // round half up; probabilities are within [0,1]
                img.pixels[i] = static_cast<unsigned char>(
                    std::min(255.0, std::floor(prob[i] * 255.0 + 0.5)));
            }
            char suffix[16];
            std::snprintf(suffix, sizeof(suffix), "_epoch_%03d.pgm", epoch);
            write_pgm(dir / (to_string(kr.kind) + suffix), img);
        }
    }
}

void write_run_manifest(const BenchmarkReport& report, const std::filesystem::path& path) {
    using nlohmann::json;
    const BenchmarkConfig& cfg = report.config;
    json m;
    m["version"] = kVersion;
    std::vector<std::string> kinds;
    for (ModelKind k : cfg.kinds) kinds.push_back(to_string(k));
    m["config"]["kinds"] = kinds;
    m["config"]["n_trials"] = cfg.n_trials;
    m["config"]["base_seed"] = cfg.base_seed;
    m["config"]["jobs"] = cfg.jobs;
    m["config"]["reproducible"] = cfg.reproducible;
    m["config"]["snapshot_trial"] = cfg.snapshot_trial;
    m["config"]["snapshot_epochs"] = cfg.snapshot_epochs;
    m["config"]["train"] = {{"learning_rate", cfg.train.learning_rate},
                            {"epochs", cfg.train.epochs},
                            {"beta1", cfg.train.beta1},
                            {"beta2", cfg.train.beta2},
                            {"adam_eps", cfg.train.adam_eps},
                            {"eval_threshold", cfg.train.eval_threshold},
                            {"steps_per_epoch", cfg.train.steps_per_epoch}};
    m["config"]["scene"] = {{"image_size", cfg.scene.image_size},
                            {"circle", {{"cx", cfg.scene.circle_cx},
                                        {"cy", cfg.scene.circle_cy},
                                        {"r", cfg.scene.circle_r}}},
                            {"square", {{"x", cfg.scene.square_x},
                                        {"y", cfg.scene.square_y},
                                        {"side", cfg.scene.square_side}}},
                            {"grid_rows", cfg.scene.grid_rows},
                            {"grid_cols", cfg.scene.grid_cols},
                            {"overlap", cfg.scene.overlap},
                            {"stroke", to_string(cfg.scene.stroke)},
                            {"thickness", cfg.scene.thickness}};
    m["config"]["model"] = {{"hidden_channels", cfg.model.hidden_channels},
                            {"use_activation", cfg.model.use_activation},
                            {"use_norm", cfg.model.use_norm},
                            {"par_merge", cfg.model.par_merge == ParMerge::Sum ? "sum" : "concat"}};
    m["total_wall_seconds"] = report.total_wall_seconds;
    json trials = json::array();
    for (const KindResults& kr : report.results) {
        for (const TrialResult& t : kr.trials) {
            json row;
            row["kind"] = to_string(kr.kind);
            row["trial"] = t.trial;
            row["seed"] = t.seed;
            row["wall_seconds"] = t.wall_seconds;
            if (t.series.diverged()) row["diverged_at"] = t.series.diverged_at;
            trials.push_back(std::move(row));
        }
    }
    m["trials"] = std::move(trials);
    std::ofstream out = open_out(path);
    out << m.dump(2) << "\n";
    if (!out) io_fail(path, "write failed");
}

std::vector<KindResults> load_raw_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) io_fail(path, "cannot open");
    std::string line;
    if (!std::getline(in, line) || line != "trial_seed,model_kind,epoch,loss,precision,recall,f1") {
        io_fail(path, "unexpected raw CSV header");
    }
    std::vector<KindResults> results;
    auto kind_slot = [&results](ModelKind kind) -> KindResults& {
        for (KindResults& kr : results) {
            if (kr.kind == kind) return kr;
        }
        results.push_back(KindResults{kind, {}});
        return results.back();
    };
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::array<std::string, 7> fields;
        std::size_t start = 0, fi = 0;
        for (; fi < 6; ++fi) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) break;
            fields[fi] = line.substr(start, comma - start);
            start = comma + 1;
        }
        if (fi != 6 || line.find(',', start) != std::string::npos) {
            io_fail(path, "line " + std::to_string(line_no) + ": expected 7 fields");
        }
        fields[6] = line.substr(start);
        try {
            const std::uint64_t seed = std::stoull(fields[0]);
            const ModelKind kind = parse_model_kind(fields[1]);
            EpochRecord rec;
            rec.epoch = std::stoi(fields[2]);
            rec.loss = std::stod(fields[3]);
            rec.precision = std::stod(fields[4]);
            rec.recall = std::stod(fields[5]);
            rec.f1 = std::stod(fields[6]);
            KindResults& kr = kind_slot(kind);
            // A new trial starts when the seed changes or the epoch resets.
            if (kr.trials.empty() || kr.trials.back().seed != seed ||
                (!kr.trials.back().series.epochs.empty() &&
                 rec.epoch <= kr.trials.back().series.epochs.back().epoch)) {
                TrialResult t;
                t.trial = static_cast<int>(kr.trials.size());
                t.seed = seed;
                kr.trials.push_back(std::move(t));
            }
            kr.trials.back().series.epochs.push_back(rec);
        } catch (const std::logic_error& e) {
            io_fail(path, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return results;
}

}  // namespace flearn
