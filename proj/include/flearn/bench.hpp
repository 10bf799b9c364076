#pragma once

#include <filesystem>
#include <functional>

#include "flearn/train.hpp"

namespace flearn {

struct BenchmarkConfig {
    std::vector<ModelKind> kinds = all_model_kinds();
    int n_trials = 100;
    std::uint64_t base_seed = 42;
    TrainConfig train;                            // per-trial seed is derived, not taken from here
    SceneConfig scene;
    ModelConfig model;                            // kind/in_channels/image_size overridden per task
    std::vector<int> snapshot_epochs = {1, 10, 25, 50};
    int snapshot_trial = 0;
    int jobs = 1;
    bool reproducible = false;

    void validate() const;
};

struct TrialResult {
    int trial = 0;
    std::uint64_t seed = 0;
    EpochSeries series;
    double wall_seconds = 0;
};

struct KindResults {
    ModelKind kind = ModelKind::BConv;
    std::vector<TrialResult> trials;  // trial index order
};

struct EpochAggregate {
    int epoch = 0;
    double f1_mean = 0, f1_std = 0;
    double precision_mean = 0, precision_std = 0;
    double recall_mean = 0, recall_std = 0;
    int n = 0;  // non-divergent trials aggregated
};

struct KindAggregate {
    ModelKind kind = ModelKind::BConv;
    std::vector<EpochAggregate> epochs;
    int divergent_trials = 0;
};

struct BenchmarkReport {
    BenchmarkConfig config;
    std::vector<KindResults> results;      // config kind order
    std::vector<KindAggregate> aggregates; // derived from results
    double total_wall_seconds = 0;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Trial i trains every kind from the same derived seed
/// trial_seed(base_seed, i). Tasks fan out over `jobs` worker threads;
/// results land in slots keyed by (kind, trial), so the report content does
/// not depend on scheduling. Divergent trials stay in `results` (their
/// partial series) but are excluded from aggregates and counted.
BenchmarkReport run_benchmark(const BenchmarkConfig& cfg, const ProgressFn& progress = nullptr);

/// Mean and sample standard deviation (n-1; 0 when n < 2) per epoch across
/// non-divergent trials, in trial order. Recomputable bitwise from the raw
/// CSV because trial metrics are canonicalized to its 6-decimal precision.
void compute_aggregates(BenchmarkReport& report);

void export_raw_csv(const BenchmarkReport& report, const std::filesystem::path& path);
void export_aggregate_csv(const BenchmarkReport& report, const std::filesystem::path& path);

/// Writes both CSVs; equivalent to the two single-file exporters above.
void export_csv(const BenchmarkReport& report, const std::filesystem::path& raw_path,
                const std::filesystem::path& aggregate_path);

/// Fixed-canvas (800x500) SVG line chart of mean F1 per epoch, one polyline
/// per kind in config order; coordinates printed with 4 decimals.
void export_curves_svg(const BenchmarkReport& report, const std::filesystem::path& path);

/// One PGM per (kind, snapshot epoch) from the snapshot trial's prediction,
/// probability scaled by 255 and rounded half-up:
/// <kind>_epoch_<zero-padded>.pgm.
void export_snapshots(const BenchmarkReport& report, const std::filesystem::path& dir);

void write_run_manifest(const BenchmarkReport& report, const std::filesystem::path& path);

/// Parses a raw CSV back into per-kind trial series (kind order and trial
/// order as they appear in the file) for re-aggregation and re-export. Wall
/// times and snapshots do not round-trip; seeds and metrics do.
std::vector<KindResults> load_raw_csv(const std::filesystem::path& path);

}  // namespace flearn
