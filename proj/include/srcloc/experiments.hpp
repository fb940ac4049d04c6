#pragma once

#include "srcloc/data_io.hpp"
#include "srcloc/graph.hpp"
#include "srcloc/metrics.hpp"
#include "srcloc/solver.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace srcloc {

struct SensorGraphParams {
    Index nodes = 250;
    Index k = 10;
    Sigma2 sigma2 = kAutoSigma2;
};

// Uniform points in the unit square joined into a k-NN graph. Disconnected
// draws are resampled from fresh substreams, up to 100 attempts.
Graph generate_sensor_graph(Index n, Index k, std::uint64_t seed, Sigma2 sigma2 = kAutoSigma2);

struct SpikePair {
    Eigen::VectorXd x;  // unit spikes at first and second
    Index first;
    Index second;
};

// Picks an ordered node pair uniformly among pairs exactly h hops apart.
// Throws InfeasibleDistance when no such pair exists.
SpikePair sample_spike_pair(const Graph& g, int h, std::uint64_t seed);
SpikePair sample_spike_pair(const HopMatrix& hops, int h, std::uint64_t seed);

// b + w, w ~ N(0, s^2) i.i.d. with s = ||b|| / (sqrt(n) 10^(snr_db/20)).
Eigen::VectorXd add_noise_snr(const Eigen::VectorXd& b, double snr_db, std::uint64_t seed);

struct ExperimentGrid {
    std::vector<int> h_values;
    std::vector<double> theta_values;
    std::vector<double> snr_db_values;  // +inf means noiseless
    std::vector<Index> k_values;
    int trials = 32;
    std::uint64_t seed = 1;

    void validate() const;
};

struct GridOptions {
    SensorGraphParams graph;
    // Initial theta for joint solves; the cell's true theta when absent.
    std::optional<double> theta_init;
};

enum class TrialStatus { Ok, Skipped, Failed };
std::string to_string(TrialStatus status);

struct TrialRecord {
    double theta = 0.0;
    int h = 0;
    double snr_db = 0.0;
    int trial = 0;
    double hop_error = 0.0;
    TrialStatus status = TrialStatus::Ok;
    std::string detail;
    double theta_estimate = 0.0;
    int outer_iterations = 0;
    bool converged = false;
    double final_energy = 0.0;
};

struct CellSummary {
    double theta = 0.0;
    int h = 0;
    double snr_db = 0.0;
    int trials = 0;
    int finite = 0;    // records aggregated into mean/std
    int infinite = 0;  // zero recoveries, reported separately
    int skipped = 0;
    int failed = 0;
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation (n - 1)
};

struct GridResult {
    std::vector<TrialRecord> records;  // sorted by (h, theta, snr_db, trial)
    std::vector<CellSummary> cells;
};

// Aggregates records into per-cell summaries (order follows the records).
std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records);

// Two unit spikes h hops apart on a fresh sensor graph per (trial, h),
// diffused with each theta, noiseless.
GridResult run_distance_theta_grid(const ExperimentGrid& grid, const SolverConfig& cfg, const GridOptions& opts = {});

// Spikes h hops apart (h_values, default {6}) with Gaussian noise at each
// SNR. Graph and spikes of a trial are shared with the distance grid.
GridResult run_snr_theta_grid(const ExperimentGrid& grid, const SolverConfig& cfg, const GridOptions& opts = {});

Table records_table(const std::vector<TrialRecord>& records);
Table summary_table(const std::vector<CellSummary>& cells);

// Raw records at `path`; per-cell summary next to it as <stem>.summary<ext>.
void write_grid(const GridResult& result, const std::filesystem::path& path, TableFormat format);
std::filesystem::path summary_path_for(const std::filesystem::path& path);

// Graph construction for datasets: coordinates give Euclidean k-NN,
// distances a k-NN over the matrix. With `road_graph` the distance file holds
// road segment lengths and is closed under shortest paths first.
Graph build_dataset_graph(const Dataset& ds, Index k, Sigma2 sigma2, bool road_graph = false,
                          bool warn_disconnected = true);

struct OutlierSelection {
    OutlierMode mode = OutlierMode::None;
    std::optional<Index> node;  // argmax(b) when absent
};

struct KSweepOptions {
    std::vector<Index> k_values;
    double theta = 1.0;  // fixed diffusion time
    OutlierSelection outlier;
    Sigma2 sigma2 = kAutoSigma2;
    bool road_graph = false;
    std::vector<Index> sources;  // ground truth for scoring
};

struct KSweepRecord {
    Index k = 0;
    OutlierMode mode = OutlierMode::None;
    std::optional<Index> removed_node;
    double hop_error = 0.0;
    TrialStatus status = TrialStatus::Ok;
    std::string detail;
    std::optional<Index> recovered_peak;
    int outer_iterations = 0;
    bool converged = false;
    double final_energy = 0.0;
};

std::vector<KSweepRecord> run_k_sweep(const Dataset& ds, const SolverConfig& cfg, const KSweepOptions& opts);
Table k_sweep_table(const std::vector<KSweepRecord>& records, const Dataset& ds);

struct LocalizeOptions {
    Index k = 10;
    Sigma2 sigma2 = kAutoSigma2;
    bool road_graph = false;
    double theta_init = 1.0;  // ignored when cfg.fix_theta
    OutlierSelection outlier;
    std::vector<Index> sources;  // optional ground truth
};

struct LocalizeResult {
    Graph graph;
    Observation observation;
    std::optional<Index> removed_node;
    SolveResult solve;
    std::optional<HopErrorReport> report;
};

LocalizeResult localize(const Dataset& ds, const SolverConfig& cfg, const LocalizeOptions& opts);

struct PlantedDatasetParams {
    Index nodes = 200;
    Index k = 10;
    double theta = 1.0;
    int sources = 1;
    double snr_db = std::numeric_limits<double>::infinity();
    double invalid_fraction = 0.0;
    std::uint64_t seed = 1;
};

struct PlantedDataset {
    Dataset dataset;
    std::vector<Index> sources;
};

// Sensor-graph points with unit spikes at random sources, heat-diffused and
// optionally noised; a fraction of samples can be marked invalid.
PlantedDataset generate_planted_dataset(const PlantedDatasetParams& params);

// Writes points.csv, signal.csv and sources.csv into `dir`.
void write_dataset(const Dataset& ds, const std::vector<Index>& sources, const std::filesystem::path& dir);

}  // namespace srcloc
