#include "srcloc/experiments.hpp"

#include "srcloc/diffusion.hpp"
#include "srcloc/error.hpp"
#include "srcloc/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace srcloc {
namespace {

constexpr int kMaxGraphAttempts = 100;

// Stream tags; keep stable, they define the experiment streams.
constexpr std::uint64_t kTagGraph = 1;
constexpr std::uint64_t kTagSpikes = 2;
constexpr std::uint64_t kTagNoise = 3;
constexpr std::uint64_t kTagPlantedGraph = 4;
constexpr std::uint64_t kTagPlantedSources = 5;
constexpr std::uint64_t kTagPlantedNoise = 6;
constexpr std::uint64_t kTagPlantedInvalid = 7;

struct TrialSetup {
    Graph graph;
    SpectralDecomposition decomp;
    SpikePair spikes;
};

std::optional<TrialSetup> prepare_trial(const GridOptions& opts, std::uint64_t seed, int trial, int h,
                                        TrialRecord& failure) {
    try {
        Graph g = generate_sensor_graph(opts.graph.nodes, opts.graph.k,
                                        derive_seed(seed, {kTagGraph, static_cast<std::uint64_t>(trial),
                                                           static_cast<std::uint64_t>(h)}),
                                        opts.graph.sigma2);
        SpikePair spikes = sample_spike_pair(
            g, h, derive_seed(seed, {kTagSpikes, static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(h)}));
        SpectralDecomposition decomp = spectral_decomposition(normalized_laplacian(g));
        return TrialSetup{std::move(g), std::move(decomp), std::move(spikes)};
    } catch (const Error& e) {
        failure.status = e.category() == ErrorCategory::InfeasibleDistance ? TrialStatus::Skipped : TrialStatus::Failed;
        failure.detail = std::string(category_name(e.category())) + ": " + e.what();
        failure.hop_error = std::numeric_limits<double>::quiet_NaN();
        return std::nullopt;
    }
}

void solve_trial(const TrialSetup& setup, const SolverConfig& cfg, const GridOptions& opts, const Eigen::VectorXd& b,
                 TrialRecord& rec) {
    try {
        const double theta_init =
            cfg.fix_theta ? rec.theta : std::clamp(opts.theta_init.value_or(rec.theta), cfg.theta_min, cfg.theta_max);
        const SolveResult res = alternating_solve(Observation(b), cfg, setup.decomp, {}, theta_init);
        rec.hop_error = hop_error(setup.spikes.x, res.x, setup.graph).total;
        rec.theta_estimate = res.theta;
        rec.outer_iterations = res.outer_iterations;
        rec.converged = res.converged;
        rec.final_energy = res.energy_trace.back().energy;
        rec.status = TrialStatus::Ok;
    } catch (const Error& e) {
        rec.status = TrialStatus::Failed;
        rec.detail = std::string(category_name(e.category())) + ": " + e.what();
        rec.hop_error = std::numeric_limits<double>::quiet_NaN();
    }
}

void sort_records(std::vector<TrialRecord>& records) {
    std::stable_sort(records.begin(), records.end(), [](const TrialRecord& a, const TrialRecord& b) {
        return std::tie(a.h, a.theta, a.snr_db, a.trial) < std::tie(b.h, b.theta, b.snr_db, b.trial);
    });
}

GridResult run_grid(const ExperimentGrid& grid, const SolverConfig& cfg, const GridOptions& opts,
                    const std::vector<int>& h_values, const std::vector<double>& snr_values) {
    grid.validate();
    cfg.validate();
    GridResult out;
    for (int h : h_values) {
        for (int trial = 0; trial < grid.trials; ++trial) {
            TrialRecord base;
            base.h = h;
            base.trial = trial;
            const auto setup = prepare_trial(opts, grid.seed, trial, h, base);
            for (double theta : grid.theta_values) {
                for (double snr : snr_values) {
                    TrialRecord rec = base;
                    rec.theta = theta;
                    rec.snr_db = snr;
                    if (!setup) {
                        out.records.push_back(std::move(rec));
                        continue;
                    }
                    try {
                        Eigen::VectorXd b = apply_diffusion(setup->decomp, theta, setup->spikes.x);
                        if (std::isfinite(snr)) {
                            b = add_noise_snr(b, snr,
                                              derive_seed(grid.seed, {kTagNoise, static_cast<std::uint64_t>(trial),
                                                                      static_cast<std::uint64_t>(h), key_of(theta),
                                                                      key_of(snr)}));
                        }
                        solve_trial(*setup, cfg, opts, b, rec);
                    } catch (const Error& e) {
                        rec.status = TrialStatus::Failed;
                        rec.detail = std::string(category_name(e.category())) + ": " + e.what();
                        rec.hop_error = std::numeric_limits<double>::quiet_NaN();
                    }
                    out.records.push_back(std::move(rec));
                }
            }
        }
    }
    sort_records(out.records);
    out.cells = summarize(out.records);
    return out;
}

std::string id_for(Index i, Index n) {
    const auto width = std::to_string(std::max<Index>(n - 1, 0)).size();
    std::string digits = std::to_string(i);
    return "p" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

Observation apply_outlier(const Observation& obs, const OutlierSelection& sel, const Graph& g,
                          std::optional<Index>& removed) {
    if (sel.mode == OutlierMode::None) return obs;
    const Index node = sel.node.value_or(argmax_node(obs.b()));
    removed = node;
    return remove_outlier(obs, node, sel.mode, g);
}

Eigen::VectorXd reference_signal(const std::vector<Index>& sources, Index n) {
    if (sources.empty()) throw Error(ErrorCategory::InvalidInput, "no ground-truth sources supplied");
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (Index s : sources) {
        if (s < 0 || s >= n) throw Error(ErrorCategory::InvalidInput, "source index out of range");
        x(s) = 1.0;
    }
    return x;
}

std::optional<Index> peak_of(const Eigen::VectorXd& x) {
    if (x.size() == 0 || !(x.cwiseAbs().maxCoeff() > 0.0)) return std::nullopt;
    return argmax_node(x.cwiseAbs());
}

}  // namespace

Graph generate_sensor_graph(Index n, Index k, std::uint64_t seed, Sigma2 sigma2) {
    if (n < 2) throw Error(ErrorCategory::InvalidParameter, "sensor graph needs at least 2 nodes");
    if (k < 1 || k >= n) throw Error(ErrorCategory::InvalidParameter, "k must satisfy 1 <= k < n");
    for (int attempt = 0; attempt < kMaxGraphAttempts; ++attempt) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(attempt)}));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Eigen::MatrixXd points(n, 2);
        for (Index i = 0; i < n; ++i) {
            points(i, 0) = unit(rng);
            points(i, 1) = unit(rng);
        }
        Graph g = build_knn_graph_from_points(points, k, sigma2, /*warn_disconnected=*/false);
        if (g.is_connected()) return g;
    }
    throw Error(ErrorCategory::GenerationFailure,
                "no connected sensor graph after " + std::to_string(kMaxGraphAttempts) + " attempts");
}

SpikePair sample_spike_pair(const HopMatrix& hops, int h, std::uint64_t seed) {
    if (h < 1) throw Error(ErrorCategory::InvalidParameter, "spike distance h must be >= 1");
    const Index n = hops.node_count();
    if (static_cast<Index>(hops.sources().size()) != n) {
        throw Error(ErrorCategory::InvalidInput, "spike sampling needs the full hop matrix");
    }
    std::uint64_t count = 0;
    for (Index r = 0; r < n; ++r)
        for (Index j = 0; j < n; ++j)
            if (hops.at(r, j) == h) ++count;
    if (count == 0) {
        throw Error(ErrorCategory::InfeasibleDistance, "no node pair at exactly " + std::to_string(h) + " hops");
    }
    Rng rng(seed);
    std::uniform_int_distribution<std::uint64_t> pick(0, count - 1);
    std::uint64_t target = pick(rng);
    for (Index r = 0; r < n; ++r) {
        for (Index j = 0; j < n; ++j) {
            if (hops.at(r, j) != h) continue;
            if (target-- == 0) {
                SpikePair out{Eigen::VectorXd::Zero(n), hops.sources()[static_cast<std::size_t>(r)], j};
                out.x(out.first) = 1.0;
                out.x(out.second) = 1.0;
                return out;
            }
        }
    }
    throw Error(ErrorCategory::InfeasibleDistance, "spike sampling failed");
}

SpikePair sample_spike_pair(const Graph& g, int h, std::uint64_t seed) {
    return sample_spike_pair(hop_distances(g), h, seed);
}

Eigen::VectorXd add_noise_snr(const Eigen::VectorXd& b, double snr_db, std::uint64_t seed) {
    if (std::isnan(snr_db)) throw Error(ErrorCategory::InvalidParameter, "SNR must not be NaN");
    const double norm = b.norm();
    if (!(norm > 0.0)) throw Error(ErrorCategory::InvalidInput, "cannot set an SNR for a zero signal");
    const double sigma = norm / (std::sqrt(static_cast<double>(b.size())) * std::pow(10.0, snr_db / 20.0));
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd out = b;
    for (Index i = 0; i < out.size(); ++i) out(i) += sigma * normal(rng);
    return out;
}

void ExperimentGrid::validate() const {
    if (trials < 1) throw Error(ErrorCategory::InvalidParameter, "trials must be >= 1");
    for (int h : h_values)
        if (h < 1) throw Error(ErrorCategory::InvalidParameter, "h values must be >= 1");
    for (double t : theta_values)
        if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorCategory::InvalidParameter, "theta values must be positive and finite");
    for (double s : snr_db_values)
        if (std::isnan(s) || s == -std::numeric_limits<double>::infinity())
            throw Error(ErrorCategory::InvalidParameter, "SNR values must be finite or +inf");
    for (Index k : k_values)
        if (k < 1) throw Error(ErrorCategory::InvalidParameter, "k values must be >= 1");
}

std::string to_string(TrialStatus status) {
    switch (status) {
        case TrialStatus::Ok: return "ok";
        case TrialStatus::Skipped: return "skipped";
        case TrialStatus::Failed: return "failed";
    }
    return "failed";
}

std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records) {
    std::vector<CellSummary> cells;
    std::vector<std::vector<double>> values;
    for (const auto& r : records) {
        if (cells.empty() || cells.back().h != r.h || cells.back().theta != r.theta || cells.back().snr_db != r.snr_db) {
            CellSummary c;
            c.theta = r.theta;
            c.h = r.h;
            c.snr_db = r.snr_db;
            cells.push_back(c);
            values.emplace_back();
        }
        auto& c = cells.back();
        ++c.trials;
        switch (r.status) {
            case TrialStatus::Skipped: ++c.skipped; break;
            case TrialStatus::Failed: ++c.failed; break;
            case TrialStatus::Ok:
                if (std::isfinite(r.hop_error)) {
                    values.back().push_back(r.hop_error);
                } else {
                    ++c.infinite;
                }
                break;
        }
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& v = values[i];
        auto& c = cells[i];
        c.finite = static_cast<int>(v.size());
        if (v.empty()) {
            c.mean = c.stddev = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        c.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double e : v) ss += (e - c.mean) * (e - c.mean);
        c.stddev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    }
    return cells;
}

GridResult run_distance_theta_grid(const ExperimentGrid& grid, const SolverConfig& cfg, const GridOptions& opts) {
    return run_grid(grid, cfg, opts, grid.h_values, {std::numeric_limits<double>::infinity()});
}

GridResult run_snr_theta_grid(const ExperimentGrid& grid, const SolverConfig& cfg, const GridOptions& opts) {
    const std::vector<int> hs = grid.h_values.empty() ? std::vector<int>{6} : grid.h_values;
    return run_grid(grid, cfg, opts, hs, grid.snr_db_values);
}

Table records_table(const std::vector<TrialRecord>& records) {
    Table t;
    t.columns = {"theta", "h", "trial", "hop_error", "snr_db", "status", "theta_estimate",
                 "outer_iterations", "converged", "final_energy", "detail"};
    for (const auto& r : records) {
        t.rows.push_back({r.theta, std::int64_t{r.h}, std::int64_t{r.trial}, r.hop_error, r.snr_db, to_string(r.status),
                          r.theta_estimate, std::int64_t{r.outer_iterations}, std::int64_t{r.converged ? 1 : 0},
                          r.final_energy, r.detail});
    }
    return t;
}

Table summary_table(const std::vector<CellSummary>& cells) {
    Table t;
    t.columns = {"theta", "h", "snr_db", "trials", "finite", "infinite", "skipped", "failed",
                 "mean_hop_error", "std_hop_error"};
    for (const auto& c : cells) {
        t.rows.push_back({c.theta, std::int64_t{c.h}, c.snr_db, std::int64_t{c.trials}, std::int64_t{c.finite},
                          std::int64_t{c.infinite}, std::int64_t{c.skipped}, std::int64_t{c.failed}, c.mean, c.stddev});
    }
    return t;
}

std::filesystem::path summary_path_for(const std::filesystem::path& path) {
    auto out = path;
    out.replace_filename(path.stem().string() + ".summary" + path.extension().string());
    return out;
}

void write_grid(const GridResult& result, const std::filesystem::path& path, TableFormat format) {
    write_results(records_table(result.records), path, format);
    write_results(summary_table(result.cells), summary_path_for(path), format);
}

Graph build_dataset_graph(const Dataset& ds, Index k, Sigma2 sigma2, bool road_graph, bool warn_disconnected) {
    if (ds.distances) {
        const Eigen::MatrixXd d = road_graph ? metric_shortest_paths(*ds.distances) : *ds.distances;
        if (!d.allFinite()) {
            throw Error(ErrorCategory::InvalidInput, "distance matrix has unreachable pairs; pass a connected road graph");
        }
        return build_knn_graph_from_distances(d, k, sigma2, warn_disconnected);
    }
    if (!ds.coords) throw Error(ErrorCategory::Schema, "dataset has neither coordinates nor distances");
    return build_knn_graph_from_points(*ds.coords, k, sigma2, warn_disconnected);
}

std::vector<KSweepRecord> run_k_sweep(const Dataset& ds, const SolverConfig& cfg_in, const KSweepOptions& opts) {
    SolverConfig cfg = cfg_in;
    cfg.fix_theta = true;
    cfg.validate();
    const Index n = ds.size();
    const Eigen::VectorXd x_ref = reference_signal(opts.sources, n);

    std::vector<KSweepRecord> out;
    for (Index k : opts.k_values) {
        KSweepRecord rec;
        rec.k = k;
        rec.mode = opts.outlier.mode;
        if (k < 1 || k >= n) {
            rec.status = TrialStatus::Skipped;
            rec.detail = "k must satisfy 1 <= k < n";
            rec.hop_error = std::numeric_limits<double>::quiet_NaN();
            out.push_back(std::move(rec));
            continue;
        }
        try {
            const Graph g = build_dataset_graph(ds, k, opts.sigma2, opts.road_graph);
            const Eigen::VectorXd b = ds.signal.all_valid() ? ds.signal.values : interpolate_invalid(ds.signal, g);
            const Observation obs = apply_outlier(Observation(b), opts.outlier, g, rec.removed_node);
            const auto decomp = spectral_decomposition(normalized_laplacian(g));
            const SolveResult res = alternating_solve(obs, cfg, decomp, {}, opts.theta);
            rec.hop_error = hop_error(x_ref, res.x, g).total;
            rec.recovered_peak = peak_of(res.x);
            rec.outer_iterations = res.outer_iterations;
            rec.converged = res.converged;
            rec.final_energy = res.energy_trace.back().energy;
        } catch (const Error& e) {
            rec.status = TrialStatus::Failed;
            rec.detail = std::string(category_name(e.category())) + ": " + e.what();
            rec.hop_error = std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(std::move(rec));
    }
    return out;
}

Table k_sweep_table(const std::vector<KSweepRecord>& records, const Dataset& ds) {
    Table t;
    t.columns = {"k", "outlier_mode", "removed_node", "hop_error", "status", "recovered_peak",
                 "outer_iterations", "converged", "final_energy", "detail"};
    const auto id = [&](const std::optional<Index>& i) -> Cell {
        return i ? Cell{ds.ids[static_cast<std::size_t>(*i)]} : Cell{std::string("NA")};
    };
    for (const auto& r : records) {
        t.rows.push_back({std::int64_t{r.k}, to_string(r.mode), id(r.removed_node), r.hop_error, to_string(r.status),
                          id(r.recovered_peak), std::int64_t{r.outer_iterations}, std::int64_t{r.converged ? 1 : 0},
                          r.final_energy, r.detail});
    }
    return t;
}

LocalizeResult localize(const Dataset& ds, const SolverConfig& cfg, const LocalizeOptions& opts) {
    cfg.validate();
    Graph g = build_dataset_graph(ds, opts.k, opts.sigma2, opts.road_graph);
    const Eigen::VectorXd b = ds.signal.all_valid() ? ds.signal.values : interpolate_invalid(ds.signal, g);
    std::optional<Index> removed;
    Observation obs = apply_outlier(Observation(b), opts.outlier, g, removed);
    const auto decomp = spectral_decomposition(normalized_laplacian(g));
    SolveResult res = alternating_solve(obs, cfg, decomp, {}, opts.theta_init);
    std::optional<HopErrorReport> report;
    if (!opts.sources.empty()) report = hop_error(reference_signal(opts.sources, ds.size()), res.x, g);
    return LocalizeResult{std::move(g), std::move(obs), removed, std::move(res), std::move(report)};
}

PlantedDataset generate_planted_dataset(const PlantedDatasetParams& p) {
    if (p.sources < 1 || p.sources > p.nodes) throw Error(ErrorCategory::InvalidParameter, "source count out of range");
    if (!(p.invalid_fraction >= 0.0 && p.invalid_fraction < 1.0)) {
        throw Error(ErrorCategory::InvalidParameter, "invalid fraction must lie in [0, 1)");
    }
    const Graph g = generate_sensor_graph(p.nodes, p.k, derive_seed(p.seed, {kTagPlantedGraph}));
    const auto decomp = spectral_decomposition(normalized_laplacian(g));

    std::vector<Index> nodes(static_cast<std::size_t>(p.nodes));
    std::iota(nodes.begin(), nodes.end(), Index{0});
    Rng rng(derive_seed(p.seed, {kTagPlantedSources}));
    std::shuffle(nodes.begin(), nodes.end(), rng);
    std::vector<Index> sources(nodes.begin(), nodes.begin() + p.sources);
    std::sort(sources.begin(), sources.end());

    Eigen::VectorXd x = Eigen::VectorXd::Zero(p.nodes);
    for (Index s : sources) x(s) = 1.0;
    Eigen::VectorXd b = apply_diffusion(decomp, p.theta, x);
    if (std::isfinite(p.snr_db)) b = add_noise_snr(b, p.snr_db, derive_seed(p.seed, {kTagPlantedNoise}));

    PlantedDataset out;
    auto& ds = out.dataset;
    for (Index i = 0; i < p.nodes; ++i) ds.ids.push_back(id_for(i, p.nodes));
    ds.coords = *g.coords();
    ds.signal.values = b;
    ds.signal.valid.assign(static_cast<std::size_t>(p.nodes), true);

    const auto invalid = static_cast<Index>(std::floor(p.invalid_fraction * static_cast<double>(p.nodes)));
    if (invalid > 0) {
        Rng pick(derive_seed(p.seed, {kTagPlantedInvalid}));
        std::shuffle(nodes.begin(), nodes.end(), pick);
        for (Index i = 0; i < invalid; ++i) {
            const auto node = nodes[static_cast<std::size_t>(i)];
            ds.signal.valid[static_cast<std::size_t>(node)] = false;
            ds.signal.values(node) = std::numeric_limits<double>::quiet_NaN();
        }
    }
    out.sources = std::move(sources);
    return out;
}

void write_dataset(const Dataset& ds, const std::vector<Index>& sources, const std::filesystem::path& dir) {
    if (!ds.coords) throw Error(ErrorCategory::InvalidInput, "dataset has no coordinates to write");
    Table points;
    points.columns = {"id"};
    const char* axes[] = {"x", "y", "z"};
    for (Index c = 0; c < ds.coords->cols(); ++c)
        points.columns.push_back(c < 3 ? axes[c] : "x" + std::to_string(c));
    for (Index i = 0; i < ds.size(); ++i) {
        std::vector<Cell> row{ds.ids[static_cast<std::size_t>(i)]};
        for (Index c = 0; c < ds.coords->cols(); ++c) row.emplace_back((*ds.coords)(i, c));
        points.rows.push_back(std::move(row));
    }
    Table signal;
    signal.columns = {"id", "value"};
    for (Index i = 0; i < ds.size(); ++i) {
        const bool ok = ds.signal.valid[static_cast<std::size_t>(i)];
        signal.rows.push_back({ds.ids[static_cast<std::size_t>(i)], ok ? Cell{ds.signal.values(i)} : Cell{std::string("NA")}});
    }
    Table src;
    src.columns = {"id"};
    for (Index s : sources) src.rows.push_back({ds.ids[static_cast<std::size_t>(s)]});

    write_results(points, dir / "points.csv", TableFormat::Csv);
    write_results(signal, dir / "signal.csv", TableFormat::Csv);
    write_results(src, dir / "sources.csv", TableFormat::Csv);
}

}  // namespace srcloc
