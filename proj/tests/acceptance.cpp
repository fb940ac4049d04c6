// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "oracles.hpp"
#include "srcloc/diffusion.hpp"
#include "srcloc/experiments.hpp"
#include "srcloc/random.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

using namespace srcloc;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %2d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Eigen::VectorXd gaussian(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXd v(n);
    for (Index i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

double pooled_std(const CellSummary& a, const CellSummary& b) {
    const double dof = a.finite + b.finite - 2;
    if (dof <= 0) return 0.0;
    return std::sqrt(((a.finite - 1) * a.stddev * a.stddev + (b.finite - 1) * b.stddev * b.stddev) / dof);
}

bool clean(const CellSummary& c) { return c.finite == c.trials && c.infinite == 0 && c.failed == 0 && c.skipped == 0; }

void spectral_correctness() {
    const auto t0 = Clock::now();
    double worst = 0.0, lo = 0.0, hi = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Graph g = generate_sensor_graph(100, 10, derive_seed(101, {s}));
        const Eigen::MatrixXd lap = normalized_laplacian(g);
        const auto d = spectral_decomposition(lap);
        const Eigen::MatrixXd rec = d.eigenvectors * d.eigenvalues.asDiagonal() * d.eigenvectors.transpose();
        worst = std::max(worst, (rec - lap).cwiseAbs().maxCoeff());
        lo = std::min(lo, d.eigenvalues.minCoeff());
        hi = std::max(hi, d.eigenvalues.maxCoeff());
    }
    const double secs = seconds_since(t0);
    report(1, "spectral correctness", worst <= 1e-8 && lo >= 0.0 && hi <= 2.0 + 1e-8 && secs < 10.0,
           fmt("max |U L U^T - L| = %.3g, eigenvalues in [%.3g, %.12g], %.2f s", worst, lo, hi, secs));
}

void derivative_oracle() {
    std::mt19937_64 rng(202);
    const Graph g = generate_sensor_graph(50, 8, 202);
    const auto d = spectral_decomposition(normalized_laplacian(g));
    std::uniform_real_distribution<double> u(0.3, 3.0);
    SolverConfig cfg;
    double worst1 = 0.0, worst2 = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::VectorXd x = gaussian(50, rng);
        const Observation obs(gaussian(50, rng));
        const double theta = u(rng);
        const double h = 1e-4 * theta;
        const auto at = [&](double t) { return theta_fidelity(x, t, obs, cfg, d); };
        const ThetaFidelity c = at(theta), p = at(theta + h), m = at(theta - h);
        const double fd1 = (p.value - m.value) / (2 * h);
        const double fd2 = (p.first - m.first) / (2 * h);
        worst1 = std::max(worst1, std::abs(c.first - fd1) / std::abs(fd1));
        worst2 = std::max(worst2, std::abs(c.second - fd2) / std::abs(fd2));
    }
    report(2, "derivative oracle", worst1 <= 1e-5 && worst2 <= 1e-5,
           fmt("max relative error f' %.3g, f'' %.3g", worst1, worst2));
}

void lasso_oracle() {
    std::mt19937_64 rng(303);
    const auto d = spectral_decomposition(normalized_laplacian(generate_sensor_graph(60, 6, 303)));
    SolverConfig cfg;
    cfg.theta_min = 1e-14;
    double worst = 0.0;
    for (double gamma : {1e-3, 0.1, 0.5}) {
        cfg.gamma = gamma;
        for (int rep = 0; rep < 4; ++rep) {
            const Eigen::VectorXd b = gaussian(60, rng);
            const auto res = fista_solve_x(1e-12, Observation(b), cfg, d);
            worst = std::max(worst, (res.x - soft_threshold(b, cfg.gamma / cfg.alpha)).cwiseAbs().maxCoeff());
        }
    }
    report(3, "lasso oracle", worst <= 1e-6, fmt("theta = 1e-12, max |x - soft_threshold(b)| = %.3g", worst));
}

void ista_equivalence() {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> log_gamma(std::log(1e-3), std::log(1e-1));
    // The 10,000-step ISTA reference is only converged on reasonably
    // conditioned operators, so instances use the unit diffusion time.
    const double theta = 1.0;
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::MatrixXd w = oracle::random_connected_weights(50, 0.15, rng);
        const auto d = spectral_decomposition(normalized_laplacian(Graph(w)));
        const Eigen::VectorXd b = gaussian(50, rng).normalized();
        SolverConfig cfg;
        cfg.gamma = std::exp(log_gamma(rng));
        const auto res = fista_solve_x(theta, Observation(b), cfg, d);
        const Eigen::MatrixXd a = diffusion_matrix(d, theta);
        const Eigen::VectorXd ref = oracle::ista(a, b, cfg.gamma, cfg.alpha, 10000);
        worst = std::max(worst, std::abs(res.objective - oracle::lasso_objective(a, b, cfg.gamma, cfg.alpha, ref)));
    }
    report(4, "ISTA equivalence", worst <= 1e-6, fmt("max |F_fista - F_ista| = %.3g over 10 instances, theta = 1, |b| = 1", worst));
}

void hop_error_oracle() {
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution coin(0.3);
    int mismatches = 0, zero_cases = 0, tie_cases = 0;
    for (int rep = 0; rep < 200; ++rep) {
        const Index n = 2 + rep % 9;
        const Eigen::MatrixXd w = oracle::random_weights(n, 0.35, rng, false);
        const Graph g(w);
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        for (Index i = 0; i < n; ++i)
            if (coin(rng)) x(i) = 1.0;
        if (x.isZero()) x(rep % n) = 1.0;
        Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
        if (rep % 7 != 0)
            for (Index i = 0; i < n; ++i) y(i) = coin(rng) ? u(rng) : 0.0;
        if (y.isZero()) ++zero_cases;

        // A node equidistant from two active sources exercises the tie rule.
        const HopMatrix hops = hop_distances(g);
        std::vector<Index> active;
        for (Index i = 0; i < n; ++i)
            if (x(i) != 0.0) active.push_back(i);
        for (Index v = 0; v < n && active.size() > 1; ++v) {
            bool tie = false;
            for (std::size_t a = 0; a < active.size() && !tie; ++a)
                for (std::size_t b = a + 1; b < active.size() && !tie; ++b) {
                    const int da = hops.at(active[a], v), db = hops.at(active[b], v);
                    tie = da == db && da != HopMatrix::unreachable && y(v) != 0.0;
                }
            if (tie) {
                ++tie_cases;
                break;
            }
        }

        const double expected = oracle::brute_hop_error(x, y, w);
        const double got = hop_error(x, y, g).total;
        if (!((std::isinf(expected) && std::isinf(got) && got > 0) || got == expected)) ++mismatches;
    }
    report(5, "hop-error oracle", mismatches == 0 && zero_cases > 0 && tie_cases > 0,
           fmt("%d mismatches over 200 graphs (%d y=0 cases, %d with ties)", mismatches, zero_cases, tie_cases));
}

// Shared by criteria 6 to 8: the noiseless cells come from this grid.
GridResult distance_grid;

void noiseless_recovery() {
    const auto t0 = Clock::now();
    ExperimentGrid grid;
    grid.h_values = {2, 6, 10};
    grid.theta_values = {0.5, 16.0};
    grid.trials = 32;
    grid.seed = 2024;
    SolverConfig cfg;
    cfg.fix_theta = true;
    distance_grid = run_distance_theta_grid(grid, cfg);
    const double secs = seconds_since(t0);

    std::vector<CellSummary> cells;
    for (const auto& c : distance_grid.cells)
        if (c.theta == 0.5) cells.push_back(c);
    bool ok = cells.size() == 3 && secs < 300.0;
    std::string detail;
    double worst_gap = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        ok = ok && clean(cells[i]) && cells[i].mean <= 1.0;
        detail += fmt("h=%d mean %.4g (std %.3g); ", cells[i].h, cells[i].mean, cells[i].stddev);
        for (std::size_t j = i + 1; j < cells.size(); ++j) {
            const double gap = std::abs(cells[i].mean - cells[j].mean);
            ok = ok && gap <= pooled_std(cells[i], cells[j]);
            worst_gap = std::max(worst_gap, gap);
        }
    }
    report(6, "noiseless recovery", ok,
           detail + fmt("max pairwise gap %.3g; grid incl. theta=16 took %.1f s", worst_gap, secs));
}

void theta_trend() {
    std::map<int, std::pair<double, double>> by_h;
    bool ok = true;
    for (const auto& c : distance_grid.cells) {
        ok = ok && clean(c);
        (c.theta == 0.5 ? by_h[c.h].first : by_h[c.h].second) = c.mean;
    }
    std::string detail;
    for (const auto& [h, m] : by_h) {
        ok = ok && m.second > m.first;
        detail += fmt("h=%d: theta 0.5 -> %.4g, theta 16 -> %.4g; ", h, m.first, m.second);
    }
    report(7, "theta degradation", ok && by_h.size() == 3, detail + "32 trials per cell");
}

void noise_trend() {
    ExperimentGrid grid;
    grid.h_values = {6};
    grid.theta_values = {0.5};
    grid.snr_db_values = {0.0, 20.0, 300.0};
    grid.trials = 32;
    grid.seed = 2024;
    SolverConfig cfg;
    cfg.fix_theta = true;
    const GridResult r = run_snr_theta_grid(grid, cfg);
    std::map<double, CellSummary> by_snr;
    for (const auto& c : r.cells) by_snr[c.snr_db] = c;
    const CellSummary* noiseless = nullptr;
    for (const auto& c : distance_grid.cells)
        if (c.h == 6 && c.theta == 0.5) noiseless = &c;
    bool ok = by_snr.size() == 3 && noiseless != nullptr;
    for (const auto& [snr, c] : by_snr) ok = ok && clean(c);
    if (!ok) {
        report(8, "noise trend", false, "grid incomplete");
        return;
    }
    const CellSummary& c0 = by_snr[0.0];
    const CellSummary& c20 = by_snr[20.0];
    const CellSummary& c300 = by_snr[300.0];
    const double gap = std::abs(c300.mean - noiseless->mean);
    const double tol = pooled_std(c300, *noiseless);
    ok = c0.mean >= c20.mean && gap <= tol;
    report(8, "noise trend", ok,
           fmt("0 dB %.4g >= 20 dB %.4g; 300 dB %.4g vs noiseless %.4g (gap %.3g, pooled std %.3g)", c0.mean, c20.mean,
               c300.mean, noiseless->mean, gap, tol));
}

void energy_monotonicity() {
    int monotone = 0, recovered = 0;
    double worst_rise = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng rng(derive_seed(909, {s}));
        std::uniform_real_distribution<double> theta_dist(0.5, 2.0);
        std::uniform_real_distribution<double> init_dist(0.5, 1.5);
        std::uniform_int_distribution<int> h_dist(2, 6);
        const double theta = theta_dist(rng);
        const double theta_init = theta * init_dist(rng);
        const int h = h_dist(rng);
        const Graph g = generate_sensor_graph(100, 10, rng());
        const auto d = spectral_decomposition(normalized_laplacian(g));
        const SpikePair sp = sample_spike_pair(g, h, rng());
        const Observation obs(apply_diffusion(d, theta, sp.x));
        const SolveResult res = alternating_solve(obs, SolverConfig{}, d, {}, theta_init);
        bool mono = true;
        for (std::size_t i = 1; i < res.energy_trace.size(); ++i) {
            const double rise = res.energy_trace[i].energy - res.energy_trace[i - 1].energy;
            worst_rise = std::max(worst_rise, rise);
            mono = mono && rise <= 1e-9;
        }
        monotone += mono;
        recovered += hop_error(sp.x, res.x, g).total <= 2.0;
    }
    report(9, "energy monotonicity", monotone == 50 && recovered >= 35,
           fmt("%d/50 monotone traces (max rise %.3g), %d/50 joint solves with hop error <= 2", monotone, worst_rise,
               recovered));
}

std::vector<KSweepRecord> sweep(const PlantedDataset& pd, OutlierMode mode) {
    KSweepOptions opts;
    for (Index k = 5; k <= 25; ++k) opts.k_values.push_back(k);
    opts.theta = 1.0;
    opts.sources = pd.sources;
    opts.outlier.mode = mode;
    return run_k_sweep(pd.dataset, SolverConfig{}, opts);
}

double best_error(const std::vector<KSweepRecord>& recs, Index* best_k) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : recs)
        if (r.status == TrialStatus::Ok && r.hop_error < best) {
            best = r.hop_error;
            *best_k = r.k;
        }
    return best;
}

void k_sweep_robustness(const fs::path& dir) {
    PlantedDatasetParams params;
    params.nodes = 200;
    params.theta = 1.0;
    params.seed = 1;
    const PlantedDataset pd = generate_planted_dataset(params);
    bool ok = true;
    std::string detail;
    for (auto [mode, bound] : {std::pair{OutlierMode::None, 1.0}, std::pair{OutlierMode::Mask, 2.0},
                               std::pair{OutlierMode::Interpolate, 2.0}}) {
        const auto recs = sweep(pd, mode);
        const fs::path out = dir / ("k_sweep_" + to_string(mode) + ".csv");
        write_results(k_sweep_table(recs, pd.dataset), out, TableFormat::Csv);
        Index k = -1;
        const double best = best_error(recs, &k);
        ok = ok && recs.size() == 21 && fs::exists(out) && best <= bound;
        detail += fmt("%s best %.4g at k=%d (bound %g); ", to_string(mode).c_str(), best, static_cast<int>(k), bound);
    }
    report(10, "k-sweep robustness", ok, detail + "k in 5..25, n=200");
}

bool identical_runs(const std::string& name, const std::function<void(const fs::path&)>& run, const fs::path& dir,
                    const std::vector<std::string>& files, std::string& detail) {
    const fs::path a = dir / (name + "_a"), b = dir / (name + "_b");
    run(a);
    run(b);
    bool same = true;
    for (const auto& f : files) {
        const std::string x = slurp(a / f), y = slurp(b / f);
        same = same && !x.empty() && x == y;
    }
    detail += name + (same ? " identical; " : " DIFFERS; ");
    return same;
}

void determinism(const fs::path& dir) {
    std::string detail;
    bool ok = true;
    SolverConfig fixed;
    fixed.fix_theta = true;
    GridOptions small;
    small.graph.nodes = 80;
    small.graph.k = 6;
    ExperimentGrid grid{{2, 4}, {0.5, 4.0}, {5.0, 20.0}, {}, 3, 99};

    for (auto format : {TableFormat::Csv, TableFormat::Json}) {
        const std::string ext = format == TableFormat::Csv ? ".csv" : ".json";
        ok &= identical_runs(
            "distance" + ext,
            [&](const fs::path& d) { write_grid(run_distance_theta_grid(grid, fixed, small), d / ("g" + ext), format); },
            dir, {"g" + ext, "g.summary" + ext}, detail);
        ok &= identical_runs(
            "snr" + ext, [&](const fs::path& d) { write_grid(run_snr_theta_grid(grid, fixed, small), d / ("g" + ext), format); },
            dir, {"g" + ext, "g.summary" + ext}, detail);
    }
    ok &= identical_runs(
        "joint",
        [&](const fs::path& d) {
            GridOptions opts = small;
            opts.theta_init = 1.0;
            write_grid(run_distance_theta_grid(grid, SolverConfig{}, opts), d / "g.csv", TableFormat::Csv);
        },
        dir, {"g.csv"}, detail);

    PlantedDatasetParams params;
    params.nodes = 100;
    params.k = 8;
    params.snr_db = 20.0;
    params.invalid_fraction = 0.05;
    const PlantedDataset pd = generate_planted_dataset(params);
    ok &= identical_runs(
        "k-sweep",
        [&](const fs::path& d) {
            KSweepOptions o;
            o.k_values = {5, 8, 12};
            o.sources = pd.sources;
            o.outlier.mode = OutlierMode::Interpolate;
            write_results(k_sweep_table(run_k_sweep(pd.dataset, SolverConfig{}, o), pd.dataset), d / "k.csv",
                          TableFormat::Csv);
        },
        dir, {"k.csv"}, detail);

#ifdef SRCLOC_CLI_PATH
    const std::string cli = std::string("\"") + SRCLOC_CLI_PATH + "\"";
    const auto run_cli = [&](const std::string& args) {
        return [&, args](const fs::path& d) {
            fs::create_directories(d);
            const std::string cmd = cli + " " + args + " --out \"" + (d / "out.csv").string() + "\" > /dev/null";
            if (std::system(cmd.c_str()) != 0) fs::remove_all(d);
        };
    };
    ok &= identical_runs("cli grid-distance-theta",
                         run_cli("grid-distance-theta --hops 2,5 --theta 0.5,4 --trials 3 --nodes 80 --k 6 --seed 5"),
                         dir, {"out.csv", "out.summary.csv"}, detail);
    ok &= identical_runs("cli grid-snr-theta",
                         run_cli("grid-snr-theta --hops 4 --theta 1 --snr 0,10 --trials 3 --nodes 80 --k 6 --seed 5"),
                         dir, {"out.csv", "out.summary.csv"}, detail);
    write_dataset(pd.dataset, pd.sources, dir / "planted");
    const std::string p = (dir / "planted").string();
    ok &= identical_runs("cli k-sweep",
                         run_cli("k-sweep --points \"" + p + "/points.csv\" --signal \"" + p + "/signal.csv\" --sources \"" +
                                 p + "/sources.csv\" --k-values 5:9 --fix-theta 1 --remove-max --outlier-mode mask"),
                         dir, {"out.csv"}, detail);
#endif
    report(11, "determinism", ok, detail);
}

}  // namespace

int main() {
    std::random_device rd;
    const fs::path dir = fs::temp_directory_path() / ("srcloc_acceptance_" + std::to_string(rd()));
    fs::create_directories(dir);
    const auto guard = [&](int id, const char* name, auto&& f) {
        try {
            f();
        } catch (const std::exception& e) {
            report(id, name, false, std::string("threw: ") + e.what());
        }
    };
    guard(1, "spectral correctness", spectral_correctness);
    guard(2, "derivative oracle", derivative_oracle);
    guard(3, "lasso oracle", lasso_oracle);
    guard(4, "ISTA equivalence", ista_equivalence);
    guard(5, "hop-error oracle", hop_error_oracle);
    guard(6, "noiseless recovery", noiseless_recovery);
    guard(7, "theta degradation", theta_trend);
    guard(8, "noise trend", noise_trend);
    guard(9, "energy monotonicity", energy_monotonicity);
    guard(10, "k-sweep robustness", [&] { k_sweep_robustness(dir); });
    guard(11, "determinism", [&] { determinism(dir); });
    fs::remove_all(dir);
    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
