// srcloc: sparse diffusion-source localization on graphs.
//
// Subcommands: localize, grid-distance-theta, grid-snr-theta, k-sweep,
// gen-sensor, gen-planted-dataset. Failures print a single line
// "error: <category>: <message>" on stderr and exit with status 1.

#include "srcloc/data_io.hpp"
#include "srcloc/error.hpp"
#include "srcloc/experiments.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace srcloc;

namespace {

struct SolverFlags {
    SolverConfig cfg;
    double mu = -1.0;

    void add_to(CLI::App& app) {
        app.add_option("--gamma", cfg.gamma, "l1 weight")->capture_default_str();
        app.add_option("--alpha", cfg.alpha, "fidelity weight")->capture_default_str();
        app.add_option("--epsilon", cfg.epsilon, "outer stopping tolerance on the energy change")->capture_default_str();
        app.add_option("--max-outer-iter", cfg.max_outer_iter)->capture_default_str();
        app.add_option("--fista-max-iter", cfg.fista_max_iter)->capture_default_str();
        app.add_option("--fista-tol", cfg.fista_tol, "relative objective change stopping FISTA")->capture_default_str();
        app.add_option("--mu", mu, "Newton proximal weight (default 1e-2 * alpha)");
        app.add_option("--newton-max-iter", cfg.newton_max_iter)->capture_default_str();
        app.add_option("--theta-min", cfg.theta_min)->capture_default_str();
        app.add_option("--theta-max", cfg.theta_max)->capture_default_str();
    }

    SolverConfig config() const {
        SolverConfig out = cfg;
        if (mu >= 0.0) out.mu = mu;
        return out;
    }
};

Sigma2 parse_sigma2(const std::string& text) {
    if (text == "auto" || text == "AUTO") return kAutoSigma2;
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCategory::InvalidParameter, "--sigma2 must be 'auto' or a positive number");
}

// "5:25" (inclusive range) or "5,10,15".
std::vector<Index> parse_index_list(const std::string& text) {
    std::vector<Index> out;
    try {
        if (const auto colon = text.find(':'); colon != std::string::npos) {
            const long lo = std::stol(text.substr(0, colon));
            const long hi = std::stol(text.substr(colon + 1));
            for (long v = lo; v <= hi; ++v) out.push_back(v);
            return out;
        }
        std::size_t start = 0;
        while (start <= text.size()) {
            const auto comma = text.find(',', start);
            const auto part = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            if (!part.empty()) out.push_back(std::stol(part));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    } catch (const std::exception&) {
        throw Error(ErrorCategory::InvalidParameter, "cannot parse integer list '" + text + "'");
    }
    return out;
}

struct DatasetFlags {
    std::string points;
    std::string signal;
    std::string distances;
    bool road_graph = false;
    std::string sources;

    void add_to(CLI::App& app, bool sources_required) {
        app.add_option("--points", points, "CSV with header id,x,y[,z...]");
        app.add_option("--signal", signal, "CSV with header id,value (NA marks invalid)")->required();
        app.add_option("--distances", distances, "square CSV distance matrix with id header");
        app.add_flag("--road-graph", road_graph,
                     "distance file holds road segment lengths (empty = no segment); close under shortest paths");
        auto* opt = app.add_option("--sources", sources, "CSV with header id listing ground-truth sources");
        if (sources_required) opt->required();
    }

    Dataset load() const {
        return load_dataset(points, signal,
                            distances.empty() ? std::nullopt : std::optional<fs::path>(fs::path(distances)));
    }
};

struct OutlierFlags {
    std::string mode;
    bool remove_max = false;
    std::string remove_node;

    void add_to(CLI::App& app) {
        app.add_option("--outlier-mode", mode, "none|mask|interpolate (default mask when a node is selected)");
        app.add_flag("--remove-max", remove_max, "treat argmax(b) as the outlier (ties: lowest index)");
        app.add_option("--remove-node", remove_node, "id of the node to treat as the outlier");
    }

    OutlierSelection selection(const Dataset& ds) const {
        OutlierSelection sel;
        const bool picked = remove_max || !remove_node.empty();
        if (remove_max && !remove_node.empty()) {
            throw Error(ErrorCategory::InvalidParameter, "--remove-max and --remove-node are exclusive");
        }
        sel.mode = mode.empty() ? (picked ? OutlierMode::Mask : OutlierMode::None) : parse_outlier_mode(mode);
        if (!remove_node.empty()) sel.node = ds.index_of(remove_node);
        return sel;
    }
};

Table vector_table(const Dataset& ds, const Eigen::VectorXd& x, const char* column) {
    Table t;
    t.columns = {"id", column};
    for (Index i = 0; i < ds.size(); ++i) t.rows.push_back({ds.ids[static_cast<std::size_t>(i)], x(i)});
    return t;
}

std::string ext(TableFormat f) { return f == TableFormat::Csv ? ".csv" : ".json"; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse diffusion-source localization on graphs"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string format_text = "csv";
    app.add_option("--format", format_text, "output table format: csv|json")->capture_default_str();

    // localize
    auto* loc = app.add_subcommand("localize", "recover sparse sources from one observed snapshot");
    DatasetFlags loc_data;
    loc_data.add_to(*loc, false);
    SolverFlags loc_solver;
    loc_solver.add_to(*loc);
    OutlierFlags loc_outlier;
    loc_outlier.add_to(*loc);
    Index loc_k = 10;
    std::string loc_sigma2 = "auto";
    double loc_fix_theta = std::numeric_limits<double>::quiet_NaN();
    double loc_theta_init = 1.0;
    std::string loc_out = "localize_out";
    loc->add_option("--k", loc_k, "neighbours per node")->capture_default_str();
    loc->add_option("--sigma2", loc_sigma2, "kernel bandwidth or 'auto'")->capture_default_str();
    loc->add_option("--fix-theta", loc_fix_theta, "keep theta fixed at this value (skip the theta-step)");
    loc->add_option("--theta-init", loc_theta_init, "initial theta for joint estimation")->capture_default_str();
    loc->add_option("--out", loc_out, "output directory")->capture_default_str();

    // grids
    auto add_grid_flags = [](CLI::App& cmd, ExperimentGrid& grid, GridOptions& opts, std::string& sigma2,
                             bool& learn, double& theta_init, std::string& out) {
        cmd.add_option("--theta", grid.theta_values, "diffusion times")->delimiter(',')->capture_default_str();
        cmd.add_option("--trials", grid.trials)->capture_default_str();
        cmd.add_option("--seed", grid.seed, "master seed")->capture_default_str();
        cmd.add_option("--nodes", opts.graph.nodes, "sensor graph size")->capture_default_str();
        cmd.add_option("--k", opts.graph.k, "neighbours per node")->capture_default_str();
        cmd.add_option("--sigma2", sigma2, "kernel bandwidth or 'auto'")->capture_default_str();
        cmd.add_flag("--learn-theta", learn, "estimate theta jointly instead of fixing it at the true value");
        cmd.add_option("--theta-init", theta_init, "initial theta for --learn-theta (default: true theta)");
        cmd.add_option("--out", out, "raw trial table; the per-cell summary goes to <stem>.summary<ext>")->required();
    };

    auto* gdt = app.add_subcommand("grid-distance-theta", "hop error over spike distance h and diffusion time");
    ExperimentGrid gdt_grid;
    gdt_grid.h_values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    gdt_grid.theta_values = {0.5, 1, 2, 4, 8, 16};
    GridOptions gdt_opts;
    SolverFlags gdt_solver;
    std::string gdt_sigma2 = "auto", gdt_out;
    bool gdt_learn = false;
    double gdt_theta_init = std::numeric_limits<double>::quiet_NaN();
    gdt->add_option("--hops", gdt_grid.h_values, "spike hop distances")->delimiter(',')->capture_default_str();
    add_grid_flags(*gdt, gdt_grid, gdt_opts, gdt_sigma2, gdt_learn, gdt_theta_init, gdt_out);
    gdt_solver.add_to(*gdt);

    auto* gst = app.add_subcommand("grid-snr-theta", "hop error over SNR (dB) and diffusion time");
    ExperimentGrid gst_grid;
    gst_grid.h_values = {6};
    gst_grid.theta_values = {0.5, 1, 2, 4, 8, 16};
    gst_grid.snr_db_values = {0, 5, 10, 15, 20};
    GridOptions gst_opts;
    SolverFlags gst_solver;
    std::string gst_sigma2 = "auto", gst_out;
    bool gst_learn = false;
    double gst_theta_init = std::numeric_limits<double>::quiet_NaN();
    int gst_h = 6;
    gst->add_option("--hops", gst_h, "spike hop distance")->capture_default_str();
    gst->add_option("--snr", gst_grid.snr_db_values,
                    "SNR levels in dB; noise std = ||b|| / (sqrt(n) 10^(snr/20))")
        ->delimiter(',')
        ->capture_default_str();
    add_grid_flags(*gst, gst_grid, gst_opts, gst_sigma2, gst_learn, gst_theta_init, gst_out);
    gst_solver.add_to(*gst);

    // k-sweep
    auto* ks = app.add_subcommand("k-sweep", "hop error as a function of the number of neighbours");
    DatasetFlags ks_data;
    ks_data.add_to(*ks, true);
    SolverFlags ks_solver;
    ks_solver.add_to(*ks);
    OutlierFlags ks_outlier;
    ks_outlier.add_to(*ks);
    std::string ks_values = "5:25", ks_sigma2 = "auto", ks_out;
    double ks_theta = 0.0;
    ks->add_option("--k-values", ks_values, "range a:b or comma list")->capture_default_str();
    ks->add_option("--sigma2", ks_sigma2, "kernel bandwidth or 'auto'")->capture_default_str();
    ks->add_option("--fix-theta", ks_theta, "diffusion time held fixed for every k")->required();
    ks->add_option("--out", ks_out, "output table")->required();

    // generators
    auto* gs = app.add_subcommand("gen-sensor", "write a random sensor graph (points.csv, edges.csv)");
    Index gs_n = 250, gs_k = 10;
    std::uint64_t gs_seed = 1;
    std::string gs_sigma2 = "auto", gs_out;
    gs->add_option("--nodes", gs_n)->capture_default_str();
    gs->add_option("--k", gs_k)->capture_default_str();
    gs->add_option("--sigma2", gs_sigma2)->capture_default_str();
    gs->add_option("--seed", gs_seed)->capture_default_str();
    gs->add_option("--out", gs_out, "output directory")->required();

    auto* gp = app.add_subcommand("gen-planted-dataset", "write a synthetic dataset with planted sources");
    PlantedDatasetParams gp_params;
    std::string gp_out;
    gp->add_option("--nodes", gp_params.nodes)->capture_default_str();
    gp->add_option("--k", gp_params.k, "neighbours of the generating graph")->capture_default_str();
    gp->add_option("--theta", gp_params.theta, "diffusion time of the planted snapshot")->capture_default_str();
    gp->add_option("--sources", gp_params.sources, "number of planted sources")->capture_default_str();
    gp->add_option("--snr", gp_params.snr_db, "SNR in dB (inf = noiseless)")->capture_default_str();
    gp->add_option("--invalid-fraction", gp_params.invalid_fraction, "fraction of samples written as NA")
        ->capture_default_str();
    gp->add_option("--seed", gp_params.seed)->capture_default_str();
    gp->add_option("--out", gp_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const TableFormat format = parse_table_format(format_text);

        if (*loc) {
            const Dataset ds = loc_data.load();
            SolverConfig cfg = loc_solver.config();
            LocalizeOptions opts;
            opts.k = loc_k;
            opts.sigma2 = parse_sigma2(loc_sigma2);
            opts.road_graph = loc_data.road_graph;
            opts.outlier = loc_outlier.selection(ds);
            opts.theta_init = loc_theta_init;
            if (!std::isnan(loc_fix_theta)) {
                cfg.fix_theta = true;
                opts.theta_init = loc_fix_theta;
            }
            if (!loc_data.sources.empty()) opts.sources = load_source_ids(loc_data.sources, ds);
            const LocalizeResult res = localize(ds, cfg, opts);

            const fs::path dir(loc_out);
            write_results(vector_table(ds, res.solve.x, "x"), dir / ("x" + ext(format)), format);
            Table energy;
            energy.columns = {"iteration", "energy"};
            for (const auto& e : res.solve.energy_trace) energy.rows.push_back({std::int64_t{e.iteration}, e.energy});
            write_results(energy, dir / ("energy" + ext(format)), format);

            Table summary;
            summary.columns = {"theta", "converged", "outer_iterations", "final_energy", "removed_node", "hop_error"};
            summary.rows.push_back({res.solve.theta, std::int64_t{res.solve.converged ? 1 : 0},
                                    std::int64_t{res.solve.outer_iterations}, res.solve.energy_trace.back().energy,
                                    res.removed_node ? Cell{ds.ids[static_cast<std::size_t>(*res.removed_node)]}
                                                     : Cell{std::string("NA")},
                                    res.report ? Cell{res.report->total} : Cell{std::string("NA")}});
            write_results(summary, dir / ("summary" + ext(format)), format);

            if (res.report) {
                Table zones;
                zones.columns = {"source", "zone_mass", "center_of_mass_hops", "empty"};
                for (const auto& z : res.report->per_source) {
                    zones.rows.push_back({ds.ids[static_cast<std::size_t>(z.source)], z.mass, z.center_of_mass,
                                          std::int64_t{z.empty ? 1 : 0}});
                }
                write_results(zones, dir / ("hop_error" + ext(format)), format);
            }
            std::cout << "theta " << format_double(res.solve.theta) << ", "
                      << (res.solve.converged ? "converged" : "not converged") << " after "
                      << res.solve.outer_iterations << " outer iterations";
            if (res.report) std::cout << ", hop error " << format_double(res.report->total);
            std::cout << '\n';
        } else if (*gdt || *gst) {
            const bool snr = gst->parsed();
            ExperimentGrid grid = snr ? gst_grid : gdt_grid;
            GridOptions opts = snr ? gst_opts : gdt_opts;
            SolverConfig cfg = (snr ? gst_solver : gdt_solver).config();
            opts.graph.sigma2 = parse_sigma2(snr ? gst_sigma2 : gdt_sigma2);
            cfg.fix_theta = !(snr ? gst_learn : gdt_learn);
            const double init = snr ? gst_theta_init : gdt_theta_init;
            if (!std::isnan(init)) opts.theta_init = init;
            if (snr) grid.h_values = {gst_h};
            const GridResult res = snr ? run_snr_theta_grid(grid, cfg, opts) : run_distance_theta_grid(grid, cfg, opts);
            const fs::path out(snr ? gst_out : gdt_out);
            write_grid(res, out, format);
            std::cout << res.records.size() << " trial records written to " << out.string() << '\n';
        } else if (*ks) {
            const Dataset ds = ks_data.load();
            KSweepOptions opts;
            opts.k_values = parse_index_list(ks_values);
            opts.theta = ks_theta;
            opts.outlier = ks_outlier.selection(ds);
            opts.sigma2 = parse_sigma2(ks_sigma2);
            opts.road_graph = ks_data.road_graph;
            opts.sources = load_source_ids(ks_data.sources, ds);
            const auto records = run_k_sweep(ds, ks_solver.config(), opts);
            write_results(k_sweep_table(records, ds), ks_out, format);
            std::cout << records.size() << " k values written to " << ks_out << '\n';
        } else if (*gs) {
            const Graph g = generate_sensor_graph(gs_n, gs_k, gs_seed, parse_sigma2(gs_sigma2));
            Dataset ds;
            for (Index i = 0; i < g.size(); ++i) ds.ids.push_back(std::to_string(i));
            Table points;
            points.columns = {"id", "x", "y"};
            for (Index i = 0; i < g.size(); ++i)
                points.rows.push_back({ds.ids[static_cast<std::size_t>(i)], (*g.coords())(i, 0), (*g.coords())(i, 1)});
            Table edges;
            edges.columns = {"source", "target", "weight"};
            for (Index i = 0; i < g.size(); ++i)
                for (Index j : g.neighbors(i))
                    if (j > i) edges.rows.push_back({std::int64_t{i}, std::int64_t{j}, g.weights()(i, j)});
            const fs::path dir(gs_out);
            write_results(points, dir / ("points" + ext(format)), format);
            write_results(edges, dir / ("edges" + ext(format)), format);
            std::cout << g.size() << " nodes, " << g.edge_count() << " edges\n";
        } else if (*gp) {
            const PlantedDataset pd = generate_planted_dataset(gp_params);
            write_dataset(pd.dataset, pd.sources, gp_out);
            std::cout << pd.dataset.size() << " nodes, " << pd.sources.size() << " planted source(s) written to " << gp_out
                      << '\n';
        }
    } catch (const Error& e) {
        std::cerr << "error: " << category_name(e.category()) << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
