#include "srcloc/metrics.hpp"

#include "srcloc/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

namespace srcloc {
namespace {

// Magnitudes at or below this are treated as exact zeros.
constexpr double kMachineZero = std::numeric_limits<double>::min();

}  // namespace

InfluenceZones influence_zones(const Graph& g, std::span<const Index> active) {
    if (active.empty()) throw Error(ErrorCategory::InvalidInput, "active set is empty");
    const Index n = g.size();

    InfluenceZones out;
    out.active.assign(active.begin(), active.end());
    std::sort(out.active.begin(), out.active.end());
    out.active.erase(std::unique(out.active.begin(), out.active.end()), out.active.end());
    for (Index a : out.active)
        if (a < 0 || a >= n) throw Error(ErrorCategory::InvalidInput, "active node " + std::to_string(a) + " out of range");

    out.owner.assign(static_cast<std::size_t>(n), -1);
    out.hops.assign(static_cast<std::size_t>(n), HopMatrix::unreachable);

    // Multi-source BFS. A node's owner is the minimum owner over its
    // predecessors in the previous layer, which is final before the node is
    // dequeued, so ties resolve to the lowest index.
    std::deque<Index> queue;
    for (std::size_t z = 0; z < out.active.size(); ++z) {
        const auto a = static_cast<std::size_t>(out.active[z]);
        out.owner[a] = static_cast<int>(z);
        out.hops[a] = 0;
        queue.push_back(out.active[z]);
    }
    while (!queue.empty()) {
        const auto u = static_cast<std::size_t>(queue.front());
        queue.pop_front();
        for (Index vi : g.neighbors(static_cast<Index>(u))) {
            const auto v = static_cast<std::size_t>(vi);
            if (out.hops[v] == HopMatrix::unreachable) {
                out.hops[v] = out.hops[u] + 1;
                out.owner[v] = out.owner[u];
                queue.push_back(vi);
            } else if (out.hops[v] == out.hops[u] + 1) {
                out.owner[v] = std::min(out.owner[v], out.owner[u]);
            }
        }
    }

    out.zones.resize(out.active.size());
    for (Index j = 0; j < n; ++j) {
        const int z = out.owner[static_cast<std::size_t>(j)];
        if (z < 0) {
            out.unreachable.push_back(j);
        } else {
            out.zones[static_cast<std::size_t>(z)].push_back(j);
        }
    }
    return out;
}

HopErrorReport hop_error(const Eigen::VectorXd& x_ref, const Eigen::VectorXd& y, const Graph& g, double spike_tol) {
    if (x_ref.size() != g.size() || y.size() != g.size()) {
        throw Error(ErrorCategory::InvalidInput, "signal lengths must match the graph size");
    }
    if (!(spike_tol >= 0.0)) throw Error(ErrorCategory::InvalidParameter, "spike_tol must be non-negative");
    const double peak = x_ref.cwiseAbs().maxCoeff();
    if (!(peak > 0.0)) throw Error(ErrorCategory::InvalidReference, "reference signal is identically zero");

    std::vector<Index> active;
    for (Index i = 0; i < x_ref.size(); ++i)
        if (std::abs(x_ref(i)) > spike_tol * peak) active.push_back(i);

    const InfluenceZones zones = influence_zones(g, active);
    HopErrorReport report;
    report.active_set = zones.active;

    double total_mass = 0.0;
    bool any_mass = false;
    for (Index j = 0; j < y.size(); ++j) {
        total_mass += std::abs(y(j));
        any_mass = any_mass || std::abs(y(j)) > kMachineZero;
    }

    double total = 0.0;
    for (std::size_t z = 0; z < zones.zones.size(); ++z) {
        const Index source = zones.active[z];
        double mass = 0.0;
        double moment = 0.0;
        for (Index j : zones.zones[z]) {
            const double m = std::abs(y(j));
            mass += m;
            moment += m * zones.hops[static_cast<std::size_t>(j)];
        }
        const bool empty = !(mass > 0.0);
        const double center = empty ? 0.0 : moment / mass;
        report.per_source.push_back({source, mass, center, empty});
        total += center;
    }

    double excluded = 0.0;
    for (Index j : zones.unreachable) excluded += std::abs(y(j));
    report.excluded_mass_fraction = total_mass > 0.0 ? excluded / total_mass : 0.0;
    report.total = any_mass ? total : std::numeric_limits<double>::infinity();
    return report;
}

}  // namespace srcloc
