#pragma once

#include "srcloc/graph.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace srcloc {

// Partition of the nodes by nearest active node in hops. Equidistant nodes
// go to the lowest-index active node.
struct InfluenceZones {
    std::vector<Index> active;               // ascending
    std::vector<std::vector<Index>> zones;   // zones[z] belongs to active[z], ascending node order
    std::vector<int> owner;                  // per node: zone index, or -1 when unreachable
    std::vector<int> hops;                   // per node: hops to its owner (HopMatrix::unreachable if none)
    std::vector<Index> unreachable;          // nodes reachable from no active node
};

struct ZoneReport {
    Index source;
    double mass;            // sum of |y| over the zone
    double center_of_mass;  // mass-weighted mean hop distance, 0 when mass is 0
    bool empty;             // zone carries no y-mass
};

struct HopErrorReport {
    double total = 0.0;  // +inf when y carries no mass at all
    std::vector<ZoneReport> per_source;
    std::vector<Index> active_set;
    double excluded_mass_fraction = 0.0;  // |y| mass on nodes outside every zone
};

// Throws InvalidInput on an empty or out-of-range active set.
InfluenceZones influence_zones(const Graph& g, std::span<const Index> active);

// Sum over active nodes of the |y|-weighted mean hop distance within each
// influence zone. Active nodes are {i : |x_ref(i)| > spike_tol * max|x_ref|}.
// Throws InvalidReference when x_ref is identically zero.
HopErrorReport hop_error(const Eigen::VectorXd& x_ref, const Eigen::VectorXd& y, const Graph& g,
                         double spike_tol = 0.0);

}  // namespace srcloc
