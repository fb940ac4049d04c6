#include "srcloc/graph.hpp"

#include "srcloc/error.hpp"
#include "srcloc/log.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <queue>
#include <string>
#include <utility>

namespace srcloc {
namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kZeroEigenvalueTol = 1e-10;

double max_asymmetry(const Eigen::MatrixXd& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

std::string node_name(Index i) { return "node " + std::to_string(i); }

using AdjacencyList = std::vector<std::vector<std::pair<Index, double>>>;

std::vector<double> dijkstra(const AdjacencyList& adj, Index source) {
    const auto n = adj.size();
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[static_cast<std::size_t>(source)] = 0.0;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[static_cast<std::size_t>(u)]) continue;
        for (auto [v, len] : adj[static_cast<std::size_t>(u)]) {
            const double cand = d + len;
            if (cand < dist[static_cast<std::size_t>(v)]) {
                dist[static_cast<std::size_t>(v)] = cand;
                heap.emplace(cand, v);
            }
        }
    }
    return dist;
}

Eigen::MatrixXd all_pairs_dijkstra(const AdjacencyList& adj) {
    const auto n = static_cast<Index>(adj.size());
    Eigen::MatrixXd out(n, n);
    for (Index s = 0; s < n; ++s) {
        const auto row = dijkstra(adj, s);
        for (Index j = 0; j < n; ++j) out(s, j) = row[static_cast<std::size_t>(j)];
    }
    return out;
}

void check_edge_lengths(const Eigen::MatrixXd& lengths) {
    if (lengths.rows() != lengths.cols()) {
        throw Error(ErrorCategory::InvalidInput, "edge length matrix must be square");
    }
    for (Index i = 0; i < lengths.rows(); ++i) {
        for (Index j = 0; j < lengths.cols(); ++j) {
            const double v = lengths(i, j);
            if (std::isnan(v) || v < 0.0) {
                throw Error(ErrorCategory::InvalidInput,
                            "negative or NaN edge length at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
            }
            if (v != lengths(j, i)) {
                throw Error(ErrorCategory::InvalidInput, "edge length matrix is not symmetric");
            }
        }
    }
}

// Shared k-NN construction given a pairwise distance accessor.
template <class DistanceFn>
Graph knn_from_distance_fn(Index n, Index k, Sigma2 sigma2, DistanceFn&& dist,
                           std::optional<Eigen::MatrixXd> coords, bool warn_disconnected) {
    if (k < 1 || k >= n) {
        throw Error(ErrorCategory::InvalidParameter,
                    "k must satisfy 1 <= k < n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
    }
    if (sigma2 && !(*sigma2 > 0.0 && std::isfinite(*sigma2))) {
        throw Error(ErrorCategory::InvalidParameter, "sigma2 must be positive and finite");
    }

    Eigen::MatrixXd d(n, n);
    for (Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = dist(i, j);
    }

    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> keep =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
    std::vector<Index> order(static_cast<std::size_t>(n - 1));
    for (Index i = 0; i < n; ++i) {
        order.clear();
        for (Index j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Index a, Index b) {
            return d(i, a) != d(i, b) ? d(i, a) < d(i, b) : a < b;
        });
        for (Index r = 0; r < k; ++r) {
            const Index j = order[static_cast<std::size_t>(r)];
            keep(i, j) = keep(j, i) = true;
        }
    }

    double s2 = 1.0;
    if (sigma2) {
        s2 = *sigma2;
    } else {
        double sum = 0.0;
        Index count = 0;
        for (Index i = 0; i < n; ++i)
            for (Index j = i + 1; j < n; ++j)
                if (keep(i, j)) {
                    sum += d(i, j) * d(i, j);
                    ++count;
                }
        // All retained edges between coincident points: any bandwidth gives weight 1.
        if (count > 0 && sum > 0.0) s2 = sum / static_cast<double>(count);
    }

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            if (keep(i, j)) w(i, j) = w(j, i) = std::exp(-d(i, j) * d(i, j) / s2);

    Graph g(std::move(w), std::move(coords));
    if (warn_disconnected && !g.is_connected()) warn("k-NN graph with k=" + std::to_string(k) + " is disconnected");
    return g;
}

}  // namespace

Graph::Graph(Eigen::MatrixXd weights, std::optional<Eigen::MatrixXd> coords)
    : weights_(std::move(weights)), coords_(std::move(coords)) {
    const Index n = weights_.rows();
    if (weights_.cols() != n) throw Error(ErrorCategory::InvalidInput, "weight matrix must be square");
    if (coords_ && coords_->rows() != n) {
        throw Error(ErrorCategory::InvalidInput, "coordinate rows must match node count");
    }
    adjacency_.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        if (weights_(i, i) != 0.0) throw Error(ErrorCategory::InvalidInput, "non-zero diagonal weight at " + node_name(i));
        for (Index j = 0; j < n; ++j) {
            const double w = weights_(i, j);
            if (!std::isfinite(w) || w < 0.0) {
                throw Error(ErrorCategory::InvalidInput, "edge weights must be finite and non-negative");
            }
            if (w != weights_(j, i)) throw Error(ErrorCategory::InvalidInput, "weight matrix is not symmetric");
            if (w > 0.0) {
                adjacency_[static_cast<std::size_t>(i)].push_back(j);
                if (j > i) ++edge_count_;
            }
        }
    }
}

bool Graph::is_connected() const {
    const Index n = size();
    if (n == 0) return true;
    const auto hops = hop_distances(*this, std::vector<Index>{0});
    for (Index j = 0; j < n; ++j)
        if (hops.at(0, j) == HopMatrix::unreachable) return false;
    return true;
}

HopMatrix::HopMatrix(std::vector<Index> sources, Index node_count)
    : sources_(std::move(sources)),
      node_count_(node_count),
      data_(sources_.size() * static_cast<std::size_t>(node_count), unreachable) {}

Graph build_knn_graph_from_points(const Eigen::MatrixXd& points, Index k, Sigma2 sigma2, bool warn_disconnected) {
    if (!points.allFinite()) throw Error(ErrorCategory::InvalidInput, "point coordinates must be finite");
    return knn_from_distance_fn(
        points.rows(), k, sigma2, [&](Index i, Index j) { return (points.row(i) - points.row(j)).norm(); },
        points, warn_disconnected);
}

Graph build_knn_graph_from_distances(const Eigen::MatrixXd& distances, Index k, Sigma2 sigma2,
                                     bool warn_disconnected) {
    const Index n = distances.rows();
    if (distances.cols() != n) throw Error(ErrorCategory::InvalidInput, "distance matrix must be square");
    for (Index i = 0; i < n; ++i) {
        if (distances(i, i) != 0.0) throw Error(ErrorCategory::InvalidInput, "distance matrix diagonal must be zero");
        for (Index j = 0; j < n; ++j) {
            const double v = distances(i, j);
            if (!std::isfinite(v) || v < 0.0) {
                throw Error(ErrorCategory::InvalidInput, "distances must be finite and non-negative");
            }
            if (v != distances(j, i)) throw Error(ErrorCategory::InvalidInput, "distance matrix is not symmetric");
        }
    }
    return knn_from_distance_fn(n, k, sigma2, [&](Index i, Index j) { return distances(i, j); }, std::nullopt,
                                warn_disconnected);
}

Eigen::MatrixXd normalized_laplacian(const Graph& g) {
    const Index n = g.size();
    Eigen::VectorXd inv_sqrt_deg(n);
    for (Index i = 0; i < n; ++i) {
        const double deg = g.degree(i);
        if (!(deg > 0.0)) throw Error(ErrorCategory::DegenerateGraph, node_name(i) + " is isolated (zero degree)");
        inv_sqrt_deg(i) = 1.0 / std::sqrt(deg);
    }
    Eigen::MatrixXd lap = -(inv_sqrt_deg.asDiagonal() * g.weights() * inv_sqrt_deg.asDiagonal());
    lap.diagonal().array() += 1.0;
    // Exact symmetry regardless of floating-point evaluation order.
    return 0.5 * (lap + lap.transpose());
}

SpectralDecomposition spectral_decomposition(const Eigen::MatrixXd& laplacian) {
    if (laplacian.rows() != laplacian.cols()) throw Error(ErrorCategory::InvalidInput, "matrix must be square");
    if (laplacian.size() > 0 && max_asymmetry(laplacian) > kSymmetryTol) {
        throw Error(ErrorCategory::InvalidInput, "matrix is not symmetric within 1e-10");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCategory::NumericalFailure, "symmetric eigensolver did not converge");
    }
    SpectralDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
    for (Index i = 0; i < out.eigenvalues.size(); ++i)
        if (std::abs(out.eigenvalues(i)) < kZeroEigenvalueTol) out.eigenvalues(i) = 0.0;
    return out;
}

HopMatrix hop_distances(const Graph& g, std::span<const Index> sources) {
    const Index n = g.size();
    std::vector<Index> src(sources.begin(), sources.end());
    if (src.empty()) {
        src.resize(static_cast<std::size_t>(n));
        std::iota(src.begin(), src.end(), Index{0});
    }
    for (Index s : src)
        if (s < 0 || s >= n) throw Error(ErrorCategory::InvalidInput, "source " + node_name(s) + " out of range");

    HopMatrix out(src, n);
    std::deque<Index> queue;
    for (Index row = 0; row < static_cast<Index>(src.size()); ++row) {
        out.at(row, src[static_cast<std::size_t>(row)]) = 0;
        queue.assign(1, src[static_cast<std::size_t>(row)]);
        while (!queue.empty()) {
            const Index u = queue.front();
            queue.pop_front();
            const int next = out.at(row, u) + 1;
            for (Index v : g.neighbors(u)) {
                if (out.at(row, v) == HopMatrix::unreachable) {
                    out.at(row, v) = next;
                    queue.push_back(v);
                }
            }
        }
    }
    return out;
}

Eigen::MatrixXd metric_shortest_paths(const Graph& g, const Eigen::MatrixXd& edge_lengths) {
    if (edge_lengths.rows() != g.size()) throw Error(ErrorCategory::InvalidInput, "edge length matrix size mismatch");
    check_edge_lengths(edge_lengths);
    AdjacencyList adj(static_cast<std::size_t>(g.size()));
    for (Index i = 0; i < g.size(); ++i)
        for (Index j : g.neighbors(i))
            if (std::isfinite(edge_lengths(i, j))) adj[static_cast<std::size_t>(i)].emplace_back(j, edge_lengths(i, j));
    return all_pairs_dijkstra(adj);
}

Eigen::MatrixXd metric_shortest_paths(const Eigen::MatrixXd& edge_lengths) {
    check_edge_lengths(edge_lengths);
    AdjacencyList adj(static_cast<std::size_t>(edge_lengths.rows()));
    for (Index i = 0; i < edge_lengths.rows(); ++i)
        for (Index j = 0; j < edge_lengths.cols(); ++j)
            if (i != j && std::isfinite(edge_lengths(i, j))) adj[static_cast<std::size_t>(i)].emplace_back(j, edge_lengths(i, j));
    return all_pairs_dijkstra(adj);
}

}  // namespace srcloc
