#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace srcloc {

using Index = Eigen::Index;

// Undirected weighted graph stored as a dense symmetric adjacency matrix.
// Immutable after construction; adjacency lists are cached for traversal.
class Graph {
  public:
    // Validates symmetry (exact), zero diagonal and non-negative finite
    // weights. Throws Error(InvalidInput) otherwise.
    explicit Graph(Eigen::MatrixXd weights, std::optional<Eigen::MatrixXd> coords = std::nullopt);

    Index size() const noexcept { return weights_.rows(); }
    const Eigen::MatrixXd& weights() const noexcept { return weights_; }
    const std::optional<Eigen::MatrixXd>& coords() const noexcept { return coords_; }

    std::span<const Index> neighbors(Index node) const { return adjacency_[static_cast<std::size_t>(node)]; }
    double degree(Index node) const { return weights_.row(node).sum(); }
    Index edge_count() const noexcept { return edge_count_; }

    bool is_connected() const;

  private:
    Eigen::MatrixXd weights_;
    std::optional<Eigen::MatrixXd> coords_;
    std::vector<std::vector<Index>> adjacency_;
    Index edge_count_ = 0;
};

// Eigenpairs of a symmetric matrix, eigenvalues ascending, eigenvectors as
// orthonormal columns.
struct SpectralDecomposition {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;

    Index size() const noexcept { return eigenvalues.size(); }
};

// Rows of the hop-distance matrix for a set of source nodes.
class HopMatrix {
  public:
    static constexpr int unreachable = std::numeric_limits<int>::max();

    HopMatrix(std::vector<Index> sources, Index node_count);

    const std::vector<Index>& sources() const noexcept { return sources_; }
    Index node_count() const noexcept { return node_count_; }

    // Distance from sources()[row] to node.
    int at(Index row, Index node) const { return data_[static_cast<std::size_t>(row * node_count_ + node)]; }
    int& at(Index row, Index node) { return data_[static_cast<std::size_t>(row * node_count_ + node)]; }

  private:
    std::vector<Index> sources_;
    Index node_count_;
    std::vector<int> data_;
};

// nullopt selects the automatic bandwidth: mean squared distance over the
// retained edges.
using Sigma2 = std::optional<double>;
inline constexpr Sigma2 kAutoSigma2 = std::nullopt;

// k-NN graph over points (rows are coordinates), Euclidean distances.
// Edge (i, j) exists when j is among i's k nearest or vice versa; weight is
// exp(-d^2 / sigma2). Neighbour ties are broken by lower node index.
// A warning is emitted for disconnected results unless `warn_disconnected`
// is false.
Graph build_knn_graph_from_points(const Eigen::MatrixXd& points, Index k, Sigma2 sigma2 = kAutoSigma2,
                                  bool warn_disconnected = true);

// Same construction over a precomputed symmetric metric matrix.
Graph build_knn_graph_from_distances(const Eigen::MatrixXd& distances, Index k, Sigma2 sigma2 = kAutoSigma2,
                                     bool warn_disconnected = true);

// I - D^{-1/2} W D^{-1/2}. Throws DegenerateGraph on an isolated node.
Eigen::MatrixXd normalized_laplacian(const Graph& g);

// Dense symmetric eigensolver. Eigenvalues with |lambda| < 1e-10 are set to 0.
SpectralDecomposition spectral_decomposition(const Eigen::MatrixXd& laplacian);

// Unweighted BFS distances. All nodes are sources when `sources` is empty.
HopMatrix hop_distances(const Graph& g, std::span<const Index> sources = {});

// All-pairs Dijkstra over the edges of `g`, with per-edge lengths taken from
// `edge_lengths` (+inf entries drop the edge).
Eigen::MatrixXd metric_shortest_paths(const Graph& g, const Eigen::MatrixXd& edge_lengths);

// Convenience for road networks: the edge set is every finite off-diagonal
// entry of `edge_lengths`.
Eigen::MatrixXd metric_shortest_paths(const Eigen::MatrixXd& edge_lengths);

}  // namespace srcloc
