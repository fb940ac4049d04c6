#pragma once

#include "srcloc/graph.hpp"
#include "srcloc/solver.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace srcloc {

// Signal values with per-entry validity. Invalid entries hold NaN.
struct FlaggedSignal {
    Eigen::VectorXd values;
    std::vector<bool> valid;

    Index size() const noexcept { return values.size(); }
    bool all_valid() const;
};

struct Dataset {
    std::vector<std::string> ids;  // node order used everywhere downstream
    std::optional<Eigen::MatrixXd> coords;
    std::optional<Eigen::MatrixXd> distances;
    FlaggedSignal signal;

    Index size() const noexcept { return static_cast<Index>(ids.size()); }
    // Position of `id` in ids; throws Schema when absent.
    Index index_of(const std::string& id) const;
};

// CSV schemas:
//   points:    header "id,x,y[,z...]", one row per node
//   signal:    header "id,value", value "NA" (or empty) marks an invalid sample
//   distances: header "id,<id_1>,...,<id_n>", then rows "<id_i>,d_i1,...,d_in"
// Node order follows the points file, or the distance file when no points
// path is given. Signal rows may appear in any order but must cover the same ids.
Dataset load_dataset(const std::filesystem::path& points_path, const std::filesystem::path& signal_path,
                     const std::optional<std::filesystem::path>& distances_path = std::nullopt);

// Reads a single "id" column of ground-truth source ids and maps them to node indices.
std::vector<Index> load_source_ids(const std::filesystem::path& path, const Dataset& dataset);

// Fills invalid entries with the edge-weighted mean of valid neighbours,
// sweeping Jacobi-style until everything is filled (at most 100 sweeps).
// Throws InterpolationFailure naming a node that cannot be reached.
Eigen::VectorXd interpolate_invalid(const FlaggedSignal& signal, const Graph& g);

enum class OutlierMode { None, Mask, Interpolate };

OutlierMode parse_outlier_mode(const std::string& text);
std::string to_string(OutlierMode mode);

// Mask: zero the node's mask entry. Interpolate: replace b[node] with the
// edge-weighted mean of its observed neighbours.
Observation remove_outlier(const Observation& obs, Index node, OutlierMode mode, const Graph& g);

// Index of the largest entry, lowest index on ties.
Index argmax_node(const Eigen::VectorXd& b);

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

enum class TableFormat { Csv, Json };

TableFormat parse_table_format(const std::string& text);

// Doubles are written with 9 significant digits; non-finite values as
// "inf", "-inf" or "NA" (strings in JSON). JSON output is an array of row
// objects with keys in column order.
void write_results(const Table& table, const std::filesystem::path& path, TableFormat format);
Table read_results(const std::filesystem::path& path, TableFormat format);

// Numeric view of a cell: ints and doubles as-is, "inf"/"-inf"/"NA" strings
// mapped to their values. Throws Parse for other strings.
double cell_as_double(const Cell& cell);

std::string format_double(double value);

}  // namespace srcloc
