#include "srcloc/data_io.hpp"

#include "srcloc/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace srcloc {
namespace {

using Row = std::vector<std::string>;

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<Row> read_csv(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw Error(ErrorCategory::Schema, "input file '" + path.string() + "' does not exist");
    }
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::Io, "cannot open '" + path.string() + "'");
    std::vector<Row> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        Row row;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            row.push_back(trim(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorCategory::Schema, "'" + path.string() + "' is empty (missing header)");
    return rows;
}

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

double parse_cell(const std::filesystem::path& path, const std::string& s, std::size_t row, std::size_t col) {
    if (auto v = parse_number(s)) return *v;
    throw Error(ErrorCategory::Parse, "non-numeric cell '" + s + "' in '" + path.string() + "' at row " +
                                          std::to_string(row + 1) + ", column " + std::to_string(col + 1));
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan"; }

void require_header(const std::filesystem::path& path, const Row& header, std::size_t min_cols,
                    std::initializer_list<const char*> names) {
    std::size_t i = 0;
    for (const char* name : names) {
        if (header.size() <= i || header[i] != name) {
            throw Error(ErrorCategory::Schema, "'" + path.string() + "' header must start with '" + name +
                                                   "' in column " + std::to_string(i + 1));
        }
        ++i;
    }
    if (header.size() < min_cols) {
        throw Error(ErrorCategory::Schema, "'" + path.string() + "' header has too few columns");
    }
}

void require_width(const std::filesystem::path& path, const Row& row, std::size_t width, std::size_t index) {
    if (row.size() != width) {
        throw Error(ErrorCategory::Schema, "'" + path.string() + "' row " + std::to_string(index + 1) + " has " +
                                               std::to_string(row.size()) + " cells, expected " + std::to_string(width));
    }
}

std::string cell_text(const Cell& cell) {
    if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
    if (const auto* d = std::get_if<double>(&cell)) return format_double(*d);
    return std::get<std::string>(cell);
}

nlohmann::ordered_json cell_json(const Cell& cell) {
    if (const auto* i = std::get_if<std::int64_t>(&cell)) return *i;
    if (const auto* d = std::get_if<double>(&cell)) {
        if (!std::isfinite(*d)) return format_double(*d);
        return std::stod(format_double(*d));
    }
    return std::get<std::string>(cell);
}

Cell parse_table_cell(const std::string& s) {
    std::int64_t i = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), i);
    if (!s.empty() && ec == std::errc() && ptr == s.data() + s.size()) return i;
    if (s == "inf" || s == "-inf" || s == "NA") return s;
    if (auto v = parse_number(s)) return *v;
    return s;
}

}  // namespace

bool FlaggedSignal::all_valid() const { return std::all_of(valid.begin(), valid.end(), [](bool v) { return v; }); }

Index Dataset::index_of(const std::string& id) const {
    const auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw Error(ErrorCategory::Schema, "unknown node id '" + id + "'");
    return static_cast<Index>(it - ids.begin());
}

Dataset load_dataset(const std::filesystem::path& points_path, const std::filesystem::path& signal_path,
                     const std::optional<std::filesystem::path>& distances_path) {
    Dataset ds;
    if (!points_path.empty()) {
        const auto rows = read_csv(points_path);
        require_header(points_path, rows[0], 2, {"id"});
        const std::size_t dim = rows[0].size() - 1;
        Eigen::MatrixXd coords(static_cast<Index>(rows.size() - 1), static_cast<Index>(dim));
        for (std::size_t r = 1; r < rows.size(); ++r) {
            require_width(points_path, rows[r], dim + 1, r);
            ds.ids.push_back(rows[r][0]);
            for (std::size_t c = 0; c < dim; ++c)
                coords(static_cast<Index>(r - 1), static_cast<Index>(c)) = parse_cell(points_path, rows[r][c + 1], r, c + 1);
        }
        if (!coords.allFinite()) throw Error(ErrorCategory::Parse, "'" + points_path.string() + "' has non-finite coordinates");
        ds.coords = std::move(coords);
    }

    if (distances_path) {
        const auto rows = read_csv(*distances_path);
        require_header(*distances_path, rows[0], 2, {"id"});
        const std::vector<std::string> header_ids(rows[0].begin() + 1, rows[0].end());
        const std::size_t n = header_ids.size();
        if (rows.size() - 1 != n) {
            throw Error(ErrorCategory::Schema, "'" + distances_path->string() + "' must have one row per header id");
        }
        Eigen::MatrixXd d(static_cast<Index>(n), static_cast<Index>(n));
        for (std::size_t r = 1; r < rows.size(); ++r) {
            require_width(*distances_path, rows[r], n + 1, r);
            if (rows[r][0] != header_ids[r - 1]) {
                throw Error(ErrorCategory::Schema, "'" + distances_path->string() + "' row " + std::to_string(r + 1) +
                                                       " id does not match the header order");
            }
            for (std::size_t c = 0; c < n; ++c) {
                const auto& s = rows[r][c + 1];
                d(static_cast<Index>(r - 1), static_cast<Index>(c)) =
                    s.empty() ? std::numeric_limits<double>::infinity() : parse_cell(*distances_path, s, r, c + 1);
            }
        }
        if (ds.ids.empty()) {
            ds.ids = header_ids;
        } else if (ds.ids != header_ids) {
            throw Error(ErrorCategory::Schema, "ids in '" + distances_path->string() + "' do not match '" +
                                                   points_path.string() + "'");
        }
        ds.distances = std::move(d);
    }
    if (!ds.coords && !ds.distances) {
        throw Error(ErrorCategory::Schema, "a points file or a distance file is required");
    }

    const auto rows = read_csv(signal_path);
    require_header(signal_path, rows[0], 2, {"id", "value"});
    const std::size_t n = ds.ids.size();
    if (rows.size() - 1 != n) {
        throw Error(ErrorCategory::Schema, "row count mismatch: '" + signal_path.string() + "' has " +
                                               std::to_string(rows.size() - 1) + " rows but '" +
                                               (points_path.empty() ? distances_path->string() : points_path.string()) +
                                               "' has " + std::to_string(n));
    }
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < n; ++i) {
        if (!position.emplace(ds.ids[i], i).second) throw Error(ErrorCategory::Schema, "duplicate node id '" + ds.ids[i] + "'");
    }
    ds.signal.values = Eigen::VectorXd::Constant(static_cast<Index>(n), std::numeric_limits<double>::quiet_NaN());
    ds.signal.valid.assign(n, false);
    std::vector<bool> seen(n, false);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        require_width(signal_path, rows[r], 2, r);
        const auto it = position.find(rows[r][0]);
        if (it == position.end()) {
            throw Error(ErrorCategory::Schema, "id '" + rows[r][0] + "' in '" + signal_path.string() +
                                                   "' not present in the node file");
        }
        if (seen[it->second]) throw Error(ErrorCategory::Schema, "duplicate signal id '" + rows[r][0] + "'");
        seen[it->second] = true;
        if (is_missing(rows[r][1])) continue;
        const double v = parse_cell(signal_path, rows[r][1], r, 1);
        if (!std::isfinite(v)) continue;
        ds.signal.values(static_cast<Index>(it->second)) = v;
        ds.signal.valid[it->second] = true;
    }
    return ds;
}

std::vector<Index> load_source_ids(const std::filesystem::path& path, const Dataset& dataset) {
    const auto rows = read_csv(path);
    require_header(path, rows[0], 1, {"id"});
    std::vector<Index> out;
    for (std::size_t r = 1; r < rows.size(); ++r) out.push_back(dataset.index_of(rows[r][0]));
    if (out.empty()) throw Error(ErrorCategory::Schema, "'" + path.string() + "' lists no sources");
    return out;
}

Eigen::VectorXd interpolate_invalid(const FlaggedSignal& signal, const Graph& g) {
    const Index n = signal.size();
    if (g.size() != n || static_cast<Index>(signal.valid.size()) != n) {
        throw Error(ErrorCategory::InvalidInput, "signal length does not match the graph size");
    }
    Eigen::VectorXd values = signal.values;
    std::vector<bool> filled = signal.valid;
    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        std::vector<std::pair<Index, double>> updates;
        for (Index i = 0; i < n; ++i) {
            if (filled[static_cast<std::size_t>(i)]) continue;
            double num = 0.0;
            double den = 0.0;
            for (Index j : g.neighbors(i)) {
                if (!filled[static_cast<std::size_t>(j)]) continue;
                num += g.weights()(i, j) * values(j);
                den += g.weights()(i, j);
            }
            if (den > 0.0) updates.emplace_back(i, num / den);
        }
        if (updates.empty()) break;
        for (auto [i, v] : updates) {
            values(i) = v;
            filled[static_cast<std::size_t>(i)] = true;
        }
    }
    for (Index i = 0; i < n; ++i) {
        if (!filled[static_cast<std::size_t>(i)]) {
            throw Error(ErrorCategory::InterpolationFailure,
                        "node " + std::to_string(i) + " is not reachable from any valid sample");
        }
    }
    return values;
}

OutlierMode parse_outlier_mode(const std::string& text) {
    if (text == "none" || text == "NONE") return OutlierMode::None;
    if (text == "mask" || text == "MASK") return OutlierMode::Mask;
    if (text == "interpolate" || text == "INTERPOLATE") return OutlierMode::Interpolate;
    throw Error(ErrorCategory::InvalidParameter, "unknown outlier mode '" + text + "' (none|mask|interpolate)");
}

std::string to_string(OutlierMode mode) {
    switch (mode) {
        case OutlierMode::None: return "none";
        case OutlierMode::Mask: return "mask";
        case OutlierMode::Interpolate: return "interpolate";
    }
    return "none";
}

Observation remove_outlier(const Observation& obs, Index node, OutlierMode mode, const Graph& g) {
    if (node < 0 || node >= obs.size()) {
        throw Error(ErrorCategory::InvalidInput, "outlier node " + std::to_string(node) + " out of range");
    }
    if (g.size() != obs.size()) throw Error(ErrorCategory::InvalidInput, "graph size does not match observation");
    switch (mode) {
        case OutlierMode::None: return obs;
        case OutlierMode::Mask: {
            Eigen::VectorXd mask = obs.mask();
            mask(node) = 0.0;
            return Observation(obs.b(), std::move(mask));
        }
        case OutlierMode::Interpolate: {
            double num = 0.0;
            double den = 0.0;
            for (Index j : g.neighbors(node)) {
                if (obs.mask()(j) == 0.0) continue;
                num += g.weights()(node, j) * obs.b()(j);
                den += g.weights()(node, j);
            }
            if (!(den > 0.0)) {
                throw Error(ErrorCategory::InterpolationFailure,
                            "node " + std::to_string(node) + " has no observed neighbours");
            }
            Eigen::VectorXd b = obs.b();
            b(node) = num / den;
            return Observation(std::move(b), obs.mask());
        }
    }
    return obs;
}

Index argmax_node(const Eigen::VectorXd& b) {
    if (b.size() == 0) throw Error(ErrorCategory::InvalidInput, "empty signal");
    Index best = 0;
    for (Index i = 1; i < b.size(); ++i)
        if (b(i) > b(best)) best = i;
    return best;
}

TableFormat parse_table_format(const std::string& text) {
    if (text == "csv") return TableFormat::Csv;
    if (text == "json") return TableFormat::Json;
    throw Error(ErrorCategory::InvalidParameter, "unknown format '" + text + "' (csv|json)");
}

std::string format_double(double value) {
    if (std::isnan(value)) return "NA";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

double cell_as_double(const Cell& cell) {
    if (const auto* i = std::get_if<std::int64_t>(&cell)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&cell)) return *d;
    const auto& s = std::get<std::string>(cell);
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "NA") return std::numeric_limits<double>::quiet_NaN();
    throw Error(ErrorCategory::Parse, "cell '" + s + "' is not numeric");
}

void write_results(const Table& table, const std::filesystem::path& path, TableFormat format) {
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size()) throw Error(ErrorCategory::InvalidInput, "row width does not match columns");
    }
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCategory::Io, "cannot write '" + path.string() + "'");

    if (format == TableFormat::Csv) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
        out << '\n';
        for (const auto& row : table.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << cell_text(row[c]);
            out << '\n';
        }
    } else {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& row : table.rows) {
            nlohmann::ordered_json obj = nlohmann::ordered_json::object();
            for (std::size_t c = 0; c < row.size(); ++c) obj[table.columns[c]] = cell_json(row[c]);
            arr.push_back(std::move(obj));
        }
        out << arr.dump(1) << '\n';
    }
    if (!out) throw Error(ErrorCategory::Io, "failed writing '" + path.string() + "'");
}

Table read_results(const std::filesystem::path& path, TableFormat format) {
    Table table;
    if (format == TableFormat::Csv) {
        auto rows = read_csv(path);
        table.columns = rows[0];
        for (std::size_t r = 1; r < rows.size(); ++r) {
            require_width(path, rows[r], table.columns.size(), r);
            std::vector<Cell> cells;
            for (const auto& s : rows[r]) cells.push_back(parse_table_cell(s));
            table.rows.push_back(std::move(cells));
        }
        return table;
    }
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::Io, "cannot open '" + path.string() + "'");
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCategory::Parse, "'" + path.string() + "': " + e.what());
    }
    if (!doc.is_array()) throw Error(ErrorCategory::Schema, "'" + path.string() + "' must hold a JSON array");
    for (const auto& obj : doc) {
        if (table.columns.empty())
            for (const auto& item : obj.items()) table.columns.push_back(item.key());
        std::vector<Cell> cells;
        for (const auto& col : table.columns) {
            const auto& v = obj.at(col);
            if (v.is_number_integer()) {
                cells.emplace_back(v.get<std::int64_t>());
            } else if (v.is_number()) {
                cells.emplace_back(v.get<double>());
            } else {
                cells.emplace_back(v.get<std::string>());
            }
        }
        table.rows.push_back(std::move(cells));
    }
    return table;
}

}  // namespace srcloc
