#include "srcloc/diffusion.hpp"
#include "srcloc/error.hpp"
#include "srcloc/experiments.hpp"
#include "srcloc/graph.hpp"
#include "srcloc/metrics.hpp"
#include "srcloc/solver.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace srcloc;

namespace {

PyObject* error_type = nullptr;

Eigen::MatrixXi hop_matrix_array(const HopMatrix& h) {
    Eigen::MatrixXi out(static_cast<Index>(h.sources().size()), h.node_count());
    for (Index r = 0; r < out.rows(); ++r)
        for (Index c = 0; c < out.cols(); ++c) {
            const int v = h.at(r, c);
            out(r, c) = v == HopMatrix::unreachable ? -1 : v;
        }
    return out;
}

}  // namespace

PYBIND11_MODULE(_srcloc, m) {
    m.doc() = "Sparse diffusion-source localization on graphs";

    error_type = PyErr_NewException("srcloc.Error", PyExc_RuntimeError, nullptr);
    m.attr("Error") = py::handle(error_type);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const srcloc::Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
            exc.attr("category") = category_name(e.category());
            PyErr_SetObject(error_type, exc.ptr());
        }
    });

    py::class_<Graph>(m, "Graph")
        .def(py::init([](const Eigen::MatrixXd& w, std::optional<Eigen::MatrixXd> coords) {
                 return Graph(w, std::move(coords));
             }),
             py::arg("weights"), py::arg("coords") = py::none())
        .def_property_readonly("size", &Graph::size)
        .def_property_readonly("weights", &Graph::weights)
        .def_property_readonly("coords", &Graph::coords)
        .def_property_readonly("edge_count", &Graph::edge_count)
        .def("degree", &Graph::degree)
        .def("is_connected", &Graph::is_connected)
        .def("neighbors", [](const Graph& g, Index i) {
            const auto s = g.neighbors(i);
            return std::vector<Index>(s.begin(), s.end());
        });

    py::class_<SpectralDecomposition>(m, "SpectralDecomposition")
        .def_readonly("eigenvalues", &SpectralDecomposition::eigenvalues)
        .def_readonly("eigenvectors", &SpectralDecomposition::eigenvectors)
        .def_property_readonly("size", &SpectralDecomposition::size);

    m.def("build_knn_graph_from_points", &build_knn_graph_from_points, py::arg("points"), py::arg("k"),
          py::arg("sigma2") = py::none(), py::arg("warn_disconnected") = true);
    m.def("build_knn_graph_from_distances", &build_knn_graph_from_distances, py::arg("distances"), py::arg("k"),
          py::arg("sigma2") = py::none(), py::arg("warn_disconnected") = true);
    m.def("normalized_laplacian", &normalized_laplacian);
    m.def("spectral_decomposition", &spectral_decomposition);
    m.def(
        "hop_distances",
        [](const Graph& g, const std::vector<Index>& sources) { return hop_matrix_array(hop_distances(g, sources)); },
        py::arg("graph"), py::arg("sources") = std::vector<Index>{},
        "Hop counts from each source (all nodes by default); -1 marks unreachable pairs.");

    m.def("kernel_eval", [](double theta, double lambda) {
        kernel_eval(theta, lambda);  // argument checks
        const HeatKernel k(theta);
        return py::make_tuple(k.value(lambda), k.dtheta(lambda), k.dtheta2(lambda));
    });
    m.def("apply_diffusion", &apply_diffusion, py::arg("decomp"), py::arg("theta"), py::arg("x"));
    m.def("apply_theta_derivative", &apply_theta_derivative, py::arg("decomp"), py::arg("theta"), py::arg("x"),
          py::arg("order"));
    m.def("diffusion_matrix", &diffusion_matrix);

    py::class_<Observation>(m, "Observation")
        .def(py::init<Eigen::VectorXd>(), py::arg("b"))
        .def(py::init<Eigen::VectorXd, Eigen::VectorXd>(), py::arg("b"), py::arg("mask"))
        .def_property_readonly("b", &Observation::b)
        .def_property_readonly("mask", &Observation::mask)
        .def_property_readonly("fully_observed", &Observation::fully_observed);

    py::class_<SolverConfig>(m, "SolverConfig")
        .def(py::init<>())
        .def_readwrite("gamma", &SolverConfig::gamma)
        .def_readwrite("alpha", &SolverConfig::alpha)
        .def_readwrite("epsilon", &SolverConfig::epsilon)
        .def_readwrite("max_outer_iter", &SolverConfig::max_outer_iter)
        .def_readwrite("fista_max_iter", &SolverConfig::fista_max_iter)
        .def_readwrite("fista_tol", &SolverConfig::fista_tol)
        .def_readwrite("mu", &SolverConfig::mu)
        .def_readwrite("newton_max_iter", &SolverConfig::newton_max_iter)
        .def_readwrite("theta_min", &SolverConfig::theta_min)
        .def_readwrite("theta_max", &SolverConfig::theta_max)
        .def_readwrite("fix_theta", &SolverConfig::fix_theta)
        .def("validate", &SolverConfig::validate);

    py::class_<FistaResult>(m, "FistaResult")
        .def_readonly("x", &FistaResult::x)
        .def_readonly("iterations", &FistaResult::iterations)
        .def_readonly("objective", &FistaResult::objective);

    py::class_<SolveResult>(m, "SolveResult")
        .def_readonly("x", &SolveResult::x)
        .def_readonly("theta", &SolveResult::theta)
        .def_readonly("converged", &SolveResult::converged)
        .def_readonly("outer_iterations", &SolveResult::outer_iterations)
        .def_property_readonly("energy_trace", [](const SolveResult& r) {
            std::vector<double> e;
            for (const auto& s : r.energy_trace) e.push_back(s.energy);
            return e;
        });

    m.def("objective", &objective, py::arg("x"), py::arg("theta"), py::arg("obs"), py::arg("cfg"), py::arg("decomp"));
    m.def("soft_threshold", &soft_threshold);
    m.def("fista_solve_x", &fista_solve_x, py::arg("theta"), py::arg("obs"), py::arg("cfg"), py::arg("decomp"),
          py::arg("x_init") = Eigen::VectorXd());
    m.def("newton_theta_step", &newton_theta_step, py::arg("x"), py::arg("theta_k"), py::arg("obs"), py::arg("cfg"),
          py::arg("decomp"));
    m.def("alternating_solve", &alternating_solve, py::arg("obs"), py::arg("cfg"), py::arg("decomp"),
          py::arg("x_init") = Eigen::VectorXd(), py::arg("theta_init") = 1.0);

    py::class_<HopErrorReport>(m, "HopErrorReport")
        .def_readonly("total", &HopErrorReport::total)
        .def_readonly("active_set", &HopErrorReport::active_set)
        .def_readonly("excluded_mass_fraction", &HopErrorReport::excluded_mass_fraction)
        .def_property_readonly("per_source", [](const HopErrorReport& r) {
            py::list out;
            for (const auto& z : r.per_source) {
                py::dict d;
                d["source"] = z.source;
                d["mass"] = z.mass;
                d["center_of_mass"] = z.center_of_mass;
                d["empty"] = z.empty;
                out.append(d);
            }
            return out;
        });
    m.def("hop_error", &hop_error, py::arg("x_ref"), py::arg("y"), py::arg("graph"), py::arg("spike_tol") = 0.0);

    m.def("generate_sensor_graph", &generate_sensor_graph, py::arg("n"), py::arg("k"), py::arg("seed"),
          py::arg("sigma2") = py::none());
    m.def(
        "sample_spike_pair",
        [](const Graph& g, int h, std::uint64_t seed) {
            const SpikePair p = sample_spike_pair(g, h, seed);
            return py::make_tuple(p.x, p.first, p.second);
        },
        py::arg("graph"), py::arg("h"), py::arg("seed"));
    m.def("add_noise_snr", &add_noise_snr, py::arg("b"), py::arg("snr_db"), py::arg("seed"));
}
