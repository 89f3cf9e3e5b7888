#include "memsflow/energy.hpp"
#include "memsflow/errors.hpp"
#include "memsflow/evolution.hpp"
#include "memsflow/plate_operator.hpp"
#include "memsflow/potential.hpp"
#include "memsflow/sweep.hpp"
#include "memsflow/verify.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace py = pybind11;
using namespace memsflow;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Plate fields cross as n x n arrays of interior node values; the edge value
// is a separate scalar, zero for the hinged plate.
PlateField to_plate(const Array& a, double boundary = 0.0) {
    if (a.ndim() != 2 || a.shape(0) != a.shape(1))
        throw std::invalid_argument("plate field must be a square 2-D array");
    const PlateGrid g = PlateGrid::make(static_cast<int>(a.shape(0)));
    return PlateField(g, std::vector<double>(a.data(), a.data() + a.size()), boundary);
}

Array to_array(const PlateField& v) {
    const auto n = static_cast<py::ssize_t>(v.grid().n);
    Array out({n, n});
    std::copy(v.values().begin(), v.values().end(), out.mutable_data());
    return out;
}

GRoute parse_route(const std::string& s) {
    if (s == "trace") return GRoute::Trace;
    if (s == "variational") return GRoute::Variational;
    throw std::invalid_argument("route must be 'trace' or 'variational'");
}

CylinderGrid cylinder_for(const PlateField& v, int m) {
    return CylinderGrid::make(v.grid().n, m > 0 ? m : v.grid().n);
}

py::dict simulate_py(const Array& u0_array, const Parameters& p, int m, double dt, double t_end,
                     int sample_stride, double delta_stop, double rho, const std::string& route,
                     bool stop_at_steady_state) {
    const PlateField u0 = to_plate(u0_array);
    SimulationSettings s;
    s.dt = dt;
    s.t_end = t_end;
    s.sample_stride = sample_stride;
    s.delta_stop = delta_stop;
    s.g_route = parse_route(route);
    s.stop_at_steady_state = stop_at_steady_state;
    AdmissibleSetSpec spec;
    spec.rho = rho;

    SimulationTrace trace;
    {
        py::gil_scoped_release release;
        trace = simulate(u0, p, cylinder_for(u0, m), s, spec);
    }

    const auto count = static_cast<py::ssize_t>(trace.samples.size());
    Array t(count), min_u(count), max_u(count), norm(count), e_m(count), e_e(count), e(count),
        diss(count), drift(count);
    for (py::ssize_t q = 0; q < count; ++q) {
        const TraceSample& x = trace.samples[q];
        t.mutable_at(q) = x.time;
        min_u.mutable_at(q) = x.min_u;
        max_u.mutable_at(q) = x.max_u;
        norm.mutable_at(q) = x.norm_proxy;
        e_m.mutable_at(q) = x.energy.e_mech;
        e_e.mutable_at(q) = x.energy.e_elec;
        e.mutable_at(q) = x.energy.e_total;
        diss.mutable_at(q) = x.energy.dissipation;
        drift.mutable_at(q) = x.drift;
    }
    py::dict samples;
    samples["t"] = t;
    samples["min_u"] = min_u;
    samples["max_u"] = max_u;
    samples["norm_proxy"] = norm;
    samples["E_m"] = e_m;
    samples["E_e"] = e_e;
    samples["E"] = e;
    samples["dissipation"] = diss;
    samples["drift"] = drift;

    py::dict out;
    out["status"] = to_string(trace.status);
    out["reason"] = trace.reason;
    out["terminal_time"] = trace.terminal_time;
    const auto t_star = touchdown_time(trace);
    out["touchdown_time"] = t_star ? py::object(py::float_(*t_star)) : py::none();
    out["steps"] = trace.steps;
    out["max_drift"] = trace.max_drift;
    out["bound_violations"] = trace.g_bound_violations + trace.energy_bound_violations;
    out["samples"] = samples;
    out["final_state"] = to_array(trace.final_state);
    return out;
}

py::dict sweep_py(int n, const Parameters& p, double lo, double hi, double tol, double dt,
                  double t_end, int prescan_points, int threads) {
    const CylinderGrid grid = CylinderGrid::make(n, n);
    SimulationSettings s;
    s.dt = dt;
    s.t_end = t_end;
    SweepSettings sw{lo, hi, tol, prescan_points, threads};
    SweepResult r;
    {
        py::gil_scoped_release release;
        r = estimate_lambda_star(PlateField(grid.plate), p, grid, s, AdmissibleSetSpec{}, sw);
    }
    py::list history;
    for (const SweepEntry& e : r.history) {
        py::dict h;
        h["lambda"] = e.lambda;
        h["status"] = to_string(e.status);
        h["touchdown_time"] = e.touchdown ? py::object(py::float_(*e.touchdown)) : py::none();
        h["terminal_time"] = e.terminal_time;
        history.append(h);
    }
    py::dict out;
    out["bracket"] = py::make_tuple(r.lambda_lo, r.lambda_hi);
    out["midpoint"] = r.midpoint();
    out["width"] = r.width();
    out["touchdown_times_monotone"] = r.touchdown_times_monotone;
    out["history"] = history;
    return out;
}

}  // namespace

PYBIND11_MODULE(_memsflow, mod) {
    mod.doc() = "Hinged-plate MEMS free-boundary simulator";

    static py::exception<Error> base_error(mod, "Error", PyExc_RuntimeError);
    static py::exception<InvalidParameter> invalid(mod, "InvalidParameter", PyExc_ValueError);
    static py::exception<NonAdmissible> non_admissible(mod, "NonAdmissible", base_error.ptr());
    static py::exception<InvalidBracket> invalid_bracket(mod, "InvalidBracket", base_error.ptr());
    py::register_exception_translator([](std::exception_ptr ptr) {
        try {
            if (ptr) std::rethrow_exception(ptr);
        } catch (const InvalidParameter& e) {
            py::set_error(invalid, e.what());
        } catch (const NonAdmissible& e) {
            py::set_error(non_admissible, e.what());
        } catch (const InvalidBracket& e) {
            py::set_error(invalid_bracket, e.what());
        } catch (const Error& e) {
            py::set_error(base_error, e.what());
        }
    });

    py::class_<Parameters>(mod, "Parameters")
        .def(py::init(&Parameters::make), py::arg("eps") = 1.0, py::arg("beta") = 1.0,
             py::arg("tau") = 0.0, py::arg("sigma") = 0.3, py::arg("lam") = 1.0)
        .def_readonly("eps", &Parameters::eps)
        .def_readonly("beta", &Parameters::beta)
        .def_readonly("tau", &Parameters::tau)
        .def_readonly("sigma", &Parameters::sigma)
        .def_readonly("lam", &Parameters::lambda)
        .def("with_lambda", &Parameters::with_lambda)
        .def("__repr__", [](const Parameters& p) {
            return "Parameters(eps=" + std::to_string(p.eps) + ", beta=" + std::to_string(p.beta) +
                   ", tau=" + std::to_string(p.tau) + ", sigma=" + std::to_string(p.sigma) +
                   ", lam=" + std::to_string(p.lambda) + ")";
        });

    mod.def("eigenvalue", &OperatorSpectrum::eigenvalue, py::arg("k"), py::arg("l"), py::arg("params"));
    mod.def(
        "spectrum",
        [](int n, const Parameters& p) {
            const OperatorSpectrum s(PlateGrid::make(n), p);
            Array out({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(n)});
            std::copy(s.values().begin(), s.values().end(), out.mutable_data());
            return out;
        },
        py::arg("n"), py::arg("params"), "Eigenvalues indexed [k-1, l-1].");

    mod.def(
        "solve_potential",
        [](const Array& v, const Parameters& p, int m, double boundary) {
            const PlateField field = to_plate(v, boundary);
            const PotentialField phi = solve_transformed_potential(field, p, cylinder_for(field, m));
            const auto side = static_cast<py::ssize_t>(field.grid().n + 2);
            Array out({side, side, static_cast<py::ssize_t>(phi.grid().m + 1)});
            std::copy(phi.values().begin(), phi.values().end(), out.mutable_data());
            return out;
        },
        py::arg("v"), py::arg("params"), py::arg("m") = 0, py::arg("boundary") = 0.0,
        "Transformed potential on the full cylinder grid, shape (n+2, n+2, m+1).");

    mod.def(
        "compute_g",
        [](const Array& v, const Parameters& p, int m, const std::string& route, double boundary) {
            const PlateField field = to_plate(v, boundary);
            return to_array(compute_g(field, p, cylinder_for(field, m), parse_route(route)));
        },
        py::arg("v"), py::arg("params"), py::arg("m") = 0, py::arg("route") = "trace",
        py::arg("boundary") = 0.0);

    mod.def(
        "mechanical_energy", [](const Array& u, const Parameters& p) { return mechanical_energy(to_plate(u), p); },
        py::arg("u"), py::arg("params"));
    mod.def(
        "electrostatic_energy",
        [](const Array& v, const Parameters& p, int m, double boundary) {
            const PlateField field = to_plate(v, boundary);
            const CylinderGrid grid = cylinder_for(field, m);
            return electrostatic_energy(field, solve_transformed_potential(field, p, grid), p);
        },
        py::arg("v"), py::arg("params"), py::arg("m") = 0, py::arg("boundary") = 0.0);

    mod.def(
        "admissible_check",
        [](const Array& v, int q, double rho) {
            const AdmissibilityReport r = admissible_check(to_plate(v), AdmissibleSetSpec{q, rho});
            py::dict out;
            out["member"] = r.member();
            out["norm"] = r.norm;
            out["norm_limit"] = r.norm_limit;
            out["min_value"] = r.min_value;
            out["gap_limit"] = r.gap_limit;
            return out;
        },
        py::arg("v"), py::arg("q") = 3, py::arg("rho") = 0.005);

    mod.def("simulate", &simulate_py, py::arg("u0"), py::arg("params"), py::arg("m") = 0,
            py::arg("dt") = 1e-4, py::arg("t_end") = 2.0, py::arg("sample_stride") = 10,
            py::arg("delta_stop") = 0.05, py::arg("rho") = 0.005, py::arg("route") = "variational",
            py::arg("stop_at_steady_state") = true);

    mod.def("estimate_lambda_star", &sweep_py, py::arg("n"), py::arg("params"), py::arg("lambda_lo") = 0.1,
            py::arg("lambda_hi") = 50.0, py::arg("tol") = 0.5, py::arg("dt") = 1e-4,
            py::arg("t_end") = 2.0, py::arg("prescan_points") = 0, py::arg("threads") = 1);

    mod.def(
        "verify",
        [](bool quick, std::uint64_t seed) {
            verify::Options o;
            o.quick = quick;
            o.seed = seed;
            std::vector<verify::CheckResult> results;
            {
                py::gil_scoped_release release;
                results = verify::run_suite(o);
            }
            py::list out;
            for (const auto& r : results) {
                py::dict d;
                d["name"] = r.name;
                d["passed"] = r.passed;
                d["detail"] = r.detail;
                d["metrics"] = r.metrics;
                out.append(d);
            }
            return out;
        },
        py::arg("quick") = true, py::arg("seed") = 1);
}
