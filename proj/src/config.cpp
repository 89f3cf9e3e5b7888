#include "memsflow/config.hpp"

#include "memsflow/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>

namespace memsflow {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"domain", {"n", "m"}},
        {"parameters", {"eps", "beta", "tau", "sigma", "lambda"}},
        {"time",
         {"dt", "t_end", "sample_stride", "lambda_iteration", "lambda_iteration_max",
          "lambda_iteration_tol", "stop_at_steady_state", "steady_tol", "steady_window",
          "touchdown_refinements"}},
        {"admissibility", {"q", "rho", "delta_stop"}},
        {"output", {"dir", "dump_fields"}},
        {"initial", {"shape", "amplitude", "k", "l", "random_modes", "seed"}},
        {"sweep", {"lambda_lo", "lambda_hi", "tol", "prescan_points"}},
        {"solver", {"tolerance", "preconditioner", "g_route", "direct_limit"}},
    };
    return s;
}

template <class T>
void read(const pt::ptree& tree, const char* path, T& target) {
    try {
        if (tree.get_child_optional(path)) target = tree.get<T>(path);
    } catch (const pt::ptree_bad_data&) {
        throw InvalidParameter(std::string("config: cannot parse value of ") + path);
    }
}

}  // namespace

void Config::validate() const {
    CylinderGrid::make(n, m);
    params.validate();
    sim.validate();
    admissibility.validate();
    sweep.validate();
    if (initial.shape != "zero" && initial.shape != "mode" && initial.shape != "random")
        throw InvalidParameter("config: initial.shape must be zero, mode or random");
    if (initial.k < 1 || initial.l < 1 || initial.k > n || initial.l > n)
        throw InvalidParameter("config: initial mode indices must lie in [1, n]");
    if (initial.random_modes < 1) throw InvalidParameter("config: random_modes must be >= 1");
}

Config parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw InvalidParameter(std::string("config: ") + e.what());
    }
    for (const auto& [section, body] : tree) {
        auto it = schema().find(section);
        if (it == schema().end()) throw InvalidParameter("config: unknown section [" + section + "]");
        for (const auto& [key, value] : body)
            if (!it->second.count(key))
                throw InvalidParameter("config: unknown key " + section + "." + key);
    }

    Config c;
    read(tree, "domain.n", c.n);
    read(tree, "domain.m", c.m);
    read(tree, "parameters.eps", c.params.eps);
    read(tree, "parameters.beta", c.params.beta);
    read(tree, "parameters.tau", c.params.tau);
    read(tree, "parameters.sigma", c.params.sigma);
    read(tree, "parameters.lambda", c.params.lambda);
    read(tree, "time.dt", c.sim.dt);
    read(tree, "time.t_end", c.sim.t_end);
    read(tree, "time.sample_stride", c.sim.sample_stride);
    read(tree, "time.lambda_iteration", c.sim.lambda_iteration);
    read(tree, "time.lambda_iteration_max", c.sim.lambda_iteration_max);
    read(tree, "time.lambda_iteration_tol", c.sim.lambda_iteration_tol);
    read(tree, "time.stop_at_steady_state", c.sim.stop_at_steady_state);
    read(tree, "time.steady_tol", c.sim.steady_tol);
    read(tree, "time.steady_window", c.sim.steady_window);
    read(tree, "time.touchdown_refinements", c.sim.touchdown_refinements);
    read(tree, "admissibility.q", c.admissibility.q);
    read(tree, "admissibility.rho", c.admissibility.rho);
    read(tree, "admissibility.delta_stop", c.sim.delta_stop);
    read(tree, "output.dir", c.out_dir);
    read(tree, "output.dump_fields", c.dump_fields);
    read(tree, "initial.shape", c.initial.shape);
    read(tree, "initial.amplitude", c.initial.amplitude);
    read(tree, "initial.k", c.initial.k);
    read(tree, "initial.l", c.initial.l);
    read(tree, "initial.random_modes", c.initial.random_modes);
    read(tree, "initial.seed", c.seed);
    read(tree, "sweep.lambda_lo", c.sweep.lambda_lo);
    read(tree, "sweep.lambda_hi", c.sweep.lambda_hi);
    read(tree, "sweep.tol", c.sweep.tol);
    read(tree, "sweep.prescan_points", c.sweep.prescan_points);
    read(tree, "solver.tolerance", c.sim.solver.tolerance);
    read(tree, "solver.direct_limit", c.sim.solver.direct_limit);

    std::string pre = "fast_sine", route = "variational";
    read(tree, "solver.preconditioner", pre);
    read(tree, "solver.g_route", route);
    if (pre == "fast_sine")
        c.sim.solver.preconditioner = Preconditioner::FastSine;
    else if (pre == "jacobi")
        c.sim.solver.preconditioner = Preconditioner::Jacobi;
    else
        throw InvalidParameter("config: solver.preconditioner must be fast_sine or jacobi");
    if (route == "variational")
        c.sim.g_route = GRoute::Variational;
    else if (route == "trace")
        c.sim.g_route = GRoute::Trace;
    else
        throw InvalidParameter("config: solver.g_route must be variational or trace");

    c.validate();
    return c;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("config: cannot open " + path);
    return parse_config(in);
}

// Shortest text that reads back to the same double.
std::string shortest(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_config(const Config& c, std::ostream& out) {
    auto flag = [](bool b) { return b ? "true" : "false"; };
    out << "[domain]\nn = " << c.n << "\nm = " << c.m << "\n\n";
    out << "[parameters]\neps = " << shortest(c.params.eps) << "\nbeta = " << shortest(c.params.beta)
        << "\ntau = " << shortest(c.params.tau) << "\nsigma = " << shortest(c.params.sigma)
        << "\nlambda = " << shortest(c.params.lambda) << "\n\n";
    out << "[time]\ndt = " << shortest(c.sim.dt) << "\nt_end = " << shortest(c.sim.t_end)
        << "\nsample_stride = " << c.sim.sample_stride
        << "\nlambda_iteration = " << flag(c.sim.lambda_iteration)
        << "\nlambda_iteration_max = " << c.sim.lambda_iteration_max
        << "\nlambda_iteration_tol = " << shortest(c.sim.lambda_iteration_tol)
        << "\nstop_at_steady_state = " << flag(c.sim.stop_at_steady_state)
        << "\nsteady_tol = " << shortest(c.sim.steady_tol) << "\nsteady_window = " << c.sim.steady_window
        << "\ntouchdown_refinements = " << c.sim.touchdown_refinements << "\n\n";
    out << "[admissibility]\nq = " << c.admissibility.q << "\nrho = " << shortest(c.admissibility.rho)
        << "\ndelta_stop = " << shortest(c.sim.delta_stop) << "\n\n";
    out << "[output]\ndir = " << c.out_dir << "\ndump_fields = " << flag(c.dump_fields) << "\n\n";
    out << "[initial]\nshape = " << c.initial.shape << "\namplitude = " << shortest(c.initial.amplitude)
        << "\nk = " << c.initial.k << "\nl = " << c.initial.l
        << "\nrandom_modes = " << c.initial.random_modes << "\nseed = " << c.seed << "\n\n";
    out << "[sweep]\nlambda_lo = " << shortest(c.sweep.lambda_lo) << "\nlambda_hi = " << shortest(c.sweep.lambda_hi)
        << "\ntol = " << shortest(c.sweep.tol) << "\nprescan_points = " << c.sweep.prescan_points << "\n\n";
    out << "[solver]\ntolerance = " << shortest(c.sim.solver.tolerance) << "\npreconditioner = "
        << (c.sim.solver.preconditioner == Preconditioner::FastSine ? "fast_sine" : "jacobi")
        << "\ng_route = " << (c.sim.g_route == GRoute::Variational ? "variational" : "trace")
        << "\ndirect_limit = " << c.sim.solver.direct_limit << "\n";
}

PlateField make_initial_state(const Config& c) {
    const PlateGrid grid = PlateGrid::make(c.n);
    const double pi = std::numbers::pi;
    if (c.initial.shape == "zero") return PlateField(grid);
    if (c.initial.shape == "mode") {
        const double a = c.initial.amplitude;
        const int k = c.initial.k, l = c.initial.l;
        return PlateField::sample(grid, [&](double x, double y) {
            return a * std::sin(k * pi * x) * std::sin(l * pi * y);
        });
    }
    // Smooth random field normalized to the requested max amplitude.
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> normal;
    SpectralField coeff(grid);
    const int modes = std::min(c.initial.random_modes, c.n);
    for (int k = 1; k <= modes; ++k)
        for (int l = 1; l <= modes; ++l) coeff(k, l) = normal(rng) / (k * k + l * l);
    PlateField v = to_nodal(coeff);
    const double peak = std::max(std::abs(v.min()), std::abs(v.max()));
    if (peak > 0.0) v *= c.initial.amplitude / peak;
    return v;
}

}  // namespace memsflow
