#include "memsflow/sweep.hpp"

#include "memsflow/errors.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace memsflow {

void SweepSettings::validate() const {
    if (!(lambda_lo >= 0.0 && lambda_hi > lambda_lo))
        throw InvalidParameter("sweep: bracket must satisfy 0 <= lambda_lo < lambda_hi");
    if (!(tol > 0.0)) throw InvalidParameter("sweep: tolerance must be positive");
    if (prescan_points < 0) throw InvalidParameter("sweep: prescan_points must be >= 0");
    if (threads < 1) throw InvalidParameter("sweep: threads must be >= 1");
}

SweepEntry classify_lambda(double lambda, const PlateField& u0, const Parameters& base,
                           const CylinderGrid& grid, const SimulationSettings& sim,
                           const AdmissibleSetSpec& spec) {
    const SimulationTrace trace = simulate(u0, base.with_lambda(lambda), grid, sim, spec);
    SweepEntry e;
    e.lambda = lambda;
    e.status = trace.status;
    e.terminated = trace.status != Status::ReachedHorizon;
    e.touchdown = touchdown_time(trace);
    e.terminal_time = trace.terminal_time;
    e.steps = trace.steps;
    return e;
}

namespace {

std::vector<SweepEntry> run_batch(const std::vector<double>& lambdas, int threads,
                                  const PlateField& u0, const Parameters& base,
                                  const CylinderGrid& grid, const SimulationSettings& sim,
                                  const AdmissibleSetSpec& spec) {
    std::vector<SweepEntry> out(lambdas.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t q = next++; q < lambdas.size(); q = next++) {
            try {
                out[q] = classify_lambda(lambdas[q], u0, base, grid, sim, spec);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int count = std::min<int>(threads, static_cast<int>(lambdas.size()));
    if (count <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < count; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

void check_monotone(SweepResult& r) {
    std::vector<SweepEntry> sorted = r.history;
    std::sort(sorted.begin(), sorted.end(),
              [](const SweepEntry& a, const SweepEntry& b) { return a.lambda < b.lambda; });
    for (std::size_t q = 1; q < sorted.size(); ++q) {
        if (sorted[q - 1].terminated && !sorted[q].terminated) {
            std::ostringstream os;
            os << "classification is not monotone: lambda = " << sorted[q - 1].lambda
               << " terminates early but lambda = " << sorted[q].lambda
               << " reaches the horizon";
            throw NonMonotoneClassification(os.str());
        }
    }
    std::optional<double> previous;
    for (const auto& e : sorted) {
        if (!e.touchdown) continue;
        if (previous && *e.touchdown > *previous) r.touchdown_times_monotone = false;
        previous = e.touchdown;
    }
}

}  // namespace

SweepResult estimate_lambda_star(const PlateField& u0, const Parameters& base,
                                 const CylinderGrid& grid, const SimulationSettings& sim,
                                 const AdmissibleSetSpec& spec, const SweepSettings& sweep) {
    sweep.validate();
    SweepResult r;
    r.n = grid.plate.n;
    r.m = grid.m;
    r.dt = sim.dt;
    r.t_end = sim.t_end;
    r.delta_stop = sim.delta_stop;

    const auto ends =
        run_batch({sweep.lambda_lo, sweep.lambda_hi}, sweep.threads, u0, base, grid, sim, spec);
    r.history = ends;
    if (ends[0].terminated || !ends[1].terminated) {
        std::ostringstream os;
        os << "initial bracket (" << sweep.lambda_lo << ", " << sweep.lambda_hi
           << ") does not separate the outcomes: lower end "
           << (ends[0].terminated ? "terminates early" : "reaches the horizon") << ", upper end "
           << (ends[1].terminated ? "terminates early" : "reaches the horizon");
        throw InvalidBracket(os.str());
    }
    r.lambda_lo = sweep.lambda_lo;
    r.lambda_hi = sweep.lambda_hi;

    if (sweep.prescan_points > 0 && r.width() > sweep.tol) {
        std::vector<double> grid_lambdas;
        for (int q = 1; q <= sweep.prescan_points; ++q)
            grid_lambdas.push_back(r.lambda_lo + r.width() * q / (sweep.prescan_points + 1));
        const auto scan = run_batch(grid_lambdas, sweep.threads, u0, base, grid, sim, spec);
        r.history.insert(r.history.end(), scan.begin(), scan.end());
        check_monotone(r);
        for (const auto& e : scan) {
            if (e.terminated)
                r.lambda_hi = std::min(r.lambda_hi, e.lambda);
            else
                r.lambda_lo = std::max(r.lambda_lo, e.lambda);
        }
    }

    while (r.width() > sweep.tol) {
        const double mid = r.midpoint();
        SweepEntry e = classify_lambda(mid, u0, base, grid, sim, spec);
        r.history.push_back(e);
        check_monotone(r);
        if (e.terminated)
            r.lambda_hi = mid;
        else
            r.lambda_lo = mid;
    }
    check_monotone(r);
    return r;
}

}  // namespace memsflow
