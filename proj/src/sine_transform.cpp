#include "memsflow/sine_transform.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace memsflow::transform {
namespace {

// Extents, then the batch count (0 when unbatched) followed by the kinds.
using Key = std::pair<std::vector<int>, std::vector<int>>;

struct PlanCache {
    std::mutex mutex;
    std::map<Key, fftw_plan> plans;

    ~PlanCache() {
        for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
    }
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

fftw_plan plan_for(std::span<const int> extents, std::span<const Kind> kinds, int batch = 0) {
    Key key{std::vector<int>(extents.begin(), extents.end()), {batch}};
    for (Kind k : kinds) key.second.push_back(static_cast<int>(k));

    auto& c = cache();
    std::lock_guard lock(c.mutex);
    if (auto it = c.plans.find(key); it != c.plans.end()) return it->second;

    std::size_t total = batch > 0 ? static_cast<std::size_t>(batch) : 1;
    for (int e : extents) total *= static_cast<std::size_t>(e);
    std::vector<fftw_r2r_kind> fk;
    for (Kind k : kinds) fk.push_back(k == Kind::Sine ? FFTW_RODFT00 : FFTW_REDFT00);

    // Planning with ESTIMATE keeps results bitwise reproducible from run to run.
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int rank = static_cast<int>(extents.size());
    double* scratch = fftw_alloc_real(total);
    fftw_plan plan = batch > 0
                         ? fftw_plan_many_r2r(rank, extents.data(), batch, scratch, nullptr, 1,
                                              static_cast<int>(total / batch), scratch, nullptr,
                                              1, static_cast<int>(total / batch), fk.data(), flags)
                         : fftw_plan_r2r(rank, extents.data(), scratch, scratch, fk.data(), flags);
    fftw_free(scratch);
    if (!plan) throw std::runtime_error("fftw: plan creation failed");
    c.plans.emplace(std::move(key), plan);
    return plan;
}

}  // namespace

void apply(std::span<const int> extents, std::span<const Kind> kinds, std::span<double> data) {
    if (extents.size() != kinds.size()) throw std::invalid_argument("transform: rank mismatch");
    std::size_t total = 1;
    for (int e : extents) total *= static_cast<std::size_t>(e);
    if (data.size() != total) throw std::invalid_argument("transform: size mismatch");
    fftw_execute_r2r(plan_for(extents, kinds), data.data(), data.data());
}

void sine_2d(int n0, int n1, std::span<double> data) {
    const int ext[2] = {n0, n1};
    const Kind kinds[2] = {Kind::Sine, Kind::Sine};
    apply(ext, kinds, data);
}

void sine_2d_batched(int n0, int n1, int batch, std::span<double> data) {
    const int ext[2] = {n0, n1};
    const Kind kinds[2] = {Kind::Sine, Kind::Sine};
    const std::size_t total = static_cast<std::size_t>(n0) * n1 * batch;
    if (data.size() != total) throw std::invalid_argument("transform: size mismatch");
    fftw_execute_r2r(plan_for(ext, kinds, batch), data.data(), data.data());
}

void sine_3d(int n0, int n1, int n2, std::span<double> data) {
    const int ext[3] = {n0, n1, n2};
    const Kind kinds[3] = {Kind::Sine, Kind::Sine, Kind::Sine};
    apply(ext, kinds, data);
}

}  // namespace memsflow::transform
