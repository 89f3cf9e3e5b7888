#pragma once

#include <span>
#include <vector>

namespace memsflow::transform {

// Real-to-real transform kinds, unnormalized FFTW conventions.
// Sine: y_k = 2 sum_j x_j sin(pi (j+1)(k+1) / (N+1))
// Cosine: y_k = x_0 + (-1)^k x_{N-1} + 2 sum_{j=1}^{N-2} x_j cos(pi j k / (N-1))
enum class Kind { Sine, Cosine };

// In-place multi-dimensional transform over a row-major block with the given extents.
// Plans are cached per (extents, kinds) and shared; execution is thread-safe.
void apply(std::span<const int> extents, std::span<const Kind> kinds, std::span<double> data);

void sine_2d(int n0, int n1, std::span<double> data);
// Sine transform of each contiguous n0 x n1 plane in a block of `batch` planes.
void sine_2d_batched(int n0, int n1, int batch, std::span<double> data);
void sine_3d(int n0, int n1, int n2, std::span<double> data);

}  // namespace memsflow::transform
