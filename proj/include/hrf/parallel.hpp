#pragma once

#include <cstddef>

namespace hrf {

/// Execution policy for grid kernels. `Serial` is the reference path used in
/// tests; `Parallel` distributes indices over OpenMP threads. Kernels write
/// per-index outputs only, so both paths produce identical bits.
enum class Exec { Serial, Parallel };

template <class F>
void for_each_index(Exec exec, std::size_t count, F&& body) {
    const auto n = static_cast<std::ptrdiff_t>(count);
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
    }
}

}  // namespace hrf
