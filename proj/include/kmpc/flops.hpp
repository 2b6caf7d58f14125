#pragma once

#include <cstdint>

namespace kmpc {

/// Floating-point operation tally. Kernels that participate in the on-line
/// budget take an optional pointer to one of these and add the exact count of
/// additions, multiplications, divisions, square roots and comparisons they
/// perform. A null pointer disables counting.
struct FlopCounter {
    std::uint64_t count = 0;

    void add(std::uint64_t flops) noexcept { count += flops; }
};

inline void count_flops(FlopCounter* counter, std::uint64_t flops) noexcept {
    if (counter != nullptr) {
        counter->add(flops);
    }
}

}  // namespace kmpc
