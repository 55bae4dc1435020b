#pragma once

#include <cstddef>
#include <unordered_map>
#include <vector>

#include "otfsradar/common.hpp"

namespace otfs::fft {

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Twiddle table for one transform size, cached per thread.
struct Plan {
    std::size_t n = 0;
    std::vector<std::size_t> bitrev;
    std::vector<cd> twiddle;  // e^{-i*2*pi*j/len} for each stage, packed

    explicit Plan(std::size_t size) : n(size) {
        bitrev.resize(n);
        std::size_t log2n = 0;
        while ((std::size_t{1} << log2n) < n) ++log2n;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < log2n; ++b) r |= ((i >> b) & 1u) << (log2n - 1 - b);
            bitrev[i] = r;
        }
        twiddle.reserve(n);
        for (std::size_t len = 2; len <= n; len <<= 1)
            for (std::size_t j = 0; j < len / 2; ++j)
                twiddle.push_back(cis(-kTwoPi * static_cast<double>(j) / static_cast<double>(len)));
    }
};

inline const Plan& plan_for(std::size_t n) {
    thread_local std::unordered_map<std::size_t, Plan> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, Plan(n)).first;
    return it->second;
}

}  // namespace detail

/// In-place unscaled DFT of length n (stride-able):
///   forward:  X[k] = sum_j x[j] e^{-i 2 pi j k / n}
///   inverse:  X[k] = sum_j x[j] e^{+i 2 pi j k / n}
/// Radix-2 for power-of-two n, naive O(n^2) fallback otherwise.
inline void transform(cd* data, std::size_t n, std::size_t stride, bool inverse) {
    if (n <= 1) return;
    if (!detail::is_pow2(n)) {
        std::vector<cd> out(n, cd{0.0, 0.0});
        const double sign = inverse ? 1.0 : -1.0;
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < n; ++j)
                out[k] += data[j * stride] *
                          cis(sign * kTwoPi * static_cast<double>((j * k) % n) / static_cast<double>(n));
        for (std::size_t k = 0; k < n; ++k) data[k * stride] = out[k];
        return;
    }
    const auto& plan = detail::plan_for(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = plan.bitrev[i];
        if (i < r) std::swap(data[i * stride], data[r * stride]);
    }
    std::size_t tw_base = 0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t j = 0; j < half; ++j) {
                cd w = plan.twiddle[tw_base + j];
                if (inverse) w = std::conj(w);
                cd* lo = data + (start + j) * stride;
                cd* hi = data + (start + j + half) * stride;
                const cd t = *hi * w;
                *hi = *lo - t;
                *lo += t;
            }
        }
        tw_base += half;
    }
}

inline void forward(std::vector<cd>& x) { transform(x.data(), x.size(), 1, false); }
inline void inverse(std::vector<cd>& x) { transform(x.data(), x.size(), 1, true); }

/// Unscaled 2-D DFT of a rows x cols row-major grid (both axes, same direction).
inline void transform2d(cd* data, std::size_t rows, std::size_t cols, bool inverse) {
    for (std::size_t r = 0; r < rows; ++r) transform(data + r * cols, cols, 1, inverse);
    for (std::size_t c = 0; c < cols; ++c) transform(data + c, rows, cols, inverse);
}

}  // namespace otfs::fft
