#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace otfs {

using cd = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Invalid numerology / grid geometry (bad M, N, B, dimension mismatch).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Physical parameter outside its admissible window.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// e^{i*phi}
inline cd cis(double phi) { return {std::cos(phi), std::sin(phi)}; }

/// Deterministic 64-bit mixer (splitmix64 finalizer) for deriving
/// independent sub-stream seeds from (seed, index...) tuples.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(a) ^ (0x632be59bd9b4e019ull + b));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_seed(mix_seed(a, b) ^ (0x9e3779b97f4a7c15ull + c));
}

}  // namespace otfs
