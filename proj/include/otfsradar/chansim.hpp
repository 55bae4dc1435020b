#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "otfsradar/frame.hpp"

namespace otfs {

/// Point scatterer in excess coordinates. The amplitude absorbs the initial
/// carrier phase of the excess range.
struct Target {
    double excess_range_m = 0.0;
    double excess_range_rate_mps = 0.0;
    cd amplitude{1.0, 0.0};
};

/// One simulation setup: numerology, inspected window, targets, noise level,
/// and the quadrature density (samples per symbol = oversample * M).
struct Scenario {
    FrameConfig cfg;
    SceneWindow window;
    std::vector<Target> targets;
    double noise_var = 0.0;
    std::size_t oversample = 4;
};

enum class MigrationGranularity { PerSymbol, PerBlock };

/// Per-symbol excess range samples r(nT), n = 0..N-1.
class RangeTrajectory {
public:
    static RangeTrajectory linear(double d, double v, const FrameConfig& cfg) {
        RangeTrajectory t;
        t.values_.resize(cfg.n_symbols());
        for (std::size_t n = 0; n < t.values_.size(); ++n)
            t.values_[n] = d - v * static_cast<double>(n) * cfg.symbol_interval_s();
        return t;
    }

    /// Freeze the range within each of the B blocks at its block-start value.
    RangeTrajectory quantized(std::size_t b_order, const FrameConfig& cfg) const {
        if (b_order == 0 || cfg.n_symbols() % b_order != 0)
            throw ConfigError("RangeTrajectory: block order must divide N");
        RangeTrajectory t;
        t.values_.resize(values_.size());
        const std::size_t q = cfg.n_symbols() / b_order;
        for (std::size_t n = 0; n < values_.size(); ++n) t.values_[n] = values_[(n / q) * q];
        return t;
    }

    double at_symbol(std::size_t n) const { return values_[n]; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> values_;
};

namespace detail {

/// Samples of the delayed symbol waveform x_row(t - tau) at the midpoint
/// nodes u_s = (s + 1/2) T / S of one symbol window, added into acc where
/// mask_lower <= u_s/T < mask_upper. The waveform is the analytic subcarrier
/// sum, so fractional delay is exact.
inline void accumulate_delayed_symbol(std::vector<cd>& acc, const TFFrame& x_tf, std::size_t row,
                                      double tau_over_t, double mask_lower, double mask_upper,
                                      const FrameConfig& cfg, std::size_t s_count) {
    const std::size_t m = cfg.m_subcarriers();
    std::vector<cd> buf(s_count, cd{0.0, 0.0});
    const double inv_sqrt_t = 1.0 / std::sqrt(cfg.symbol_interval_s());
    for (std::size_t mm = 0; mm < m; ++mm) {
        // e^{i 2 pi m Delta (u_s - tau)} = e^{i pi m / S} e^{-i 2 pi m tau/T} e^{i 2 pi m s / S}
        buf[mm] = x_tf(row, mm) * inv_sqrt_t *
                  cis(kPi * static_cast<double>(mm) / static_cast<double>(s_count) -
                      kTwoPi * static_cast<double>(mm) * tau_over_t);
    }
    fft::transform(buf.data(), s_count, 1, true);
    for (std::size_t s = 0; s < s_count; ++s) {
        const double u = (static_cast<double>(s) + 0.5) / static_cast<double>(s_count);
        if (u >= mask_lower && u < mask_upper) acc[s] += buf[s];
    }
}

}  // namespace detail

/// Noiseless delay-Doppler echo of all targets, computed independently of the
/// closed-form models: analytic per-symbol waveforms with exact fractional
/// delay, midpoint quadrature of the receive-filter projection integral, then
/// the SFFT. Rectangular shaping filters on both ends; the echo of symbol
/// n-1 spills into window n (no spill into n = 0, a guard interval precedes
/// the frame).
inline DDFrame oracle_echo_dd(const Scenario& scenario, const DDFrame& x_dd,
                              MigrationGranularity granularity) {
    const FrameConfig& cfg = scenario.cfg;
    if (!x_dd.matches(cfg)) throw ConfigError("oracle_echo_dd: frame/config mismatch");
    if (scenario.oversample < 2) throw ConfigError("oracle_echo_dd: oversample must be >= 2");
    for (const Target& t : scenario.targets)
        if (!scenario.window.contains(t.excess_range_m, t.excess_range_rate_mps))
            throw DomainError("oracle_echo_dd: target outside the scene window");

    const std::size_t n_sym = cfg.n_symbols();
    const std::size_t m_sub = cfg.m_subcarriers();
    const std::size_t s_count = scenario.oversample * m_sub;
    const double t_sym = cfg.symbol_interval_s();
    const TFFrame x_tf = isfft(x_dd, cfg);

    std::vector<RangeTrajectory> traj;
    traj.reserve(scenario.targets.size());
    for (const Target& t : scenario.targets) {
        RangeTrajectory r = RangeTrajectory::linear(t.excess_range_m, t.excess_range_rate_mps, cfg);
        if (granularity == MigrationGranularity::PerBlock)
            r = r.quantized(cfg.stop_and_go_order(), cfg);
        traj.push_back(std::move(r));
    }

    TFFrame y_tf(cfg);
    std::vector<cd> window_nodes(s_count);
    std::vector<cd> target_nodes(s_count);
    for (std::size_t n = 0; n < n_sym; ++n) {
        std::fill(window_nodes.begin(), window_nodes.end(), cd{0.0, 0.0});
        for (std::size_t p = 0; p < scenario.targets.size(); ++p) {
            const Target& tg = scenario.targets[p];
            std::fill(target_nodes.begin(), target_nodes.end(), cd{0.0, 0.0});
            const double tau_n = traj[p].at_symbol(n) / (kSpeedOfLight * t_sym);
            detail::accumulate_delayed_symbol(target_nodes, x_tf, n, tau_n, tau_n, 1.0, cfg,
                                              s_count);
            if (n > 0) {
                const double tau_prev = traj[p].at_symbol(n - 1) / (kSpeedOfLight * t_sym);
                detail::accumulate_delayed_symbol(target_nodes, x_tf, n - 1, tau_prev, 0.0,
                                                  tau_prev, cfg, s_count);
            }
            const double dop = tg.excess_range_rate_mps / cfg.wavelength_m();  // Hz
            for (std::size_t s = 0; s < s_count; ++s) {
                const double t_abs =
                    (static_cast<double>(n) +
                     (static_cast<double>(s) + 0.5) / static_cast<double>(s_count)) *
                    t_sym;
                window_nodes[s] += tg.amplitude * target_nodes[s] * cis(kTwoPi * dop * t_abs);
            }
        }
        fft::transform(window_nodes.data(), s_count, 1, false);
        const double w = std::sqrt(t_sym) / static_cast<double>(s_count);
        for (std::size_t mm = 0; mm < m_sub; ++mm)
            y_tf(n, mm) = w * cis(-kPi * static_cast<double>(mm) / static_cast<double>(s_count)) *
                          window_nodes[mm];
    }
    return sfft(y_tf, cfg);
}

/// z = y + omega, i.i.d. circular Gaussian with per-entry variance noise_var.
inline DDFrame add_noise(const DDFrame& y, double noise_var, std::uint64_t seed) {
    if (noise_var < 0.0) throw DomainError("add_noise: negative variance");
    DDFrame z = y;
    if (noise_var == 0.0) return z;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise_var / 2.0));
    for (cd& v : z.raw()) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        v += cd{re, im};
    }
    return z;
}

/// sigma_omega^2 = E[|alpha|^2] N M / SNR.
inline double snr_to_noise_var(double snr_linear, double mean_amp_sq, const FrameConfig& cfg) {
    if (!(snr_linear > 0.0)) throw DomainError("snr_to_noise_var: SNR must be positive");
    return mean_amp_sq * static_cast<double>(cfg.grid_size()) / snr_linear;
}

/// Swerling I amplitude: complex circular Gaussian with E[|alpha|^2] = mean_power.
inline cd draw_swerling1_amplitude(double mean_power, std::uint64_t seed) {
    if (!(mean_power > 0.0)) throw DomainError("draw_swerling1_amplitude: mean power must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(mean_power / 2.0));
    const double re = gauss(rng);
    const double im = gauss(rng);
    return cd{re, im};
}

}  // namespace otfs
