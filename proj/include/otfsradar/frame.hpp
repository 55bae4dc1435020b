#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "otfsradar/common.hpp"
#include "otfsradar/fft.hpp"

namespace otfs {

/// OTFS numerology. Immutable after construction.
class FrameConfig {
public:
    FrameConfig(std::size_t m_subcarriers, std::size_t n_symbols,
                double subcarrier_spacing_hz, double wavelength_m,
                std::size_t stop_and_go_order)
        : m_(m_subcarriers),
          n_(n_symbols),
          delta_hz_(subcarrier_spacing_hz),
          lambda_m_(wavelength_m),
          b_(stop_and_go_order) {
        if (m_ == 0 || n_ == 0) throw ConfigError("FrameConfig: M and N must be positive");
        if (!(delta_hz_ > 0.0)) throw ConfigError("FrameConfig: subcarrier spacing must be positive");
        if (!(lambda_m_ > 0.0)) throw ConfigError("FrameConfig: wavelength must be positive");
        if (b_ == 0 || n_ % b_ != 0)
            throw ConfigError("FrameConfig: stop-and-go order B must divide N");
    }

    std::size_t m_subcarriers() const { return m_; }
    std::size_t n_symbols() const { return n_; }
    double subcarrier_spacing_hz() const { return delta_hz_; }
    double wavelength_m() const { return lambda_m_; }
    std::size_t stop_and_go_order() const { return b_; }

    double symbol_interval_s() const { return 1.0 / delta_hz_; }
    double frame_duration_s() const { return static_cast<double>(n_) * symbol_interval_s(); }
    double block_interval_s() const { return frame_duration_s() / static_cast<double>(b_); }
    std::size_t symbols_per_block() const { return n_ / b_; }

    /// Physical step of one delay bin, meters: c*T/M.
    double range_bin_step_m() const {
        return kSpeedOfLight * symbol_interval_s() / static_cast<double>(m_);
    }
    /// Physical step of one Doppler bin, m/s: lambda/(N*T).
    double range_rate_bin_step_mps() const { return lambda_m_ / frame_duration_s(); }

    /// Same numerology with a different stop-and-go order.
    FrameConfig with_stop_and_go_order(std::size_t b) const {
        return FrameConfig(m_, n_, delta_hz_, lambda_m_, b);
    }

    std::size_t grid_size() const { return m_ * n_; }

    bool operator==(const FrameConfig&) const = default;

private:
    std::size_t m_;
    std::size_t n_;
    double delta_hz_;
    double lambda_m_;
    std::size_t b_;
};

/// Inspected range / range-rate intervals. Construction enforces the
/// unambiguity conditions tau_max < T and nu_max < Delta.
class SceneWindow {
public:
    SceneWindow(double r_bar_min_m, double r_bar_max_m,
                double v_bar_min_mps, double v_bar_max_mps,
                const FrameConfig& cfg)
        : r_bar_min_m_(r_bar_min_m),
          r_bar_max_m_(r_bar_max_m),
          v_bar_min_mps_(v_bar_min_mps),
          v_bar_max_mps_(v_bar_max_mps) {
        if (r_bar_max_m_ < r_bar_min_m_)
            throw DomainError("SceneWindow: r_bar_max < r_bar_min");
        if (v_bar_max_mps_ < v_bar_min_mps_)
            throw DomainError("SceneWindow: v_bar_max < v_bar_min");
        if (!(tau_max_s() < cfg.symbol_interval_s()))
            throw DomainError("SceneWindow: tau_max >= T (range window too wide, ambiguous)");
        if (!(nu_max_hz(cfg) < cfg.subcarrier_spacing_hz()))
            throw DomainError("SceneWindow: nu_max >= Delta (range-rate window too wide, ambiguous)");
    }

    double r_bar_min_m() const { return r_bar_min_m_; }
    double r_bar_max_m() const { return r_bar_max_m_; }
    double v_bar_min_mps() const { return v_bar_min_mps_; }
    double v_bar_max_mps() const { return v_bar_max_mps_; }

    double r_max_m() const { return r_bar_max_m_ - r_bar_min_m_; }
    double v_max_mps() const { return v_bar_max_mps_ - v_bar_min_mps_; }
    double tau_max_s() const { return r_max_m() / kSpeedOfLight; }
    double nu_max_hz(const FrameConfig& cfg) const { return v_max_mps() / cfg.wavelength_m(); }

    bool contains(double excess_range_m, double excess_range_rate_mps) const {
        return excess_range_m >= 0.0 && excess_range_m <= r_max_m() &&
               excess_range_rate_mps >= 0.0 && excess_range_rate_mps <= v_max_mps();
    }

private:
    double r_bar_min_m_;
    double r_bar_max_m_;
    double v_bar_min_mps_;
    double v_bar_max_mps_;
};

namespace detail {
struct DelayDopplerTag {};
struct TimeFrequencyTag {};
}  // namespace detail

/// N x M complex grid, row-major. Rows index Doppler bin k (DD) or symbol
/// interval n (TF); columns index delay bin l (DD) or subcarrier m (TF).
template <class Tag>
class GridFrame {
public:
    GridFrame() = default;
    GridFrame(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, cd{0.0, 0.0}) {}
    explicit GridFrame(const FrameConfig& cfg) : GridFrame(cfg.n_symbols(), cfg.m_subcarriers()) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    cd& operator()(std::size_t row, std::size_t col) { return data_[row * cols_ + col]; }
    const cd& operator()(std::size_t row, std::size_t col) const { return data_[row * cols_ + col]; }

    cd* data() { return data_.data(); }
    const cd* data() const { return data_.data(); }
    std::vector<cd>& raw() { return data_; }
    const std::vector<cd>& raw() const { return data_; }

    bool matches(const FrameConfig& cfg) const {
        return rows_ == cfg.n_symbols() && cols_ == cfg.m_subcarriers();
    }

    double energy() const {
        double e = 0.0;
        for (const cd& v : data_) e += std::norm(v);
        return e;
    }

    GridFrame& operator+=(const GridFrame& o) {
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    GridFrame& operator-=(const GridFrame& o) {
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    GridFrame& operator*=(cd s) {
        for (cd& v : data_) v *= s;
        return *this;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cd> data_;
};

using DDFrame = GridFrame<detail::DelayDopplerTag>;
using TFFrame = GridFrame<detail::TimeFrequencyTag>;

namespace detail {
template <class OutTag, class InTag>
GridFrame<OutTag> sfft_impl(const GridFrame<InTag>& in, const FrameConfig& cfg, bool inverse) {
    if (!in.matches(cfg)) throw ConfigError("sfft/isfft: frame dimensions do not match config");
    const std::size_t n = cfg.n_symbols();
    const std::size_t m = cfg.m_subcarriers();
    GridFrame<OutTag> out(cfg);
    std::copy(in.data(), in.data() + in.size(), out.data());
    // ISFFT: inverse DFT along the Doppler axis (k -> n), forward DFT along
    // the delay axis (l -> m). SFFT applies the adjoint.
    for (std::size_t c = 0; c < m; ++c) fft::transform(out.data() + c, n, m, inverse);
    for (std::size_t r = 0; r < n; ++r) fft::transform(out.data() + r * m, m, 1, !inverse);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n * m));
    out *= scale;
    return out;
}
}  // namespace detail

/// X_TF[n,m] = (1/sqrt(NM)) sum_{k,l} X_DD[k,l] e^{i 2 pi (nk/N - ml/M)}
inline TFFrame isfft(const DDFrame& x_dd, const FrameConfig& cfg) {
    return detail::sfft_impl<detail::TimeFrequencyTag>(x_dd, cfg, true);
}

/// Y_DD[k,l] = (1/sqrt(NM)) sum_{n,m} Y_TF[n,m] e^{-i 2 pi (nk/N - ml/M)}
inline DDFrame sfft(const TFFrame& y_tf, const FrameConfig& cfg) {
    return detail::sfft_impl<detail::DelayDopplerTag>(y_tf, cfg, false);
}

/// I.i.d. unit-energy 4-QAM symbols, deterministic for a given seed.
inline DDFrame random_qam_frame(const FrameConfig& cfg, std::uint64_t seed) {
    static const cd kQam4[4] = {
        cd{M_SQRT1_2, M_SQRT1_2}, cd{M_SQRT1_2, -M_SQRT1_2},
        cd{-M_SQRT1_2, M_SQRT1_2}, cd{-M_SQRT1_2, -M_SQRT1_2}};
    DDFrame frame(cfg);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, 3);
    for (cd& v : frame.raw()) v = kQam4[pick(rng)];
    return frame;
}

/// Column-major stacking: element lN+k of the result is frame(k, l).
template <class Tag>
std::vector<cd> vectorize(const GridFrame<Tag>& frame) {
    std::vector<cd> out(frame.size());
    const std::size_t n = frame.rows();
    const std::size_t m = frame.cols();
    for (std::size_t l = 0; l < m; ++l)
        for (std::size_t k = 0; k < n; ++k) out[l * n + k] = frame(k, l);
    return out;
}

inline DDFrame devectorize(const std::vector<cd>& vec, const FrameConfig& cfg) {
    if (vec.size() != cfg.grid_size()) throw ConfigError("devectorize: length mismatch");
    DDFrame frame(cfg);
    const std::size_t n = cfg.n_symbols();
    for (std::size_t l = 0; l < cfg.m_subcarriers(); ++l)
        for (std::size_t k = 0; k < n; ++k) frame(k, l) = vec[l * n + k];
    return frame;
}

}  // namespace otfs
