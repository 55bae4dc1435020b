#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "otfsradar/frame.hpp"

namespace otfs {

/// Periodic sinc (Dirichlet) of degree Q: (1/Q) sum_{q=0}^{Q-1} e^{-i 2 pi nu q}.
/// Closed quotient form away from integers, series limit at/near them.
inline cd dirichlet(std::size_t q, double nu) {
    const double qd = static_cast<double>(q);
    const double frac = nu - std::round(nu);
    if (std::abs(frac) < 1e-9) {
        // sin(pi f Q) / (Q sin(pi f)) ~ 1 - (pi f)^2 (Q^2 - 1)/6
        const double mag = 1.0 - (kPi * frac) * (kPi * frac) * (qd * qd - 1.0) / 6.0;
        return cis(-kPi * frac * (qd - 1.0)) * mag;
    }
    return (cis(-kTwoPi * nu * qd) - 1.0) / (qd * (cis(-kTwoPi * nu) - 1.0));
}

enum class ModelKind { IdealPhi, RectPsi, RectApprox };

/// Per-block excess ranges r(b*T_B) = d - v * b * T_B for b = 0..B-1.
inline std::vector<double> block_ranges(double d, double v, const FrameConfig& cfg) {
    std::vector<double> r(cfg.stop_and_go_order());
    for (std::size_t b = 0; b < r.size(); ++b)
        r[b] = d - v * static_cast<double>(b) * cfg.block_interval_s();
    return r;
}

/// Integer/fractional split of the delay/Doppler bin coordinates, with the
/// fractional part in (-0.5, 0.5]. Integer parts are wrapped onto the grid,
/// so reconstruction is exact modulo one delay (Doppler) period.
struct BinDecomposition {
    int k_int = 0;
    double k_fra = 0.0;
    std::vector<int> l_int;   // per block b
    std::vector<double> l_fra;

    double reconstruct_range_rate(const FrameConfig& cfg) const {
        return (static_cast<double>(k_int) + k_fra) * cfg.range_rate_bin_step_mps();
    }
    double reconstruct_range(std::size_t b, const FrameConfig& cfg) const {
        return (static_cast<double>(l_int[b]) + l_fra[b]) * cfg.range_bin_step_m();
    }
};

namespace detail {

/// Split x into integer + fractional with fractional in (-0.5, 0.5].
inline std::pair<long, double> split_half_open(double x) {
    const long n = static_cast<long>(std::ceil(x - 0.5));
    return {n, x - static_cast<double>(n)};
}

inline int wrap_index(long i, std::size_t period) {
    const long p = static_cast<long>(period);
    long r = i % p;
    if (r < 0) r += p;
    return static_cast<int>(r);
}

}  // namespace detail

inline BinDecomposition decompose_bins(double d, double v, const FrameConfig& cfg) {
    if (d < 0.0 || d >= kSpeedOfLight * cfg.symbol_interval_s())
        throw DomainError("decompose_bins: excess range outside [0, c*T)");
    if (v < 0.0 || v >= cfg.wavelength_m() * cfg.subcarrier_spacing_hz())
        throw DomainError("decompose_bins: excess range-rate outside [0, lambda*Delta)");
    BinDecomposition out;
    const auto [ki, kf] = detail::split_half_open(v / cfg.range_rate_bin_step_mps());
    out.k_int = detail::wrap_index(ki, cfg.n_symbols());
    out.k_fra = kf;
    const auto ranges = block_ranges(d, v, cfg);
    out.l_int.reserve(ranges.size());
    out.l_fra.reserve(ranges.size());
    for (double r : ranges) {
        const auto [li, lf] = detail::split_half_open(r / cfg.range_bin_step_m());
        out.l_int.push_back(detail::wrap_index(li, cfg.m_subcarriers()));
        out.l_fra.push_back(lf);
    }
    return out;
}

namespace detail {

/// Doppler-axis factor of one stop-and-go block:
///   a_b[k] = e^{-i 2 pi (k/N - vT/lambda) bN/B} * D_{N/B}(k/N - vT/lambda)
inline std::vector<cd> doppler_factor(std::size_t b, double dop_norm, const FrameConfig& cfg) {
    const std::size_t n = cfg.n_symbols();
    const std::size_t q = cfg.symbols_per_block();
    const double shift = static_cast<double>(b * q);
    std::vector<cd> a(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double nu = static_cast<double>(k) / static_cast<double>(n) - dop_norm;
        a[k] = cis(-kTwoPi * nu * shift) * dirichlet(q, nu);
    }
    return a;
}

/// Delay-axis factor: c_b[l] = D_M(-(l/M - r_b * Delta / c)).
inline std::vector<cd> delay_factor(double range_norm, const FrameConfig& cfg) {
    const std::size_t m = cfg.m_subcarriers();
    std::vector<cd> c(m);
    for (std::size_t l = 0; l < m; ++l)
        c[l] = dirichlet(m, -(static_cast<double>(l) / static_cast<double>(m) - range_norm));
    return c;
}

}  // namespace detail

/// Ideal-filter target response Phi[k,l] on the full N x M grid, built from
/// an explicit per-block range trajectory (B values) and range-rate v.
inline DDFrame phi_ideal_from_trajectory(double v, const std::vector<double>& range_blocks_m,
                                         const FrameConfig& cfg) {
    if (range_blocks_m.size() != cfg.stop_and_go_order())
        throw ConfigError("phi_ideal: trajectory length must equal B");
    const double t_sym = cfg.symbol_interval_s();
    const double dop_norm = v * t_sym / cfg.wavelength_m();  // vT/lambda
    DDFrame phi(cfg);
    const double w = 1.0 / static_cast<double>(cfg.stop_and_go_order());
    for (std::size_t b = 0; b < range_blocks_m.size(); ++b) {
        const auto a = detail::doppler_factor(b, dop_norm, cfg);
        const auto c = detail::delay_factor(range_blocks_m[b] / (kSpeedOfLight * t_sym), cfg);
        for (std::size_t k = 0; k < cfg.n_symbols(); ++k) {
            const cd ak = w * a[k];
            for (std::size_t l = 0; l < cfg.m_subcarriers(); ++l) phi(k, l) += ak * c[l];
        }
    }
    return phi;
}

inline DDFrame phi_ideal(double d, double v, const FrameConfig& cfg) {
    return phi_ideal_from_trajectory(v, block_ranges(d, v, cfg), cfg);
}

/// Exact rectangular-filter response Psi_{k',l'}[k,l], evaluated pointwise.
/// The (k,l) arguments are periodic offsets and may be any integers.
class PsiKernel {
public:
    PsiKernel(double d, double v, const FrameConfig& cfg)
        : cfg_(cfg),
          dop_norm_(v * cfg.symbol_interval_s() / cfg.wavelength_m()),
          ranges_(block_ranges(d, v, cfg)) {
        const double t_sym = cfg.symbol_interval_s();
        for (double r : ranges_) {
            range_norm_.push_back(r / (kSpeedOfLight * t_sym));
            // e^{i 2 pi (v/lambda)(r_b/c)}
            block_phase_.push_back(cis(kTwoPi * v * r / (cfg.wavelength_m() * kSpeedOfLight)));
            zone_boundary_.push_back(zone_boundary(r, cfg));
        }
    }

    /// First l' index (per block) belonging to the wrapped (ISI) zone:
    /// ceil(M - r_b M / (cT)), with a half-ulp guard against boundary flips.
    static long zone_boundary(double range_m, const FrameConfig& cfg) {
        const double x = static_cast<double>(cfg.m_subcarriers()) *
                         (1.0 - range_m / (kSpeedOfLight * cfg.symbol_interval_s()));
        const long zb = static_cast<long>(std::ceil(x - 1e-9));
        return std::clamp<long>(zb, 0, static_cast<long>(cfg.m_subcarriers()));
    }

    cd operator()(std::size_t k_in, std::size_t l_in, long k, long l) const {
        const std::size_t b_count = cfg_.stop_and_go_order();
        cd sum{0.0, 0.0};
        for (std::size_t b = 0; b < b_count; ++b) sum += block_term(b, k_in, l_in, k, l);
        return sum / static_cast<double>(b_count);
    }

    cd block_term(std::size_t b, std::size_t k_in, std::size_t l_in, long k, long l) const {
        const double n = static_cast<double>(cfg_.n_symbols());
        const double m = static_cast<double>(cfg_.m_subcarriers());
        const std::size_t q = cfg_.symbols_per_block();
        const double nu = static_cast<double>(k) / n - dop_norm_;
        const cd block_shift = cis(-kTwoPi * nu * static_cast<double>(b * q));
        if (static_cast<long>(l_in) < zone_boundary_[b]) {
            return block_phase_[b] * cis(kTwoPi * dop_norm_ * static_cast<double>(l_in) / m) *
                   block_shift * dirichlet(q, nu) *
                   dirichlet(cfg_.m_subcarriers(), -(static_cast<double>(l) / m - range_norm_[b]));
        }
        cd dop = dirichlet(q, nu);
        if (b == 0) dop -= static_cast<double>(cfg_.stop_and_go_order()) / n;
        return cis(-kTwoPi * static_cast<double>(k_in) / n) * block_phase_[b] *
               cis(kTwoPi * dop_norm_ * (static_cast<double>(l_in) - m) / m) * block_shift * dop *
               dirichlet(cfg_.m_subcarriers(),
                         -((static_cast<double>(l) + m) / m - range_norm_[b]));
    }

    const std::vector<long>& zone_boundaries() const { return zone_boundary_; }

private:
    FrameConfig cfg_;
    double dop_norm_;
    std::vector<double> ranges_;
    std::vector<double> range_norm_;
    std::vector<cd> block_phase_;
    std::vector<long> zone_boundary_;
};

inline PsiKernel psi_rect(double d, double v, const FrameConfig& cfg) {
    return PsiKernel(d, v, cfg);
}

/// The factors of the modified symbol matrix Xi = X (.) Theta (.) Lambda(v_ref),
/// exposed entrywise in the (lN+k, l'N+k') block-vector indexing.
class ModifiedSymbolMatrix {
public:
    ModifiedSymbolMatrix(DDFrame x_dd, const FrameConfig& cfg, double rate_ref_mps)
        : x_(std::move(x_dd)), cfg_(cfg), rate_ref_mps_(rate_ref_mps) {
        if (!x_.matches(cfg)) throw ConfigError("ModifiedSymbolMatrix: frame/config mismatch");
    }

    /// Theta_{k',l'}[k,l]: 1 on l' <= l, e^{-i 2 pi (k-k')/N} on l < l'.
    cd theta(std::size_t k, std::size_t l, std::size_t k_in, std::size_t l_in) const {
        if (l_in <= l) return cd{1.0, 0.0};
        return cis(-kTwoPi * (static_cast<double>(k) - static_cast<double>(k_in)) /
                   static_cast<double>(cfg_.n_symbols()));
    }

    /// Lambda(v_ref) row factor: e^{i 2 pi v_ref T l / (lambda M)}.
    cd lambda_factor(std::size_t l) const {
        return cis(kTwoPi * rate_ref_mps_ * cfg_.symbol_interval_s() * static_cast<double>(l) /
                   (cfg_.wavelength_m() * static_cast<double>(cfg_.m_subcarriers())));
    }

    cd symbol(std::size_t k, std::size_t l, std::size_t k_in, std::size_t l_in) const {
        const std::size_t n = cfg_.n_symbols(), m = cfg_.m_subcarriers();
        return x_((k + n - k_in % n) % n, (l + m - l_in % m) % m);
    }

    cd xi(std::size_t k, std::size_t l, std::size_t k_in, std::size_t l_in) const {
        return symbol(k, l, k_in, l_in) * theta(k, l, k_in, l_in) * lambda_factor(l);
    }

    const DDFrame& symbols() const { return x_; }
    const FrameConfig& config() const { return cfg_; }
    double rate_ref_mps() const { return rate_ref_mps_; }

private:
    DDFrame x_;
    FrameConfig cfg_;
    double rate_ref_mps_;
};

inline ModifiedSymbolMatrix build_modified_symbols(const DDFrame& x_dd, const FrameConfig& cfg,
                                                   const SceneWindow& window) {
    return ModifiedSymbolMatrix(x_dd, cfg, window.v_max_mps() / 2.0);
}

/// Bins where the response of a target at (d, v) is non-negligible, to
/// sidelobe order D: Doppler band of half-width D*B around k_int, union of
/// per-block delay bands of half-width D around l_{b,int}.
struct SupportSet {
    std::vector<int> doppler_bins;  // sorted, unique
    std::vector<int> delay_bins;    // sorted, unique

    std::size_t size() const { return doppler_bins.size() * delay_bins.size(); }
    bool contains(int k, int l) const {
        return std::binary_search(doppler_bins.begin(), doppler_bins.end(), k) &&
               std::binary_search(delay_bins.begin(), delay_bins.end(), l);
    }
};

inline SupportSet response_support(double d, double v, const FrameConfig& cfg, int sidelobe_order) {
    if (sidelobe_order < 0 ||
        static_cast<std::size_t>(2 * sidelobe_order + 1) > cfg.m_subcarriers())
        throw DomainError("response_support: sidelobe order out of range");
    const auto bins = decompose_bins(d, v, cfg);
    SupportSet out;
    const int n = static_cast<int>(cfg.n_symbols());
    const int m = static_cast<int>(cfg.m_subcarriers());
    const int dop_half = std::min(sidelobe_order * static_cast<int>(cfg.stop_and_go_order()),
                                  (n - 1) / 2 + (n + 1) % 2);
    for (int off = -dop_half; off <= dop_half; ++off)
        out.doppler_bins.push_back(detail::wrap_index(bins.k_int + off, cfg.n_symbols()));
    for (std::size_t b = 0; b < bins.l_int.size(); ++b)
        for (int off = -sidelobe_order; off <= sidelobe_order; ++off)
            out.delay_bins.push_back(detail::wrap_index(bins.l_int[b] + off, cfg.m_subcarriers()));
    auto dedupe = [](std::vector<int>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    dedupe(out.doppler_bins);
    dedupe(out.delay_bins);
    (void)m;
    return out;
}

namespace detail {

/// Circular 2-D convolution of two N x M grids via transform-domain product.
inline DDFrame circconv2(const DDFrame& a, const DDFrame& bgrid) {
    const std::size_t rows = a.rows(), cols = a.cols();
    std::vector<cd> fa(a.raw()), fb(bgrid.raw());
    fft::transform2d(fa.data(), rows, cols, false);
    fft::transform2d(fb.data(), rows, cols, false);
    const double scale = 1.0 / static_cast<double>(rows * cols);
    for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i] * scale;
    fft::transform2d(fa.data(), rows, cols, true);
    DDFrame out(rows, cols);
    std::copy(fa.begin(), fa.end(), out.data());
    return out;
}

}  // namespace detail

/// Lambda reference sentinel: evaluate the row phase ramp at the candidate's
/// own range-rate instead of a frozen reference.
inline constexpr double kTrackCandidateRate = std::numeric_limits<double>::quiet_NaN();

/// Normalized-echo synthesizer for one symbol frame; caches the frame-side
/// transforms so repeated (d, v) evaluations stay cheap.
class EchoSynth {
public:
    EchoSynth(DDFrame x_dd, const FrameConfig& cfg, ModelKind kind,
              double rate_ref_mps = kTrackCandidateRate)
        : x_(std::move(x_dd)), cfg_(cfg), kind_(kind), rate_ref_mps_(rate_ref_mps) {
        if (!x_.matches(cfg)) throw ConfigError("EchoSynth: frame/config mismatch");
        if (kind_ == ModelKind::IdealPhi) {
            fx_ = x_.raw();
            fft::transform2d(fx_.data(), x_.rows(), x_.cols(), false);
        } else if (kind_ == ModelKind::RectApprox) {
            const std::size_t n = cfg.n_symbols(), m = cfg.m_subcarriers();
            fxp_.assign(n * 2 * m, cd{0.0, 0.0});
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t l = 0; l < m; ++l) fxp_[k * 2 * m + l] = x_(k, l);
            fft::transform2d(fxp_.data(), n, 2 * m, false);
        }
    }

    ModelKind kind() const { return kind_; }
    const DDFrame& symbols() const { return x_; }
    const FrameConfig& config() const { return cfg_; }
    double rate_ref_mps() const { return rate_ref_mps_; }

    /// e(d, v, B): the unit-amplitude target echo under this model.
    DDFrame synthesize(double d, double v) const {
        switch (kind_) {
            case ModelKind::IdealPhi: return synth_ideal(d, v);
            case ModelKind::RectPsi: return synth_rect_exact(d, v);
            case ModelKind::RectApprox: return synth_rect_approx(d, v);
        }
        throw ConfigError("EchoSynth: unknown model kind");
    }

private:
    DDFrame synth_ideal(double d, double v) const {
        const std::size_t n = cfg_.n_symbols(), m = cfg_.m_subcarriers();
        DDFrame phi = phi_ideal(d, v, cfg_);
        std::vector<cd> fphi(phi.raw());
        fft::transform2d(fphi.data(), n, m, false);
        const double scale = 1.0 / static_cast<double>(n * m);
        for (std::size_t i = 0; i < fphi.size(); ++i) fphi[i] *= fx_[i] * scale;
        fft::transform2d(fphi.data(), n, m, true);
        DDFrame out(cfg_);
        std::copy(fphi.begin(), fphi.end(), out.data());
        return out;
    }

    DDFrame synth_rect_exact(double d, double v) const {
        const std::size_t n = cfg_.n_symbols(), m = cfg_.m_subcarriers();
        const std::size_t b_count = cfg_.stop_and_go_order();
        const double t_sym = cfg_.symbol_interval_s();
        const double dop_norm = v * t_sym / cfg_.wavelength_m();
        const auto ranges = block_ranges(d, v, cfg_);
        DDFrame out(cfg_);
        for (std::size_t b = 0; b < b_count; ++b) {
            const double range_norm = ranges[b] / (kSpeedOfLight * t_sym);
            const long zb = PsiKernel::zone_boundary(ranges[b], cfg_);
            const cd base = cis(kTwoPi * v * ranges[b] / (cfg_.wavelength_m() * kSpeedOfLight)) /
                            static_cast<double>(b_count);
            const auto a = detail::doppler_factor(b, dop_norm, cfg_);
            const auto c = detail::delay_factor(range_norm, cfg_);

            // Zone 1 (no delay wrap): symbols with l' below the boundary.
            if (zb > 0) {
                DDFrame x1(cfg_), k1(cfg_);
                for (std::size_t l = 0; l < std::min<std::size_t>(zb, m); ++l) {
                    const cd col = cis(kTwoPi * dop_norm * static_cast<double>(l) /
                                       static_cast<double>(m));
                    for (std::size_t k = 0; k < n; ++k) x1(k, l) = x_(k, l) * col;
                }
                for (std::size_t k = 0; k < n; ++k)
                    for (std::size_t l = 0; l < m; ++l) k1(k, l) = a[k] * c[l];
                DDFrame y = detail::circconv2(x1, k1);
                y *= base;
                out += y;
            }
            // Zone 2 (delay wrap / ISI): remaining columns, extra phases and
            // the b = 0 Dirichlet correction.
            if (static_cast<std::size_t>(zb) < m) {
                DDFrame x2(cfg_), k2(cfg_);
                for (std::size_t l = static_cast<std::size_t>(zb); l < m; ++l) {
                    const cd col = cis(kTwoPi * dop_norm *
                                       (static_cast<double>(l) - static_cast<double>(m)) /
                                       static_cast<double>(m));
                    for (std::size_t k = 0; k < n; ++k)
                        x2(k, l) = x_(k, l) * col *
                                   cis(-kTwoPi * static_cast<double>(k) / static_cast<double>(n));
                }
                const double corr =
                    (b == 0) ? static_cast<double>(b_count) / static_cast<double>(n) : 0.0;
                const std::size_t q = cfg_.symbols_per_block();
                for (std::size_t k = 0; k < n; ++k) {
                    const double nu = static_cast<double>(k) / static_cast<double>(n) - dop_norm;
                    const cd ak = cis(-kTwoPi * nu * static_cast<double>(b * q)) *
                                  (dirichlet(q, nu) - corr);
                    for (std::size_t l = 0; l < m; ++l)
                        k2(k, l) = ak * dirichlet(m, -((static_cast<double>(l) +
                                                        static_cast<double>(m)) /
                                                           static_cast<double>(m) -
                                                       range_norm));
                }
                DDFrame y = detail::circconv2(x2, k2);
                y *= base;
                out += y;
            }
        }
        return out;
    }

    DDFrame synth_rect_approx(double d, double v) const {
        const std::size_t n = cfg_.n_symbols(), m = cfg_.m_subcarriers();
        const std::size_t m2 = 2 * m;
        DDFrame phi = phi_ideal(d, v, cfg_);
        // Two zero-padded (delay axis) convolutions: plain phi feeds the
        // unwrapped zone, row-modulated phi the wrapped zone.
        std::vector<cd> p1(n * m2, cd{0.0, 0.0}), p2(n * m2, cd{0.0, 0.0});
        for (std::size_t k = 0; k < n; ++k) {
            const cd rot = cis(kTwoPi * static_cast<double>(k) / static_cast<double>(n));
            for (std::size_t l = 0; l < m; ++l) {
                p1[k * m2 + l] = phi(k, l);
                p2[k * m2 + l] = phi(k, l) * rot;
            }
        }
        fft::transform2d(p1.data(), n, m2, false);
        fft::transform2d(p2.data(), n, m2, false);
        const double scale = 1.0 / static_cast<double>(n * m2);
        for (std::size_t i = 0; i < p1.size(); ++i) {
            p1[i] *= fxp_[i] * scale;
            p2[i] *= fxp_[i] * scale;
        }
        fft::transform2d(p1.data(), n, m2, true);
        fft::transform2d(p2.data(), n, m2, true);
        DDFrame out(cfg_);
        const double lam_ref = std::isnan(rate_ref_mps_) ? v : rate_ref_mps_;
        const double lam_rate = kTwoPi * lam_ref * cfg_.symbol_interval_s() /
                                (cfg_.wavelength_m() * static_cast<double>(m));
        for (std::size_t k = 0; k < n; ++k) {
            const cd rot = cis(-kTwoPi * static_cast<double>(k) / static_cast<double>(n));
            for (std::size_t l = 0; l < m; ++l)
                out(k, l) = cis(lam_rate * static_cast<double>(l)) *
                            (p1[k * m2 + l] + rot * p2[k * m2 + m + l]);
        }
        return out;
    }

    DDFrame x_;
    FrameConfig cfg_;
    ModelKind kind_;
    double rate_ref_mps_;
    std::vector<cd> fx_;   // FFT2 of the symbol grid (IdealPhi)
    std::vector<cd> fxp_;  // FFT2 of the delay-padded symbol grid (RectApprox)
};

/// Normalized target echo e(d, v, B) under the requested model. For
/// RectApprox, rate_ref_mps freezes the Lambda row ramp (the estimator
/// dictionary uses v_max/2); by default it follows the candidate range-rate,
/// which is what keeps the approximation tight across the whole window.
inline DDFrame model_echo(double d, double v, const DDFrame& x_dd, const FrameConfig& cfg,
                          ModelKind kind, double rate_ref_mps = kTrackCandidateRate) {
    return EchoSynth(x_dd, cfg, kind, rate_ref_mps).synthesize(d, v);
}

}  // namespace otfs
