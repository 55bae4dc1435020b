#pragma once

// Brute-force reference implementations used only by tests. Everything here
// is written as literal sums, independent of the library's fast paths.

#include <vector>

#include "otfsradar/ddmodel.hpp"

namespace oracles {

using otfs::cd;
using otfs::cis;
using otfs::DDFrame;
using otfs::FrameConfig;
using otfs::kSpeedOfLight;
using otfs::kTwoPi;

/// Dirichlet by its defining sum.
inline cd dirichlet_sum(std::size_t q, double nu) {
    cd s{0.0, 0.0};
    for (std::size_t i = 0; i < q; ++i) s += cis(-kTwoPi * nu * static_cast<double>(i));
    return s / static_cast<double>(q);
}

/// Ideal-filter response by the literal per-block product formula.
inline DDFrame phi_brute(double v, const std::vector<double>& r_blocks,
                         const FrameConfig& cfg) {
    const std::size_t n = cfg.n_symbols(), m = cfg.m_subcarriers();
    const std::size_t b_count = cfg.stop_and_go_order();
    const double t = cfg.symbol_interval_s();
    const double theta = v * t / cfg.wavelength_m();
    DDFrame phi(cfg);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < m; ++l) {
            cd sum{0.0, 0.0};
            for (std::size_t b = 0; b < b_count; ++b) {
                const double nu = static_cast<double>(k) / static_cast<double>(n) - theta;
                const double rho = r_blocks[b] / (kSpeedOfLight * t);
                sum += cis(-kTwoPi * nu * static_cast<double>(b) * static_cast<double>(n) /
                           static_cast<double>(b_count)) *
                       dirichlet_sum(n / b_count, nu) *
                       dirichlet_sum(m, -(static_cast<double>(l) / static_cast<double>(m) - rho));
            }
            phi(k, l) = sum / static_cast<double>(b_count);
        }
    return phi;
}

/// Circular convolution of the symbols with a response grid, literal sums.
inline DDFrame conv_brute(const DDFrame& x, const DDFrame& kernel, const FrameConfig& cfg) {
    const std::size_t n = cfg.n_symbols(), m = cfg.m_subcarriers();
    DDFrame y(cfg);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < m; ++l) {
            cd s{0.0, 0.0};
            for (std::size_t kk = 0; kk < n; ++kk)
                for (std::size_t ll = 0; ll < m; ++ll)
                    s += x(kk, ll) * kernel((k + n - kk) % n, (l + m - ll) % m);
            y(k, l) = s;
        }
    return y;
}

/// Rectangular-filter kernel assembled from the interference decomposition
/// (ICI + ISI chains with explicit symbol and sample sums), as opposed to the
/// per-block closed form. The ISI delay of a window takes the range of the
/// block that window belongs to.
class PsiAppendix {
public:
    PsiAppendix(double d, double v, const FrameConfig& cfg) : cfg_(cfg) {
        const double t = cfg.symbol_interval_s();
        theta_ = v * t / cfg.wavelength_m();
        const std::size_t b_count = cfg.stop_and_go_order();
        for (std::size_t b = 0; b < b_count; ++b) {
            const double r = d - v * static_cast<double>(b) * cfg.block_interval_s();
            rho_.push_back(r / (kSpeedOfLight * t));
            phase_.push_back(cis(kTwoPi * (v / cfg.wavelength_m()) * r / kSpeedOfLight));
            const double x = static_cast<double>(cfg.m_subcarriers()) * (1.0 - rho_.back());
            bound_.push_back(std::clamp<long>(static_cast<long>(std::ceil(x - 1e-9)), 0,
                                              static_cast<long>(cfg.m_subcarriers())));
        }
    }

    cd operator()(std::size_t k_in, std::size_t l_in, long k, long l) const {
        const std::size_t n = cfg_.n_symbols(), m = cfg_.m_subcarriers();
        const std::size_t q = cfg_.symbols_per_block();
        cd ici{0.0, 0.0}, isi{0.0, 0.0};
        for (std::size_t nn = 0; nn < n; ++nn) {
            const std::size_t b = nn / q;
            const double nu = static_cast<double>(k) / static_cast<double>(n) - theta_;
            const cd rot = cis(-kTwoPi * nu * static_cast<double>(nn));
            // ICI: sample index p runs below the zone boundary; only p = l'
            // survives the selector.
            if (static_cast<long>(l_in) < bound_[b]) {
                const double arg = (rho_[b] * static_cast<double>(m) - static_cast<double>(l)) /
                                   static_cast<double>(m);
                ici += rot * phase_[b] * dirichlet_sum(m, arg) *
                       cis(kTwoPi * theta_ * static_cast<double>(l_in) / static_cast<double>(m));
            }
            // ISI: windows after the first; p = l' survives when it lies at or
            // above the boundary.
            if (nn >= 1 && static_cast<long>(l_in) >= bound_[b]) {
                const double arg = (rho_[b] * static_cast<double>(m) - static_cast<double>(m) -
                                    static_cast<double>(l)) /
                                   static_cast<double>(m);
                isi += rot * phase_[b] * dirichlet_sum(m, arg) *
                       cis(kTwoPi * theta_ *
                           (static_cast<double>(l_in) - static_cast<double>(m)) /
                           static_cast<double>(m));
            }
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        return inv_n * ici +
               cis(-kTwoPi * static_cast<double>(k_in) / static_cast<double>(n)) * inv_n * isi;
    }

private:
    FrameConfig cfg_;
    double theta_ = 0.0;
    std::vector<double> rho_;
    std::vector<cd> phase_;
    std::vector<long> bound_;
};

/// Rectangular-filter echo by the literal quadruple sum.
inline DDFrame echo_psi_brute(double d, double v, const DDFrame& x, const FrameConfig& cfg) {
    const otfs::PsiKernel psi(d, v, cfg);
    const std::size_t n = cfg.n_symbols(), m = cfg.m_subcarriers();
    DDFrame y(cfg);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < m; ++l) {
            cd s{0.0, 0.0};
            for (std::size_t kk = 0; kk < n; ++kk)
                for (std::size_t ll = 0; ll < m; ++ll)
                    s += x(kk, ll) * psi(kk, ll, static_cast<long>(k) - static_cast<long>(kk),
                                         static_cast<long>(l) - static_cast<long>(ll));
            y(k, l) = s;
        }
    return y;
}

/// Approximated echo by the literal matrix-vector product with the modified
/// symbol matrix and the vectorized ideal response.
inline DDFrame echo_approx_brute(double d, double v, const DDFrame& x, const FrameConfig& cfg,
                                 double rate_ref_mps) {
    const otfs::ModifiedSymbolMatrix xi(x, cfg, rate_ref_mps);
    const DDFrame phi = otfs::phi_ideal(d, v, cfg);
    const std::size_t n = cfg.n_symbols(), m = cfg.m_subcarriers();
    DDFrame y(cfg);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < m; ++l) {
            cd s{0.0, 0.0};
            for (std::size_t kk = 0; kk < n; ++kk)
                for (std::size_t ll = 0; ll < m; ++ll)
                    s += xi.xi(k, l, kk, ll) * phi(kk, ll);
            y(k, l) = s;
        }
    return y;
}

inline double nrmse(const DDFrame& got, const DDFrame& want) {
    double err = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) err += std::norm(got.raw()[i] - want.raw()[i]);
    const double ref = want.energy();
    return std::sqrt(err / ref);
}

}  // namespace oracles
