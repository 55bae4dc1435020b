#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "otfsradar/chansim.hpp"
#include "otfsradar/ddmodel.hpp"

namespace otfs {

struct EstimatorConfig {
    double fine_step_r_m = 0.0;      // Sigma_r
    double fine_step_rr_mps = 0.0;   // Sigma_rr
    std::size_t fine_pts_r = 1;      // G~_r
    std::size_t fine_pts_rr = 1;     // G~_rr
    std::size_t bomp_blocks = 4;     // K
    double bomp_threshold = 1.0;     // eps
    int sidelobe_order = 4;          // D
    ModelKind model_kind = ModelKind::IdealPhi;
    std::size_t b_order = 0;         // 0: inherit the frame config's B
    std::size_t clean_sweeps = 2;    // relaxation passes after the greedy CLEAN loop
    std::uint64_t selection_seed = 0x5eedULL;

    void validate(const FrameConfig& cfg) const {
        if (fine_pts_r == 0 || fine_pts_rr == 0)
            throw ConfigError("EstimatorConfig: fine grid sizes must be >= 1");
        if (fine_pts_r > 1 && !(fine_step_r_m > 0.0))
            throw ConfigError("EstimatorConfig: fine_step_r_m must be positive");
        if (fine_pts_rr > 1 && !(fine_step_rr_mps > 0.0))
            throw ConfigError("EstimatorConfig: fine_step_rr_mps must be positive");
        if (fine_step_r_m > cfg.range_bin_step_m() + 1e-12)
            throw ConfigError("EstimatorConfig: fine_step_r_m exceeds the delay-bin step");
        if (fine_step_rr_mps > cfg.range_rate_bin_step_mps() + 1e-12)
            throw ConfigError("EstimatorConfig: fine_step_rr_mps exceeds the Doppler-bin step");
        if (bomp_blocks == 0 || bomp_blocks > cfg.m_subcarriers())
            throw ConfigError("EstimatorConfig: bomp_blocks must be in [1, M]");
        if (!(bomp_threshold > 0.0)) throw ConfigError("EstimatorConfig: bomp_threshold must be positive");
        if (b_order != 0 && cfg.n_symbols() % b_order != 0)
            throw ConfigError("EstimatorConfig: b_order must divide N");
    }

    FrameConfig model_config(const FrameConfig& cfg) const {
        return b_order == 0 ? cfg : cfg.with_stop_and_go_order(b_order);
    }
};

struct TargetEstimate {
    double d_hat = 0.0;
    double v_hat = 0.0;
    cd alpha_hat{0.0, 0.0};
    int coarse_k = 0;
    int coarse_l = 0;
    double objective = 0.0;
    std::size_t iterations_used = 0;
};

/// Matched-filter objective |<e(d,v,B), z>|^2 / ||e||^2 and the LS amplitude,
/// with the model-side quantities cached per (z, x) pair. The ideal-filter
/// model admits an exact O(NM) per-candidate path through the time-frequency
/// domain; the rectangular models synthesize the echo per candidate.
class MlEvaluator {
public:
    MlEvaluator(const DDFrame& z, const DDFrame& x_dd, const FrameConfig& cfg, ModelKind kind,
                double rate_ref_mps = 0.0)
        : cfg_(cfg), kind_(kind) {
        if (!z.matches(cfg) || !x_dd.matches(cfg))
            throw ConfigError("MlEvaluator: frame/config mismatch");
        x_energy_ = x_dd.energy();
        if (!(x_energy_ > 0.0)) throw DomainError("MlEvaluator: all-zero symbol frame");
        if (kind_ == ModelKind::IdealPhi) {
            // V[n,m] = conj(X_TF) (.) Z_TF; <e, z> = sum conj(G) V with the
            // unimodular channel mask G[n,m] = e^{i2pi v nT/lam} e^{-i2pi r_b m/(cT)}.
            const TFFrame x_tf = isfft(x_dd, cfg);
            const TFFrame z_tf = isfft_of_dd(z, cfg);
            v_grid_.resize(cfg.grid_size());
            for (std::size_t i = 0; i < v_grid_.size(); ++i)
                v_grid_[i] = std::conj(x_tf.raw()[i]) * z_tf.raw()[i];
        } else {
            z_ = z;
            synth_.emplace(x_dd, cfg, kind, rate_ref_mps);
        }
    }

    double objective(double d, double v) const {
        const auto [inner, norm_sq] = inner_and_norm(d, v);
        return std::norm(inner) / norm_sq;
    }

    cd amplitude(double d, double v) const {
        const auto [inner, norm_sq] = inner_and_norm(d, v);
        return inner / norm_sq;
    }

    /// (<e(d,v,B), z>, ||e||^2)
    std::pair<cd, double> inner_and_norm(double d, double v) const {
        if (kind_ == ModelKind::IdealPhi) return ideal_inner(d, v);
        const DDFrame e = synth_->synthesize(d, v);
        cd inner{0.0, 0.0};
        for (std::size_t i = 0; i < e.size(); ++i)
            inner += std::conj(e.raw()[i]) * z_.raw()[i];
        const double norm_sq = e.energy();
        if (!(norm_sq > 0.0)) throw DomainError("MlEvaluator: zero-norm model echo");
        return {inner, norm_sq};
    }

private:
    static TFFrame isfft_of_dd(const DDFrame& z, const FrameConfig& cfg) { return isfft(z, cfg); }

    std::pair<cd, double> ideal_inner(double d, double v) const {
        const std::size_t n = cfg_.n_symbols(), m = cfg_.m_subcarriers();
        const std::size_t q = cfg_.symbols_per_block();
        const double t_sym = cfg_.symbol_interval_s();
        const double dop_phase = kTwoPi * v * t_sym / cfg_.wavelength_m();
        const auto ranges = block_ranges(d, v, cfg_);
        cd inner{0.0, 0.0};
        for (std::size_t b = 0; b < ranges.size(); ++b) {
            const double del_phase = kTwoPi * ranges[b] / (kSpeedOfLight * t_sym);
            for (std::size_t nn = b * q; nn < (b + 1) * q; ++nn) {
                cd row{0.0, 0.0};
                const cd* vp = v_grid_.data() + nn * m;
                for (std::size_t mm = 0; mm < m; ++mm)
                    row += cis(del_phase * static_cast<double>(mm)) * vp[mm];
                inner += cis(-dop_phase * static_cast<double>(nn)) * row;
            }
        }
        // |G| = 1 and the transforms are unitary, so ||e|| = ||x|| exactly.
        return {inner, x_energy_};
    }

    FrameConfig cfg_;
    ModelKind kind_;
    double x_energy_ = 0.0;
    std::vector<cd> v_grid_;
    DDFrame z_;
    std::optional<EchoSynth> synth_;
};

inline double ml_objective(const DDFrame& z, double d, double v, const FrameConfig& cfg,
                           ModelKind kind, const DDFrame& x_dd, double rate_ref_mps = 0.0) {
    return MlEvaluator(z, x_dd, cfg, kind, rate_ref_mps).objective(d, v);
}

inline cd estimate_amplitude(const DDFrame& z, double d_hat, double v_hat, const FrameConfig& cfg,
                             ModelKind kind, const DDFrame& x_dd, double rate_ref_mps = 0.0) {
    return MlEvaluator(z, x_dd, cfg, kind, rate_ref_mps).amplitude(d_hat, v_hat);
}

/// K whole delay-bin blocks of the measurement (all N Doppler rows each),
/// plus on-demand assembly of the matching dictionary blocks.
class CompressedMeasurement {
public:
    CompressedMeasurement(const DDFrame& z, const DDFrame& x_dd, const FrameConfig& cfg,
                          ModelKind kind, double rate_ref_mps, std::size_t k_blocks,
                          std::uint64_t selection_seed)
        : x_(x_dd), cfg_(cfg), kind_(kind), rate_ref_mps_(rate_ref_mps) {
        if (!z.matches(cfg) || !x_dd.matches(cfg))
            throw ConfigError("CompressedMeasurement: frame/config mismatch");
        if (k_blocks == 0 || k_blocks > cfg.m_subcarriers())
            throw DomainError("CompressedMeasurement: K must be in [1, M]");
        std::vector<int> bins(cfg.m_subcarriers());
        std::iota(bins.begin(), bins.end(), 0);
        std::mt19937_64 rng(selection_seed);
        for (std::size_t j = 0; j < k_blocks; ++j) {
            std::uniform_int_distribution<std::size_t> pick(j, bins.size() - 1);
            std::swap(bins[j], bins[pick(rng)]);
        }
        bins.resize(k_blocks);
        selected_bins_ = std::move(bins);
        const std::size_t n = cfg.n_symbols();
        z_s_.resize(static_cast<Eigen::Index>(n * k_blocks));
        for (std::size_t j = 0; j < k_blocks; ++j)
            for (std::size_t k = 0; k < n; ++k)
                z_s_[static_cast<Eigen::Index>(j * n + k)] =
                    z(k, static_cast<std::size_t>(selected_bins_[j]));
    }

    const std::vector<int>& selected_bins() const { return selected_bins_; }
    const Eigen::VectorXcd& z_s() const { return z_s_; }
    const FrameConfig& config() const { return cfg_; }
    ModelKind kind() const { return kind_; }

    /// Dictionary block for delay bin m: NK x N slice of X (ideal) or of the
    /// modified symbol matrix (rect approx).
    Eigen::MatrixXcd block(std::size_t m_bin) const {
        const std::size_t n = cfg_.n_symbols();
        const std::size_t m = cfg_.m_subcarriers();
        Eigen::MatrixXcd out(static_cast<Eigen::Index>(n * selected_bins_.size()),
                             static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < selected_bins_.size(); ++j) {
            const std::size_t l = static_cast<std::size_t>(selected_bins_[j]);
            const std::size_t l_off = (l + m - m_bin) % m;
            cd row_mask{1.0, 0.0};
            if (kind_ != ModelKind::IdealPhi)
                row_mask = cis(kTwoPi * rate_ref_mps_ * cfg_.symbol_interval_s() *
                               static_cast<double>(l) /
                               (cfg_.wavelength_m() * static_cast<double>(m)));
            const bool wrapped = (kind_ != ModelKind::IdealPhi) && (m_bin > l);
            for (std::size_t k = 0; k < n; ++k) {
                for (std::size_t kk = 0; kk < n; ++kk) {
                    cd val = x_((k + n - kk) % n, l_off) * row_mask;
                    if (wrapped)
                        val *= cis(-kTwoPi *
                                   (static_cast<double>(k) - static_cast<double>(kk)) /
                                   static_cast<double>(n));
                    out(static_cast<Eigen::Index>(j * n + k), static_cast<Eigen::Index>(kk)) = val;
                }
            }
        }
        return out;
    }

private:
    DDFrame x_;
    FrameConfig cfg_;
    ModelKind kind_;
    double rate_ref_mps_;
    std::vector<int> selected_bins_;
    Eigen::VectorXcd z_s_;
};

inline CompressedMeasurement build_compressed(const DDFrame& z, const DDFrame& x_dd,
                                              const FrameConfig& cfg, ModelKind kind,
                                              double rate_ref_mps, std::size_t k_blocks,
                                              std::uint64_t selection_seed) {
    return CompressedMeasurement(z, x_dd, cfg, kind, rate_ref_mps, k_blocks, selection_seed);
}

struct CoarseResult {
    DDFrame f_tilde;
    double d_tilde = 0.0;
    double v_tilde = 0.0;
    int k_tilde = 0;
    int l_tilde = 0;
    std::vector<int> support;  // selected delay blocks, in selection order
    std::size_t iterations = 0;
};

/// Block orthogonal matching pursuit on the compressed measurement: greedy
/// block selection, joint least-squares refit, residual shrink; stops at K
/// blocks or when the residual energy falls below eps*N*K*sigma^2.
inline CoarseResult bomp_coarse(const CompressedMeasurement& zc, std::size_t k_max, double eps,
                                double noise_var) {
    if (!(eps > 0.0)) throw DomainError("bomp_coarse: eps must be positive");
    const FrameConfig& cfg = zc.config();
    const std::size_t n = cfg.n_symbols();
    const std::size_t m = cfg.m_subcarriers();
    const double stop_level =
        eps * static_cast<double>(n * zc.selected_bins().size()) * noise_var;

    Eigen::VectorXcd residual = zc.z_s();
    std::vector<bool> used(m, false);
    std::vector<int> support;
    Eigen::MatrixXcd basis(residual.size(), 0);
    Eigen::VectorXcd coeffs;

    while (support.size() < k_max) {
        if (residual.squaredNorm() < stop_level) break;
        std::size_t best = m;
        double best_score = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (used[i]) continue;
            const double score = (zc.block(i).adjoint() * residual).squaredNorm();
            if (score > best_score) {
                best_score = score;
                best = i;
            }
        }
        if (best == m) break;
        used[best] = true;
        support.push_back(static_cast<int>(best));
        basis.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(support.size() * n));
        basis.rightCols(static_cast<Eigen::Index>(n)) = zc.block(best);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(basis);
        if (qr.rank() < basis.cols())
            throw DomainError("bomp_coarse: rank-deficient dictionary block set");
        coeffs = qr.solve(zc.z_s());
        residual = zc.z_s() - basis * coeffs;
    }

    CoarseResult out;
    out.f_tilde = DDFrame(cfg);
    out.iterations = support.size();
    out.support = support;
    for (std::size_t j = 0; j < support.size(); ++j)
        for (std::size_t k = 0; k < n; ++k)
            out.f_tilde(k, static_cast<std::size_t>(support[j])) =
                coeffs[static_cast<Eigen::Index>(j * n + k)];
    double best = -1.0;
    for (std::size_t l = 0; l < m; ++l)
        for (std::size_t k = 0; k < n; ++k)
            if (std::abs(out.f_tilde(k, l)) > best) {
                best = std::abs(out.f_tilde(k, l));
                out.k_tilde = static_cast<int>(k);
                out.l_tilde = static_cast<int>(l);
            }
    out.d_tilde = static_cast<double>(out.l_tilde) * cfg.range_bin_step_m();
    out.v_tilde = static_cast<double>(out.k_tilde) * cfg.range_rate_bin_step_mps();
    return out;
}

/// Grid search of the matched-filter objective on the fine grid centered at
/// (d_tilde, v_tilde), clipped (not wrapped) to the window. Ties break toward
/// smaller d, then smaller v.
inline TargetEstimate refine_ml(const MlEvaluator& eval, double d_tilde, double v_tilde,
                                const SceneWindow& window, const EstimatorConfig& est) {
    std::vector<double> ds, vs;
    for (std::size_t g = 0; g < est.fine_pts_r; ++g) {
        const double d = d_tilde + (static_cast<double>(g) -
                                    static_cast<double>(est.fine_pts_r - 1) / 2.0) *
                                       est.fine_step_r_m;
        if (d >= 0.0 && d <= window.r_max_m()) ds.push_back(d);
    }
    for (std::size_t g = 0; g < est.fine_pts_rr; ++g) {
        const double v = v_tilde + (static_cast<double>(g) -
                                    static_cast<double>(est.fine_pts_rr - 1) / 2.0) *
                                       est.fine_step_rr_mps;
        if (v >= 0.0 && v <= window.v_max_mps()) vs.push_back(v);
    }
    if (ds.empty() || vs.empty())
        throw DomainError("refine_ml: fine grid entirely outside the window");
    TargetEstimate out;
    double best = -1.0;
    for (double d : ds)
        for (double v : vs) {
            const double obj = eval.objective(d, v);
            if (obj > best) {
                best = obj;
                out.d_hat = d;
                out.v_hat = v;
            }
        }
    out.objective = best;
    out.alpha_hat = eval.amplitude(out.d_hat, out.v_hat);
    return out;
}

/// Two-step estimation of one target: compressed coarse stage, then fine ML.
inline TargetEstimate estimate_single(const DDFrame& z, const DDFrame& x_dd,
                                      const FrameConfig& cfg, const SceneWindow& window,
                                      const EstimatorConfig& est, double noise_var) {
    est.validate(cfg);
    const FrameConfig mcfg = est.model_config(cfg);
    const double rate_ref = window.v_max_mps() / 2.0;
    const CompressedMeasurement zc =
        build_compressed(z, x_dd, mcfg, est.model_kind, rate_ref, est.bomp_blocks,
                         est.selection_seed);
    const CoarseResult coarse = bomp_coarse(zc, est.bomp_blocks, est.bomp_threshold, noise_var);
    MlEvaluator eval(z, x_dd, mcfg, est.model_kind, rate_ref);
    // a wrapped coarse bin can fall outside the physical window; pull the
    // fine-grid center back in before refining
    const double dc = std::clamp(coarse.d_tilde, 0.0, window.r_max_m());
    const double vc = std::clamp(coarse.v_tilde, 0.0, window.v_max_mps());
    TargetEstimate out = refine_ml(eval, dc, vc, window, est);
    out.coarse_k = coarse.k_tilde;
    out.coarse_l = coarse.l_tilde;
    out.iterations_used = coarse.iterations;
    return out;
}

/// Single-step baseline: exhaustive matched-filter search over the uniform
/// lattice {g*step} covering the whole window.
inline TargetEstimate exhaustive_ml(const DDFrame& z, const DDFrame& x_dd, const FrameConfig& cfg,
                                    const SceneWindow& window, double step_r_m,
                                    double step_rr_mps, ModelKind kind, std::size_t b_order = 0) {
    if (!(step_r_m > 0.0) || !(step_rr_mps > 0.0))
        throw ConfigError("exhaustive_ml: steps must be positive");
    const FrameConfig mcfg = b_order == 0 ? cfg : cfg.with_stop_and_go_order(b_order);
    MlEvaluator eval(z, x_dd, mcfg, kind, window.v_max_mps() / 2.0);
    TargetEstimate out;
    double best = -1.0;
    for (double d = 0.0; d <= window.r_max_m() + 1e-12; d += step_r_m)
        for (double v = 0.0; v <= window.v_max_mps() + 1e-12; v += step_rr_mps) {
            const double obj = eval.objective(d, v);
            if (obj > best) {
                best = obj;
                out.d_hat = d;
                out.v_hat = v;
            }
        }
    out.objective = best;
    out.alpha_hat = eval.amplitude(out.d_hat, out.v_hat);
    return out;
}

struct CleanResult {
    std::vector<TargetEstimate> estimates;
    bool shortfall = false;
};

/// CLEAN loop: estimate the strongest remaining target, synthesize its echo
/// at the fitted amplitude, subtract, repeat. The greedy pass is followed by
/// clean_sweeps relaxation passes: each target is re-detected against the
/// measurement minus the other fitted echoes, and all amplitudes are refit
/// jointly by least squares. This keeps the strong targets' subtraction
/// residue (grid quantization plus single-shot amplitude error) from burying
/// the weak ones. Estimates come back strongest first.
inline CleanResult clean_multi(const DDFrame& z, const DDFrame& x_dd, const FrameConfig& cfg,
                               const SceneWindow& window, const EstimatorConfig& est,
                               double noise_var, std::size_t p_targets) {
    if (p_targets == 0) throw DomainError("clean_multi: P must be >= 1");
    const FrameConfig mcfg = est.model_config(cfg);
    const double rate_ref = window.v_max_mps() / 2.0;
    const auto unit_echo = [&](const TargetEstimate& e) {
        return model_echo(e.d_hat, e.v_hat, x_dd, mcfg, est.model_kind, rate_ref);
    };

    // Push the grid argmax off the lattice with a three-point parabolic peak
    // fit per axis. A grid-quantized subtraction leaves residue proportional
    // to the strong target's power, which is exactly what buries the weak
    // targets; the off-grid fit removes it.
    const auto offgrid = [&](const DDFrame& zp, TargetEstimate& e) {
        const MlEvaluator eval(zp, x_dd, mcfg, est.model_kind, rate_ref);
        const auto vertex = [](double lo, double mid, double hi) {
            const double den = lo - 2.0 * mid + hi;
            if (!(den < 0.0)) return 0.0;
            return std::clamp(0.5 * (lo - hi) / den, -0.5, 0.5);
        };
        const double sd = est.fine_step_r_m, sv = est.fine_step_rr_mps;
        if (est.fine_pts_r > 1 && e.d_hat - sd >= 0.0 && e.d_hat + sd <= window.r_max_m())
            e.d_hat += sd * vertex(eval.objective(e.d_hat - sd, e.v_hat),
                                   eval.objective(e.d_hat, e.v_hat),
                                   eval.objective(e.d_hat + sd, e.v_hat));
        if (est.fine_pts_rr > 1 && e.v_hat - sv >= 0.0 && e.v_hat + sv <= window.v_max_mps())
            e.v_hat += sv * vertex(eval.objective(e.d_hat, e.v_hat - sv),
                                   eval.objective(e.d_hat, e.v_hat),
                                   eval.objective(e.d_hat, e.v_hat + sv));
        e.alpha_hat = eval.amplitude(e.d_hat, e.v_hat);
    };

    CleanResult out;
    std::vector<DDFrame> echoes;
    DDFrame residual = z;
    for (std::size_t p = 0; p < p_targets; ++p) {
        TargetEstimate e = estimate_single(residual, x_dd, cfg, window, est, noise_var);
        if (e.iterations_used == 0 || !(e.objective > 0.0)) {
            out.shortfall = true;
            break;
        }
        offgrid(residual, e);
        out.estimates.push_back(e);
        echoes.push_back(unit_echo(e));
        DDFrame scaled = echoes.back();
        scaled *= e.alpha_hat;
        residual -= scaled;
    }

    const std::size_t found = out.estimates.size();
    if (found > 0) {
        const auto refit_amplitudes = [&]() {
            Eigen::MatrixXcd basis(static_cast<Eigen::Index>(z.size()),
                                   static_cast<Eigen::Index>(found));
            for (std::size_t p = 0; p < found; ++p)
                for (std::size_t i = 0; i < z.size(); ++i)
                    basis(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
                        echoes[p].raw()[i];
            Eigen::VectorXcd rhs(static_cast<Eigen::Index>(z.size()));
            for (std::size_t i = 0; i < z.size(); ++i)
                rhs[static_cast<Eigen::Index>(i)] = z.raw()[i];
            const Eigen::VectorXcd alphas = basis.colPivHouseholderQr().solve(rhs);
            for (std::size_t p = 0; p < found; ++p)
                out.estimates[p].alpha_hat = alphas[static_cast<Eigen::Index>(p)];
        };
        refit_amplitudes();
        for (std::size_t sweep = 0; sweep < est.clean_sweeps; ++sweep) {
            for (std::size_t p = 0; p < found; ++p) {
                DDFrame rp = z;
                for (std::size_t q = 0; q < found; ++q) {
                    if (q == p) continue;
                    DDFrame scaled = echoes[q];
                    scaled *= out.estimates[q].alpha_hat;
                    rp -= scaled;
                }
                TargetEstimate e = estimate_single(rp, x_dd, cfg, window, est, noise_var);
                if (e.iterations_used == 0 || !(e.objective > 0.0)) continue;
                offgrid(rp, e);
                out.estimates[p] = e;
                echoes[p] = unit_echo(e);
                refit_amplitudes();
            }
        }
        std::vector<std::size_t> order(found);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(out.estimates[a].alpha_hat) > std::abs(out.estimates[b].alpha_hat);
        });
        std::vector<TargetEstimate> sorted;
        sorted.reserve(found);
        for (std::size_t idx : order) sorted.push_back(out.estimates[idx]);
        out.estimates = std::move(sorted);
    }
    return out;
}

}  // namespace otfs
