#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "otfsradar/chansim.hpp"
#include "otfsradar/estimator.hpp"

namespace otfs::bench {

enum class SweepVariable { B, Snr, VBarMin };
enum class FilterKind { Ideal, Rect };
enum class EstimatorChoice { TwoStep, ExhaustiveML };

/// One Monte Carlo experiment: a base scenario, one sweep variable, and the
/// estimator setup. Numerology is stored unpacked so the spec can be built
/// from a key = value file before any validation runs.
struct ExperimentSpec {
    std::size_t m_subcarriers = 256;
    std::size_t n_symbols = 64;
    double subcarrier_spacing_hz = 15e3;
    double wavelength_m = kSpeedOfLight / 4e9;
    std::size_t stop_and_go_order = 16;

    double r_bar_min_m = 20e3;
    double r_bar_max_m = 39e3;
    double v_bar_min_mps = 15e3;
    double v_bar_max_mps = 16e3;

    SweepVariable sweep = SweepVariable::Snr;
    std::vector<double> sweep_values{20.0};
    std::size_t trials = 100;
    FilterKind filter = FilterKind::Ideal;
    EstimatorChoice estimator = EstimatorChoice::TwoStep;
    double snr_db = 20.0;                        // used when not sweeping SNR
    std::vector<double> target_powers{1.0};      // E[|alpha_p|^2]; SNR refers to power 1
    bool fixed_amplitude = false;                // |alpha| fixed, phase random
    double min_separation_bins = 0.0;            // multi-target draw constraint
    std::size_t oversample = 4;
    std::uint64_t seed = 1;
    bool record_wall_times = false;

    EstimatorConfig est;
    double exh_step_r_m = 0.0;
    double exh_step_rr_mps = 0.0;

    FrameConfig base_config() const {
        return FrameConfig(m_subcarriers, n_symbols, subcarrier_spacing_hz, wavelength_m,
                           stop_and_go_order);
    }

    void validate() const {
        if (trials == 0) throw ConfigError("ExperimentSpec: trials must be >= 1");
        if (sweep_values.empty()) throw ConfigError("ExperimentSpec: empty sweep");
        if (target_powers.empty()) throw ConfigError("ExperimentSpec: no targets");
        const FrameConfig cfg = base_config();
        SceneWindow w(r_bar_min_m, r_bar_max_m, v_bar_min_mps, v_bar_max_mps, cfg);
        (void)w;
        if (sweep == SweepVariable::B)
            for (double b : sweep_values)
                if (b < 1.0 || n_symbols % static_cast<std::size_t>(b) != 0)
                    throw ConfigError("ExperimentSpec: swept B must divide N");
        if (sweep == SweepVariable::VBarMin)
            for (double v0 : sweep_values) {
                SceneWindow wv(r_bar_min_m, r_bar_max_m, v0,
                               v0 + (v_bar_max_mps - v_bar_min_mps), cfg);
                (void)wv;
            }
    }
};

struct MetricRow {
    double sweep_value = 0.0;
    int target_id = 0;
    double rmse_r_m = 0.0;
    double rmse_rr_mps = 0.0;
    double nrmse_alpha = 0.0;
    std::size_t trials = 0;
    double wall_s = 0.0;
};

/// Per-truth-target squared errors after greedy association.
struct TargetError {
    int truth_index = 0;
    bool matched = false;
    double d_err_sq = 0.0;
    double v_err_sq = 0.0;
    double alpha_err_sq = 0.0;
    double alpha_ref_sq = 0.0;
};

/// Greedy minimum-distance association in bin-normalized coordinates, then
/// squared errors per matched truth target.
inline std::vector<TargetError> compute_metrics(const std::vector<Target>& truth,
                                                const std::vector<TargetEstimate>& estimates,
                                                const FrameConfig& cfg) {
    const double bin_r = cfg.range_bin_step_m();
    const double bin_rr = cfg.range_rate_bin_step_mps();
    std::vector<TargetError> out(truth.size());
    std::vector<bool> t_used(truth.size(), false), e_used(estimates.size(), false);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        out[i].truth_index = static_cast<int>(i);
        out[i].alpha_ref_sq = std::norm(truth[i].amplitude);
    }
    const std::size_t pairs = std::min(truth.size(), estimates.size());
    for (std::size_t it = 0; it < pairs; ++it) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bt = truth.size(), be = estimates.size();
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (t_used[i]) continue;
            for (std::size_t j = 0; j < estimates.size(); ++j) {
                if (e_used[j]) continue;
                const double dd = (truth[i].excess_range_m - estimates[j].d_hat) / bin_r;
                const double dv =
                    (truth[i].excess_range_rate_mps - estimates[j].v_hat) / bin_rr;
                const double dist = dd * dd + dv * dv;
                if (dist < best) {
                    best = dist;
                    bt = i;
                    be = j;
                }
            }
        }
        if (bt == truth.size()) break;
        t_used[bt] = true;
        e_used[be] = true;
        TargetError& te = out[bt];
        te.matched = true;
        const double ed = truth[bt].excess_range_m - estimates[be].d_hat;
        const double ev = truth[bt].excess_range_rate_mps - estimates[be].v_hat;
        te.d_err_sq = ed * ed;
        te.v_err_sq = ev * ev;
        te.alpha_err_sq = std::norm(truth[bt].amplitude - estimates[be].alpha_hat);
    }
    return out;
}

namespace detail {

inline std::vector<Target> draw_targets(const ExperimentSpec& spec, const SceneWindow& window,
                                        std::uint64_t trial_seed) {
    std::mt19937_64 rng(mix_seed(trial_seed, 11));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const std::size_t p_count = spec.target_powers.size();
    std::vector<Target> targets(p_count);
    const double min_sep_sq = spec.min_separation_bins * spec.min_separation_bins;
    const FrameConfig cfg = spec.base_config();
    for (std::size_t p = 0; p < p_count; ++p) {
        for (int attempt = 0; attempt < 1000; ++attempt) {
            const double d = uni(rng) * window.r_max_m();
            const double v = uni(rng) * window.v_max_mps();
            bool ok = true;
            for (std::size_t q = 0; q < p; ++q) {
                const double dd = (d - targets[q].excess_range_m) / cfg.range_bin_step_m();
                const double dv =
                    (v - targets[q].excess_range_rate_mps) / cfg.range_rate_bin_step_mps();
                if (dd * dd + dv * dv < min_sep_sq) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                targets[p].excess_range_m = d;
                targets[p].excess_range_rate_mps = v;
                break;
            }
            if (attempt == 999)
                throw DomainError("draw_targets: cannot satisfy the separation constraint");
        }
    }
    std::mt19937_64 amp_rng(mix_seed(trial_seed, 12));
    for (std::size_t p = 0; p < p_count; ++p) {
        const double power = spec.target_powers[p];
        if (spec.fixed_amplitude) {
            targets[p].amplitude = std::sqrt(power) * cis(kTwoPi * uni(amp_rng));
        } else {
            std::normal_distribution<double> gauss(0.0, std::sqrt(power / 2.0));
            const double re = gauss(amp_rng);
            const double im = gauss(amp_rng);
            targets[p].amplitude = cd{re, im};
        }
    }
    return targets;
}

}  // namespace detail

/// Runs the full sweep; per-trial randomness is derived from (seed, trial)
/// only, so sweep points that share a scenario draw use common random numbers.
inline std::vector<MetricRow> run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const std::size_t p_count = spec.target_powers.size();
    std::vector<MetricRow> rows;
    for (double sv : spec.sweep_values) {
        const auto t0 = std::chrono::steady_clock::now();
        FrameConfig cfg = spec.base_config();
        double v0 = spec.v_bar_min_mps, v1 = spec.v_bar_max_mps;
        double snr_db = spec.snr_db;
        switch (spec.sweep) {
            case SweepVariable::B:
                cfg = cfg.with_stop_and_go_order(static_cast<std::size_t>(sv));
                break;
            case SweepVariable::Snr: snr_db = sv; break;
            case SweepVariable::VBarMin:
                v1 = sv + (spec.v_bar_max_mps - spec.v_bar_min_mps);
                v0 = sv;
                break;
        }
        const SceneWindow window(spec.r_bar_min_m, spec.r_bar_max_m, v0, v1, cfg);
        const double snr_lin = std::pow(10.0, snr_db / 10.0);
        const double noise_var = snr_to_noise_var(snr_lin, 1.0, cfg);

        EstimatorConfig est = spec.est;
        est.model_kind =
            spec.filter == FilterKind::Ideal ? ModelKind::IdealPhi : ModelKind::RectApprox;

        std::vector<double> sum_d(p_count, 0.0), sum_v(p_count, 0.0), sum_ae(p_count, 0.0),
            sum_ar(p_count, 0.0);
        std::vector<std::size_t> matched(p_count, 0);

        for (std::size_t t = 0; t < spec.trials; ++t) {
            const std::uint64_t trial_seed = mix_seed(spec.seed, t);
            const std::vector<Target> targets = detail::draw_targets(spec, window, trial_seed);
            const DDFrame x = random_qam_frame(cfg, mix_seed(trial_seed, 1));

            DDFrame y(cfg);
            if (spec.filter == FilterKind::Ideal) {
                // No realizable time-domain ideal filter exists; the ideal
                // truth is the analytic per-symbol-migration echo (B = N).
                const FrameConfig full = cfg.with_stop_and_go_order(cfg.n_symbols());
                for (const Target& tg : targets) {
                    DDFrame e = model_echo(tg.excess_range_m, tg.excess_range_rate_mps, x, full,
                                           ModelKind::IdealPhi);
                    e *= tg.amplitude;
                    y += e;
                }
            } else {
                Scenario sc{cfg, window, targets, noise_var, spec.oversample};
                y = oracle_echo_dd(sc, x, MigrationGranularity::PerSymbol);
            }
            const DDFrame z = add_noise(y, noise_var, mix_seed(trial_seed, 2));

            std::vector<TargetEstimate> estimates;
            if (spec.estimator == EstimatorChoice::ExhaustiveML) {
                estimates.push_back(exhaustive_ml(z, x, cfg, window, spec.exh_step_r_m,
                                                  spec.exh_step_rr_mps, est.model_kind,
                                                  est.b_order));
            } else if (p_count == 1) {
                estimates.push_back(estimate_single(z, x, cfg, window, est, noise_var));
            } else {
                estimates = clean_multi(z, x, cfg, window, est, noise_var, p_count).estimates;
            }

            const auto errs = compute_metrics(targets, estimates, cfg);
            for (const TargetError& e : errs) {
                if (!e.matched) continue;
                const std::size_t p = static_cast<std::size_t>(e.truth_index);
                sum_d[p] += e.d_err_sq;
                sum_v[p] += e.v_err_sq;
                sum_ae[p] += e.alpha_err_sq;
                sum_ar[p] += e.alpha_ref_sq;
                ++matched[p];
            }
        }

        const double wall =
            spec.record_wall_times
                ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
                : 0.0;
        for (std::size_t p = 0; p < p_count; ++p) {
            MetricRow row;
            row.sweep_value = sv;
            row.target_id = static_cast<int>(p);
            row.trials = matched[p];
            if (matched[p] > 0) {
                row.rmse_r_m = std::sqrt(sum_d[p] / static_cast<double>(matched[p]));
                row.rmse_rr_mps = std::sqrt(sum_v[p] / static_cast<double>(matched[p]));
                row.nrmse_alpha = sum_ar[p] > 0.0 ? std::sqrt(sum_ae[p] / sum_ar[p]) : 0.0;
            }
            row.wall_s = wall;
            rows.push_back(row);
        }
    }
    return rows;
}

// ---- emission ----

enum class EmitFormat { CSV, JSON };

inline constexpr const char* kCsvHeader = "sweep,target_id,rmse_r_m,rmse_rr_mps,nrmse_alpha,trials,wall_s";

namespace detail {
inline std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}
}  // namespace detail

inline void emit_csv(const std::vector<MetricRow>& rows, std::ostream& os) {
    os << kCsvHeader << '\n';
    for (const MetricRow& r : rows)
        os << detail::fmt(r.sweep_value) << ',' << r.target_id << ',' << detail::fmt(r.rmse_r_m)
           << ',' << detail::fmt(r.rmse_rr_mps) << ',' << detail::fmt(r.nrmse_alpha) << ','
           << r.trials << ',' << detail::fmt(r.wall_s) << '\n';
}

inline void emit_json(const std::vector<MetricRow>& rows, std::ostream& os) {
    nlohmann::json arr = nlohmann::json::array();
    for (const MetricRow& r : rows)
        arr.push_back({{"sweep", r.sweep_value},
                       {"target_id", r.target_id},
                       {"rmse_r_m", r.rmse_r_m},
                       {"rmse_rr_mps", r.rmse_rr_mps},
                       {"nrmse_alpha", r.nrmse_alpha},
                       {"trials", r.trials},
                       {"wall_s", r.wall_s}});
    os << arr.dump(2) << '\n';
}

inline void emit(const std::vector<MetricRow>& rows, EmitFormat format, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("emit: cannot open " + path);
    if (format == EmitFormat::CSV)
        emit_csv(rows, os);
    else
        emit_json(rows, os);
    if (!os) throw std::runtime_error("emit: write failed for " + path);
}

inline std::vector<MetricRow> parse_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader)
        throw std::runtime_error("parse_csv: bad header");
    std::vector<MetricRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        MetricRow r;
        auto next = [&]() {
            if (!std::getline(ls, tok, ',')) throw std::runtime_error("parse_csv: short row");
            return tok;
        };
        r.sweep_value = std::stod(next());
        r.target_id = std::stoi(next());
        r.rmse_r_m = std::stod(next());
        r.rmse_rr_mps = std::stod(next());
        r.nrmse_alpha = std::stod(next());
        r.trials = static_cast<std::size_t>(std::stoull(next()));
        r.wall_s = std::stod(next());
        rows.push_back(r);
    }
    return rows;
}

// ---- key = value configuration files ----

/// Parses "key = value" lines; '#' starts a comment; blank lines ignored.
inline std::map<std::string, std::string> parse_key_values(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    };
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }
    return kv;
}

namespace detail {

struct KvReader {
    const std::map<std::string, std::string>& kv;

    bool has(const std::string& k) const { return kv.count(k) > 0; }
    std::string str(const std::string& k, const std::string& dflt) const {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : it->second;
    }
    double num(const std::string& k, double dflt) const {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : std::stod(it->second);
    }
    double require(const std::string& k) const {
        auto it = kv.find(k);
        if (it == kv.end()) throw ConfigError("missing key: " + k);
        return std::stod(it->second);
    }
    std::vector<double> list(const std::string& k, std::vector<double> dflt) const {
        auto it = kv.find(k);
        if (it == kv.end()) return dflt;
        std::vector<double> out;
        std::istringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
        return out;
    }
};

}  // namespace detail

inline ExperimentSpec parse_experiment(std::istream& is) {
    const auto kv = parse_key_values(is);
    const detail::KvReader r{kv};
    ExperimentSpec s;
    s.m_subcarriers = static_cast<std::size_t>(r.num("m_subcarriers", 256));
    s.n_symbols = static_cast<std::size_t>(r.num("n_symbols", 64));
    s.subcarrier_spacing_hz = r.num("subcarrier_spacing_hz", 15e3);
    s.wavelength_m = r.num("wavelength_m", kSpeedOfLight / 4e9);
    s.stop_and_go_order = static_cast<std::size_t>(r.num("stop_and_go_order", 16));
    s.r_bar_min_m = r.num("r_bar_min_m", 20e3);
    s.r_bar_max_m = r.num("r_bar_max_m", 39e3);
    s.v_bar_min_mps = r.num("v_bar_min_mps", 15e3);
    s.v_bar_max_mps = r.num("v_bar_max_mps", 16e3);
    const std::string sweep = r.str("sweep", "snr");
    if (sweep == "b" || sweep == "B")
        s.sweep = SweepVariable::B;
    else if (sweep == "snr")
        s.sweep = SweepVariable::Snr;
    else if (sweep == "v_bar_min")
        s.sweep = SweepVariable::VBarMin;
    else
        throw ConfigError("unknown sweep variable: " + sweep);
    s.sweep_values = r.list("sweep_values", {20.0});
    s.trials = static_cast<std::size_t>(r.num("trials", 100));
    const std::string filter = r.str("filter", "ideal");
    if (filter == "ideal")
        s.filter = FilterKind::Ideal;
    else if (filter == "rect")
        s.filter = FilterKind::Rect;
    else
        throw ConfigError("unknown filter kind: " + filter);
    const std::string estimator = r.str("estimator", "two_step");
    if (estimator == "two_step")
        s.estimator = EstimatorChoice::TwoStep;
    else if (estimator == "exhaustive")
        s.estimator = EstimatorChoice::ExhaustiveML;
    else
        throw ConfigError("unknown estimator: " + estimator);
    s.snr_db = r.num("snr_db", 20.0);
    s.target_powers = r.list("target_powers", {1.0});
    s.fixed_amplitude = r.num("fixed_amplitude", 0) != 0;
    s.min_separation_bins = r.num("min_separation_bins", 0.0);
    s.oversample = static_cast<std::size_t>(r.num("oversample", 4));
    s.seed = static_cast<std::uint64_t>(r.num("seed", 1));
    s.record_wall_times = r.num("record_wall_times", 0) != 0;
    s.est.fine_step_r_m = r.num("fine_step_r_m", 0.0);
    s.est.fine_step_rr_mps = r.num("fine_step_rr_mps", 0.0);
    s.est.fine_pts_r = static_cast<std::size_t>(r.num("fine_pts_r", 1));
    s.est.fine_pts_rr = static_cast<std::size_t>(r.num("fine_pts_rr", 1));
    s.est.bomp_blocks = static_cast<std::size_t>(r.num("bomp_blocks", 4));
    s.est.bomp_threshold = r.num("bomp_threshold", 1.0);
    s.est.sidelobe_order = static_cast<int>(r.num("sidelobe_order", 4));
    s.est.b_order = static_cast<std::size_t>(r.num("estimator_b_order", 0));
    s.est.selection_seed = static_cast<std::uint64_t>(r.num("selection_seed", 0x5eed));
    s.exh_step_r_m = r.num("exh_step_r_m", 0.0);
    s.exh_step_rr_mps = r.num("exh_step_rr_mps", 0.0);
    return s;
}

/// Scenario file for the `simulate` CLI: numerology, window, explicit targets.
struct ScenarioFile {
    Scenario scenario;
    std::uint64_t frame_seed = 1;
    std::uint64_t noise_seed = 2;
    MigrationGranularity granularity = MigrationGranularity::PerSymbol;
};

inline ScenarioFile parse_scenario(std::istream& is) {
    const auto kv = parse_key_values(is);
    const detail::KvReader r{kv};
    FrameConfig cfg(static_cast<std::size_t>(r.num("m_subcarriers", 256)),
                    static_cast<std::size_t>(r.num("n_symbols", 64)),
                    r.num("subcarrier_spacing_hz", 15e3),
                    r.num("wavelength_m", kSpeedOfLight / 4e9),
                    static_cast<std::size_t>(r.num("stop_and_go_order", 16)));
    SceneWindow window(r.num("r_bar_min_m", 20e3), r.num("r_bar_max_m", 39e3),
                       r.num("v_bar_min_mps", 15e3), r.num("v_bar_max_mps", 16e3), cfg);
    std::vector<Target> targets;
    for (std::size_t p = 1;; ++p) {
        const std::string base = "target_" + std::to_string(p) + "_";
        if (!r.has(base + "excess_range_m")) break;
        Target t;
        t.excess_range_m = r.require(base + "excess_range_m");
        t.excess_range_rate_mps = r.require(base + "excess_range_rate_mps");
        t.amplitude = cd{r.num(base + "amplitude_re", 1.0), r.num(base + "amplitude_im", 0.0)};
        targets.push_back(t);
    }
    ScenarioFile out{Scenario{cfg, window, std::move(targets), r.num("noise_var", 0.0),
                              static_cast<std::size_t>(r.num("oversample", 4))},
                     static_cast<std::uint64_t>(r.num("frame_seed", 1)),
                     static_cast<std::uint64_t>(r.num("noise_seed", 2)),
                     r.str("granularity", "per_symbol") == "per_block"
                         ? MigrationGranularity::PerBlock
                         : MigrationGranularity::PerSymbol};
    return out;
}

}  // namespace otfs::bench
