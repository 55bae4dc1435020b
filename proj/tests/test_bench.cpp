#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>
#include <sstream>

#include "otfsradar/bench.hpp"

using namespace otfs;
using namespace otfs::bench;

namespace {

FrameConfig desk_cfg() { return FrameConfig(64, 16, 15e3, 200.0, 4); }

ExperimentSpec tiny_spec() {
    ExperimentSpec s;
    s.m_subcarriers = 64;
    s.n_symbols = 16;
    s.subcarrier_spacing_hz = 15e3;
    s.wavelength_m = 200.0;
    s.stop_and_go_order = 4;
    s.r_bar_min_m = 0.0;
    s.r_bar_max_m = 4000.0;
    s.v_bar_min_mps = 0.0;
    s.v_bar_max_mps = 7e5;
    s.sweep = SweepVariable::Snr;
    s.sweep_values = {200.0};  // effectively noiseless
    s.trials = 2;
    s.filter = FilterKind::Ideal;
    s.estimator = EstimatorChoice::TwoStep;
    s.target_powers = {1.0};
    s.fixed_amplitude = true;
    s.oversample = 4;
    s.seed = 7;
    const FrameConfig cfg = s.base_config();
    s.est.fine_step_r_m = cfg.range_bin_step_m() / 8.0;
    s.est.fine_step_rr_mps = cfg.range_rate_bin_step_mps() / 8.0;
    s.est.fine_pts_r = 33;
    s.est.fine_pts_rr = 33;
    s.est.bomp_blocks = 4;
    return s;
}

std::string to_csv(const std::vector<MetricRow>& rows) {
    std::ostringstream os;
    emit_csv(rows, os);
    return os.str();
}

}  // namespace

TEST_CASE("compute_metrics matches perfect estimates with zero error", "[bench]") {
    const FrameConfig cfg = desk_cfg();
    std::vector<Target> truth{{500.0, 2e5, cd{0.4, -0.3}}, {2500.0, 5e5, cd{1.0, 0.0}}};
    std::vector<TargetEstimate> est(2);
    // estimates arrive in the opposite order; association must still pair them
    est[0].d_hat = 2500.0;
    est[0].v_hat = 5e5;
    est[0].alpha_hat = cd{1.0, 0.0};
    est[1].d_hat = 500.0;
    est[1].v_hat = 2e5;
    est[1].alpha_hat = cd{0.4, -0.3};
    const auto errs = compute_metrics(truth, est, cfg);
    REQUIRE(errs.size() == 2);
    for (const auto& e : errs) {
        CHECK(e.matched);
        CHECK(e.d_err_sq == 0.0);
        CHECK(e.v_err_sq == 0.0);
        CHECK(e.alpha_err_sq == 0.0);
    }
    CHECK(errs[0].truth_index == 0);
    CHECK(errs[0].alpha_ref_sq == Catch::Approx(0.25));
}

TEST_CASE("compute_metrics leaves surplus truth targets unmatched", "[bench]") {
    const FrameConfig cfg = desk_cfg();
    std::vector<Target> truth{{500.0, 2e5, cd{1.0, 0.0}}, {2500.0, 5e5, cd{0.5, 0.0}}};
    std::vector<TargetEstimate> est(1);
    est[0].d_hat = 510.0;
    est[0].v_hat = 2.01e5;
    est[0].alpha_hat = cd{0.9, 0.1};
    const auto errs = compute_metrics(truth, est, cfg);
    REQUIRE(errs.size() == 2);
    CHECK(errs[0].matched);
    CHECK(errs[0].d_err_sq == Catch::Approx(100.0));
    CHECK_FALSE(errs[1].matched);
    CHECK(errs[1].d_err_sq == 0.0);

    const auto none = compute_metrics(truth, {}, cfg);
    CHECK_FALSE(none[0].matched);
    CHECK_FALSE(none[1].matched);
}

TEST_CASE("compute_metrics greedy association takes the closest pair first", "[bench]") {
    const FrameConfig cfg = desk_cfg();
    // two truth targets, one estimate almost on top of the second
    std::vector<Target> truth{{1000.0, 1e5, cd{1.0, 0.0}}, {3000.0, 6e5, cd{1.0, 0.0}}};
    std::vector<TargetEstimate> est(2);
    est[0].d_hat = 3001.0;
    est[0].v_hat = 6.0e5;
    est[1].d_hat = 1200.0;
    est[1].v_hat = 1.1e5;
    const auto errs = compute_metrics(truth, est, cfg);
    CHECK(errs[1].d_err_sq == Catch::Approx(1.0));
    CHECK(errs[0].d_err_sq == Catch::Approx(200.0 * 200.0));
}

TEST_CASE("csv emission round trips byte for byte", "[bench]") {
    std::vector<MetricRow> rows(2);
    rows[0] = {20.0, 0, 1.0 / 3.0, std::sqrt(2.0), 0.1234567890123456, 100, 0.0};
    rows[1] = {25.0, 1, 7.25e-3, 9.5e4, 1.0, 99, 3.5};
    const std::string first = to_csv(rows);
    std::istringstream is(first);
    const auto parsed = parse_csv(is);
    REQUIRE(parsed.size() == 2);
    CHECK(to_csv(parsed) == first);

    // empty result set still carries the header
    CHECK(to_csv({}) == std::string(kCsvHeader) + "\n");

    std::istringstream bad("not,a,header\n1,2,3\n");
    CHECK_THROWS(parse_csv(bad));
}

TEST_CASE("json emission carries the same fields as the csv", "[bench]") {
    std::vector<MetricRow> rows(1);
    rows[0] = {17.0, 2, 1.5, 2.5, 0.25, 42, 1.25};
    std::ostringstream os;
    emit_json(rows, os);
    const auto doc = nlohmann::json::parse(os.str());
    REQUIRE(doc.is_array());
    REQUIRE(doc.size() == 1);
    const auto& r = doc[0];
    CHECK(r.at("sweep").get<double>() == 17.0);
    CHECK(r.at("target_id").get<int>() == 2);
    CHECK(r.at("rmse_r_m").get<double>() == 1.5);
    CHECK(r.at("rmse_rr_mps").get<double>() == 2.5);
    CHECK(r.at("nrmse_alpha").get<double>() == 0.25);
    CHECK(r.at("trials").get<std::size_t>() == 42);
    CHECK(r.at("wall_s").get<double>() == 1.25);
    // field set mirrors the csv header exactly
    std::istringstream hs(kCsvHeader);
    std::string col;
    std::size_t cols = 0;
    while (std::getline(hs, col, ',')) {
        CHECK(r.contains(col == "sweep" ? "sweep" : col));
        ++cols;
    }
    CHECK(r.size() == cols);
}

TEST_CASE("experiment files parse with defaults and overrides", "[bench]") {
    std::istringstream is(
        "# comment line\n"
        "m_subcarriers = 64\n"
        "n_symbols = 16   # trailing comment\n"
        "wavelength_m = 200\n"
        "stop_and_go_order = 4\n"
        "r_bar_min_m = 0\n"
        "r_bar_max_m = 4000\n"
        "v_bar_min_mps = 0\n"
        "v_bar_max_mps = 7e5\n"
        "sweep = b\n"
        "sweep_values = 1, 2, 4\n"
        "trials = 5\n"
        "filter = rect\n"
        "estimator = exhaustive\n"
        "target_powers = 1.0, 0.1\n"
        "fixed_amplitude = 1\n"
        "min_separation_bins = 2.5\n"
        "seed = 99\n"
        "fine_step_r_m = 10\n"
        "fine_pts_r = 9\n"
        "exh_step_r_m = 100\n");
    const ExperimentSpec s = parse_experiment(is);
    CHECK(s.m_subcarriers == 64);
    CHECK(s.n_symbols == 16);
    CHECK(s.subcarrier_spacing_hz == 15e3);  // default kept
    CHECK(s.sweep == SweepVariable::B);
    CHECK(s.sweep_values == std::vector<double>{1.0, 2.0, 4.0});
    CHECK(s.trials == 5);
    CHECK(s.filter == FilterKind::Rect);
    CHECK(s.estimator == EstimatorChoice::ExhaustiveML);
    CHECK(s.target_powers == std::vector<double>{1.0, 0.1});
    CHECK(s.fixed_amplitude);
    CHECK(s.min_separation_bins == 2.5);
    CHECK(s.seed == 99);
    CHECK(s.est.fine_step_r_m == 10.0);
    CHECK(s.est.fine_pts_r == 9);
    CHECK(s.exh_step_r_m == 100.0);
    s.validate();

    std::istringstream bad_sweep("sweep = frequency\n");
    CHECK_THROWS_AS(parse_experiment(bad_sweep), ConfigError);

    ExperimentSpec nondiv = s;
    nondiv.sweep_values = {3.0};
    CHECK_THROWS_AS(nondiv.validate(), ConfigError);
}

TEST_CASE("scenario files parse targets in order", "[bench]") {
    std::istringstream is(
        "m_subcarriers = 64\n"
        "n_symbols = 16\n"
        "wavelength_m = 200\n"
        "stop_and_go_order = 4\n"
        "r_bar_min_m = 0\n"
        "r_bar_max_m = 4000\n"
        "v_bar_min_mps = 0\n"
        "v_bar_max_mps = 7e5\n"
        "noise_var = 0.5\n"
        "oversample = 8\n"
        "frame_seed = 3\n"
        "noise_seed = 4\n"
        "granularity = per_block\n"
        "target_1_excess_range_m = 1000\n"
        "target_1_excess_range_rate_mps = 2e5\n"
        "target_1_amplitude_re = 0.5\n"
        "target_1_amplitude_im = -0.25\n"
        "target_2_excess_range_m = 2000\n"
        "target_2_excess_range_rate_mps = 3e5\n");
    const ScenarioFile sf = parse_scenario(is);
    CHECK(sf.scenario.cfg.m_subcarriers() == 64);
    CHECK(sf.scenario.noise_var == 0.5);
    CHECK(sf.scenario.oversample == 8);
    CHECK(sf.frame_seed == 3);
    CHECK(sf.noise_seed == 4);
    CHECK(sf.granularity == MigrationGranularity::PerBlock);
    REQUIRE(sf.scenario.targets.size() == 2);
    CHECK(sf.scenario.targets[0].excess_range_m == 1000.0);
    CHECK(sf.scenario.targets[0].amplitude == cd{0.5, -0.25});
    CHECK(sf.scenario.targets[1].excess_range_rate_mps == 3e5);
    CHECK(sf.scenario.targets[1].amplitude == cd{1.0, 0.0});  // default
}

TEST_CASE("target draws respect the separation constraint and are deterministic",
          "[bench]") {
    ExperimentSpec s = tiny_spec();
    s.target_powers = {1.0, 0.5, 0.25};
    s.min_separation_bins = 2.0;
    const FrameConfig cfg = s.base_config();
    const SceneWindow w(s.r_bar_min_m, s.r_bar_max_m, s.v_bar_min_mps, s.v_bar_max_mps, cfg);
    for (std::uint64_t t = 0; t < 20; ++t) {
        const auto ts = bench::detail::draw_targets(s, w, mix_seed(s.seed, t));
        REQUIRE(ts.size() == 3);
        for (std::size_t p = 0; p < 3; ++p) {
            CHECK(w.contains(ts[p].excess_range_m, ts[p].excess_range_rate_mps));
            CHECK(std::abs(ts[p].amplitude) ==
                  Catch::Approx(std::sqrt(s.target_powers[p])));
            for (std::size_t q = 0; q < p; ++q) {
                const double dd = (ts[p].excess_range_m - ts[q].excess_range_m) /
                                  cfg.range_bin_step_m();
                const double dv =
                    (ts[p].excess_range_rate_mps - ts[q].excess_range_rate_mps) /
                    cfg.range_rate_bin_step_mps();
                CHECK(dd * dd + dv * dv >= 4.0 - 1e-12);
            }
        }
        const auto again = bench::detail::draw_targets(s, w, mix_seed(s.seed, t));
        CHECK(again[2].excess_range_m == ts[2].excess_range_m);
        CHECK(again[2].amplitude == ts[2].amplitude);
    }
}

TEST_CASE("run_experiment is deterministic and accurate when noiseless", "[bench]") {
    const ExperimentSpec s = tiny_spec();
    const auto rows1 = run_experiment(s);
    const auto rows2 = run_experiment(s);
    CHECK(to_csv(rows1) == to_csv(rows2));

    REQUIRE(rows1.size() == 1);
    const MetricRow& r = rows1.front();
    CHECK(r.sweep_value == 200.0);
    CHECK(r.trials == s.trials);  // every trial must associate the lone target
    CHECK(r.wall_s == 0.0);
    // at 200 dB the only residual error is the fine-grid quantization
    CHECK(r.rmse_r_m <= s.est.fine_step_r_m);
    CHECK(r.rmse_rr_mps <= s.est.fine_step_rr_mps);
    // sub-step offsets rotate the amplitude phase; bin/8 leaves a few percent
    CHECK(r.nrmse_alpha < 0.3);
}

TEST_CASE("run_experiment sweeps emit one row per target and sweep value", "[bench]") {
    ExperimentSpec s = tiny_spec();
    s.sweep = SweepVariable::B;
    s.sweep_values = {1.0, 4.0};
    s.snr_db = 200.0;
    s.trials = 1;
    const auto rows = run_experiment(s);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].sweep_value == 1.0);
    CHECK(rows[1].sweep_value == 4.0);
    CHECK(rows[0].target_id == 0);
}
