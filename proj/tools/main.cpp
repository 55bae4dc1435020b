// Command line front end: simulate oracle frames, run the estimator on a
// frame, run Monte Carlo benchmarks, and check the closed-form models against
// the oracle.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "otfsradar/bench.hpp"
#include "otfsradar/frame_io.hpp"

namespace {

using namespace otfs;
using nlohmann::json;

bench::ScenarioFile load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open scenario file: " + path);
    return bench::parse_scenario(is);
}

DDFrame received_frame(const bench::ScenarioFile& sf, const DDFrame& x) {
    const DDFrame y = oracle_echo_dd(sf.scenario, x, sf.granularity);
    return add_noise(y, sf.scenario.noise_var, sf.noise_seed);
}

json estimate_to_json(const TargetEstimate& e) {
    return json{{"d_hat_m", e.d_hat},
                {"v_hat_mps", e.v_hat},
                {"alpha_hat_re", e.alpha_hat.real()},
                {"alpha_hat_im", e.alpha_hat.imag()},
                {"objective", e.objective},
                {"coarse_k", e.coarse_k},
                {"coarse_l", e.coarse_l},
                {"iterations", e.iterations_used}};
}

void print_estimates(const std::vector<TargetEstimate>& estimates) {
    std::printf("%4s %16s %16s %12s %12s %14s %5s %5s\n", "id", "d_hat_m", "v_hat_mps",
                "alpha_re", "alpha_im", "objective", "k~", "l~");
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const TargetEstimate& e = estimates[i];
        std::printf("%4zu %16.6f %16.6f %12.6f %12.6f %14.6e %5d %5d\n", i, e.d_hat,
                    e.v_hat, e.alpha_hat.real(), e.alpha_hat.imag(), e.objective, e.coarse_k,
                    e.coarse_l);
    }
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_path,
                 const std::string& tx_path, const std::string& csv_path) {
    const bench::ScenarioFile sf = load_scenario(scenario_path);
    const DDFrame x = random_qam_frame(sf.scenario.cfg, sf.frame_seed);
    const DDFrame z = received_frame(sf, x);
    io::save(out_path, z);
    if (!tx_path.empty()) io::save(tx_path, x);
    if (!csv_path.empty()) io::save_csv(csv_path, z);
    std::printf("wrote %s (%zu x %zu, energy %.6e)\n", out_path.c_str(), z.rows(), z.cols(),
                z.energy());
    return 0;
}

int cmd_estimate(const std::string& scenario_path, const std::string& rx_path,
                 const std::string& tx_path, std::size_t target_count,
                 const std::string& model, const EstimatorConfig& est_in,
                 const std::string& json_path) {
    const bench::ScenarioFile sf = load_scenario(scenario_path);
    const FrameConfig& cfg = sf.scenario.cfg;
    auto load_checked = [&](const std::string& p) {
        DDFrame f = io::load_dd(p);
        if (!f.matches(cfg)) throw ConfigError("frame size mismatch: " + p);
        return f;
    };
    const DDFrame z = rx_path.empty() ? received_frame(sf, random_qam_frame(cfg, sf.frame_seed))
                                      : load_checked(rx_path);
    const DDFrame x =
        tx_path.empty() ? random_qam_frame(cfg, sf.frame_seed) : load_checked(tx_path);

    EstimatorConfig est = est_in;
    if (model == "ideal")
        est.model_kind = ModelKind::IdealPhi;
    else if (model == "rect")
        est.model_kind = ModelKind::RectApprox;
    else if (model == "rect-exact")
        est.model_kind = ModelKind::RectPsi;
    else
        throw ConfigError("unknown model: " + model);
    if (est.fine_step_r_m <= 0.0) est.fine_step_r_m = cfg.range_bin_step_m() / 10.0;
    if (est.fine_step_rr_mps <= 0.0) est.fine_step_rr_mps = cfg.range_rate_bin_step_mps() / 10.0;
    if (target_count == 0) target_count = std::max<std::size_t>(sf.scenario.targets.size(), 1);
    est.bomp_blocks = 4 * target_count;

    std::vector<TargetEstimate> estimates;
    if (target_count == 1) {
        estimates.push_back(estimate_single(z, x, cfg, sf.scenario.window, est,
                                            sf.scenario.noise_var));
    } else {
        const CleanResult res = clean_multi(z, x, cfg, sf.scenario.window, est,
                                            sf.scenario.noise_var, target_count);
        estimates = res.estimates;
        if (res.shortfall) std::fprintf(stderr, "warning: stopped before %zu targets\n",
                                        target_count);
    }
    print_estimates(estimates);
    if (!json_path.empty()) {
        json arr = json::array();
        for (const TargetEstimate& e : estimates) arr.push_back(estimate_to_json(e));
        std::ofstream os(json_path);
        if (!os) throw ConfigError("cannot open output: " + json_path);
        os << arr.dump(2) << '\n';
    }
    return 0;
}

int cmd_bench(const std::string& experiment_path, const std::string& out_path,
              const std::string& format) {
    std::ifstream is(experiment_path);
    if (!is) throw ConfigError("cannot open experiment file: " + experiment_path);
    const bench::ExperimentSpec spec = bench::parse_experiment(is);
    const auto rows = bench::run_experiment(spec);
    const bench::EmitFormat fmt =
        format == "json" ? bench::EmitFormat::JSON : bench::EmitFormat::CSV;
    if (out_path.empty() || out_path == "-") {
        if (fmt == bench::EmitFormat::CSV)
            bench::emit_csv(rows, std::cout);
        else
            bench::emit_json(rows, std::cout);
    } else {
        bench::emit(rows, fmt, out_path);
        std::printf("wrote %s (%zu rows)\n", out_path.c_str(), rows.size());
    }
    return 0;
}

int cmd_validate(const std::string& scenario_path) {
    const bench::ScenarioFile sf = load_scenario(scenario_path);
    const FrameConfig& cfg = sf.scenario.cfg;
    const DDFrame x = random_qam_frame(cfg, sf.frame_seed);
    Scenario noiseless = sf.scenario;
    noiseless.noise_var = 0.0;
    const DDFrame oracle = oracle_echo_dd(noiseless, x, sf.granularity);

    const struct {
        const char* name;
        ModelKind kind;
    } kinds[] = {{"ideal", ModelKind::IdealPhi},
                 {"rect-exact", ModelKind::RectPsi},
                 {"rect-approx", ModelKind::RectApprox}};
    std::printf("%-12s %12s\n", "model", "nrmse");
    for (const auto& k : kinds) {
        DDFrame y(cfg);
        for (const Target& t : sf.scenario.targets) {
            DDFrame e = model_echo(t.excess_range_m, t.excess_range_rate_mps, x, cfg, k.kind);
            e *= t.amplitude;
            y += e;
        }
        double err = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) err += std::norm(y.raw()[i] - oracle.raw()[i]);
        std::printf("%-12s %12.6f\n", k.name, std::sqrt(err / oracle.energy()));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OTFS opportunistic radar sensing toolkit"};
    app.require_subcommand(1);

    std::string scenario_path, out_path, tx_path, csv_path, rx_path, json_path;
    std::string model = "ideal", format = "csv", experiment_path;
    std::size_t target_count = 0;
    otfs::EstimatorConfig est;
    est.fine_pts_r = 21;
    est.fine_pts_rr = 21;

    CLI::App* sim = app.add_subcommand("simulate", "generate an oracle echo frame");
    sim->add_option("--scenario", scenario_path, "scenario key=value file")->required();
    sim->add_option("--out", out_path, "received-frame container path")->required();
    sim->add_option("--tx-out", tx_path, "also save the transmitted frame");
    sim->add_option("--csv", csv_path, "also dump the received frame as CSV");

    CLI::App* estc = app.add_subcommand("estimate", "estimate targets from a frame");
    estc->add_option("--scenario", scenario_path, "scenario key=value file")->required();
    estc->add_option("--rx", rx_path, "received frame (default: simulate from scenario)");
    estc->add_option("--tx", tx_path, "transmitted frame (default: scenario frame_seed)");
    estc->add_option("--targets", target_count, "number of targets to extract");
    estc->add_option("--model", model, "ideal | rect | rect-exact");
    estc->add_option("--fine-step-r", est.fine_step_r_m, "fine grid range step [m]");
    estc->add_option("--fine-step-rr", est.fine_step_rr_mps, "fine grid rate step [m/s]");
    estc->add_option("--fine-pts-r", est.fine_pts_r, "fine grid range points");
    estc->add_option("--fine-pts-rr", est.fine_pts_rr, "fine grid rate points");
    estc->add_option("--json", json_path, "write estimates as JSON");

    CLI::App* ben = app.add_subcommand("bench", "run a Monte Carlo experiment");
    ben->add_option("--experiment", experiment_path, "experiment key=value file")->required();
    ben->add_option("--out", out_path, "output path ('-' for stdout)");
    ben->add_option("--format", format, "csv | json");

    CLI::App* val = app.add_subcommand("validate-model", "model-vs-oracle NRMSE report");
    val->add_option("--scenario", scenario_path, "scenario key=value file")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (sim->parsed()) return cmd_simulate(scenario_path, out_path, tx_path, csv_path);
        if (estc->parsed())
            return cmd_estimate(scenario_path, rx_path, tx_path, target_count, model, est,
                                json_path);
        if (ben->parsed()) return cmd_bench(experiment_path, out_path, format);
        if (val->parsed()) return cmd_validate(scenario_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
