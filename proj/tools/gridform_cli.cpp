// gridform: run the SC / grid-forming VSC comparison scenarios.
//
//   gridform run --scenario voltage_dip --device vsc --out results
//   gridform compare --scenario fault_3ph --set vsc.tvi.i_thr=1.25 --set vsc.tvi.i_max=1.5
//
// Exit codes: 0 pass, 1 verdict failure, 2 configuration error, 3 numerical abort.

#include "gridform/config.hpp"
#include "gridform/metrics.hpp"
#include "gridform/output.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <future>
#include <iostream>

using namespace gridform;

namespace {

struct RunConfig {
    std::string config_path;
    std::string scenario = "load_step";
    std::string device = "both";
    std::string out = "results";
    std::vector<std::string> sets;
    double dt = 0.0;
    bool plots = true;
};

struct Leg {
    Scenario scenario;
    TraceSet traces;
    metrics::MetricReport report;
    std::string provenance;
};

Overrides parse_sets(const std::vector<std::string>& sets) {
    Overrides out;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        auto trim = [](std::string v) {
            const auto a = v.find_first_not_of(" \t");
            const auto b = v.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
        };
        out.emplace_back(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    return out;
}

Scenario make_scenario(const RunConfig& cfg, Device device) {
    CaseParams base = cfg.config_path.empty() ? CaseParams{} : load_config(cfg.config_path);
    Overrides ov = parse_sets(cfg.sets);
    if (cfg.dt > 0.0) ov.emplace_back("scenario.dt", format_double(cfg.dt));
    return build_scenario(parse_scenario(cfg.scenario), device, ov, base);
}

Leg run_leg(const RunConfig& cfg, Device device) {
    Leg leg{make_scenario(cfg, device), {}, {}, {}};
    auto state = init_system(leg.scenario);
    leg.provenance = output::provenance(leg.scenario, state.system.tvi_gain());
    leg.traces = run(leg.scenario, std::move(state));
    leg.report = metrics::compute_metrics(leg.scenario, leg.traces);
    return leg;
}

void write_leg(const RunConfig& cfg, const Leg& leg) {
    namespace fs = std::filesystem;
    const std::string stem = leg.scenario.name() + "_" + (leg.scenario.device == Device::Sc ? "sc" : "vsc");
    output::emit_csv(leg.traces, (fs::path(cfg.out) / (stem + ".csv")).string(), leg.provenance);
    if (cfg.plots) output::emit_plot_data(leg.traces, (fs::path(cfg.out) / "plot").string(), stem, leg.provenance);
    output::write_file((fs::path(cfg.out) / (stem + "_report.txt")).string(), leg.provenance + leg.report.to_text());
    output::append_summary_row((fs::path(cfg.out) / "summary.csv").string(), leg.report);
    std::cout << stem << ": " << leg.traces.size() << " samples written to " << cfg.out << '\n';
}

std::vector<Leg> run_legs(const RunConfig& cfg, const std::vector<Device>& devices) {
    // Legs share nothing mutable, so they may run concurrently.
    std::vector<std::future<Leg>> futures;
    for (Device d : devices) futures.push_back(std::async(std::launch::async, run_leg, cfg, d));
    std::vector<Leg> legs;
    for (auto& f : futures) legs.push_back(f.get());
    return legs;
}

std::vector<Device> devices_for(const std::string& sel) {
    if (sel == "both") return {Device::Sc, Device::Vsc};
    return {parse_device(sel)};
}

int cmd_run(const RunConfig& cfg) {
    for (const auto& leg : run_legs(cfg, devices_for(cfg.device))) {
        write_leg(cfg, leg);
        std::cout << leg.report.to_text();
    }
    return 0;
}

int cmd_compare(const RunConfig& cfg) {
    if (cfg.device != "both") throw ConfigError("compare requires --device both");
    const auto legs = run_legs(cfg, {Device::Sc, Device::Vsc});
    for (const auto& leg : legs) write_leg(cfg, leg);
    const auto summary = metrics::compare(legs[0].report, legs[1].report, legs[0].traces, legs[1].traces);
    const std::string text = summary.to_text();
    output::write_file((std::filesystem::path(cfg.out) / (legs[0].scenario.name() + "_comparison.txt")).string(),
                       legs[0].provenance + text);
    std::cout << text;
    return summary.pass() ? 0 : 1;
}

int cmd_params(const RunConfig& cfg) {
    CaseParams base = cfg.config_path.empty() ? CaseParams{} : load_config(cfg.config_path);
    for (const auto& [k, v] : parse_sets(cfg.sets)) set_parameter(base, k, v);
    validate(base);
    for (const auto& [k, v] : list_parameters(base)) std::cout << k << " = " << v << '\n';
    std::cout << "vsc.h_equivalent = " << format_double(converter::equivalent_inertia(base.vsc.m_p, base.vsc.omega_c))
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synchronous condenser vs grid-forming converter comparison runs"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", cfg.config_path, "case configuration file")->check(CLI::ExistingFile);
        sub->add_option("--set", cfg.sets, "parameter override key=value (repeatable)");
    };
    auto add_run_opts = [&](CLI::App* sub) {
        add_common(sub);
        sub->add_option("--scenario", cfg.scenario, "load_step | voltage_dip | fault_3ph")->required();
        sub->add_option("--out", cfg.out, "output directory");
        sub->add_option("--dt", cfg.dt, "integration step [s]");
        sub->add_flag("!--no-plots", cfg.plots, "skip the per-channel plot data files");
    };

    auto* run_cmd = app.add_subcommand("run", "run one scenario for one or both devices");
    add_run_opts(run_cmd);
    run_cmd->add_option("--device", cfg.device, "sc | vsc | both");
    auto* cmp_cmd = app.add_subcommand("compare", "run SC and VSC and evaluate the comparison verdicts");
    add_run_opts(cmp_cmd);
    cmp_cmd->add_option("--device", cfg.device, "must be both");
    auto* params_cmd = app.add_subcommand("params", "print the resolved parameter set");
    add_common(params_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*run_cmd) return cmd_run(cfg);
        if (*cmp_cmd) return cmd_compare(cfg);
        return cmd_params(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const InitError& e) {
        std::cerr << "initialization error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
