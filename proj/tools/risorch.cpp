#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "risorch/config.hpp"
#include "risorch/harness.hpp"
#include "risorch/neural.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_path;
    std::string format = "csv";
    long trials = -1;
    long long seed = -1;
};

risorch::ExperimentConfig load(const CommonOpts& opts) {
    risorch::ExperimentConfig cfg;
    if (!opts.config_path.empty()) cfg = risorch::load_config_file(opts.config_path);
    for (const auto& kv : opts.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw risorch::ConfigError("override '" + kv + "' is not key=value");
        risorch::apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (opts.trials >= 0) cfg.trials = static_cast<std::size_t>(opts.trials);
    if (opts.seed >= 0) cfg.base_seed = static_cast<std::uint64_t>(opts.seed);
    if (!opts.out_path.empty()) cfg.output_path = opts.out_path;
    return cfg;
}

void add_common(CLI::App* app, CommonOpts& opts) {
    app->add_option("config", opts.config_path, "config file (flat key = value format)");
    app->add_option("--set", opts.overrides, "override a config entry, key=value")
        ->take_all();
    app->add_option("--trials", opts.trials, "number of trials");
    app->add_option("--seed", opts.seed, "base seed");
    app->add_option("--out", opts.out_path, "output file path");
    app->add_option("--format", opts.format, "output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
}

void print_table(const risorch::ResultsTable& t) {
    std::printf("%-10s n_tot=%-4zu card=%-5llu mean=%.6f std=%.6f ratio=%.4f\n",
                t.agent.c_str(), t.n_tot, static_cast<unsigned long long>(t.cardinality),
                t.aggregate_mean, t.aggregate_std, t.aggregate_ratio);
}

void emit(const std::vector<risorch::ResultsTable>& tables, const risorch::ExperimentConfig& cfg,
          const std::string& format) {
    if (!cfg.output_path.empty()) risorch::emit_results(tables, cfg.output_path, format);
}

int cmd_run(const CommonOpts& opts) {
    const auto cfg = load(opts);
    const auto table = risorch::run_experiment(cfg);
    print_table(table);
    emit({table}, cfg, opts.format);
    return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::vector<std::size_t>& n_tots,
              const std::vector<std::string>& agents) {
    const auto base = load(opts);
    std::vector<risorch::ResultsTable> tables;
    for (std::size_t n : n_tots) {
        for (const auto& a : agents) {
            risorch::ExperimentConfig cfg = base;
            cfg.n_tot = n;
            risorch::apply_config_entry(cfg, "agent.kind", a);
            const auto table = risorch::run_experiment(cfg);
            print_table(table);
            tables.push_back(table);
        }
    }
    emit(tables, base, opts.format);
    return 0;
}

int cmd_power_sweep(const CommonOpts& opts, const std::vector<double>& powers,
                    const std::vector<std::string>& agents) {
    const auto base = load(opts);
    std::vector<risorch::ResultsTable> tables;
    for (double p : powers) {
        for (const auto& a : agents) {
            risorch::ExperimentConfig cfg = base;
            cfg.power_dbm = p;
            risorch::apply_config_entry(cfg, "agent.kind", a);
            const auto table = risorch::run_experiment(cfg);
            std::printf("P=%5.1f dBm  ", p);
            print_table(table);
            tables.push_back(table);
        }
    }
    emit(tables, base, opts.format);
    return 0;
}

int cmd_timing(const CommonOpts& opts, const std::vector<std::string>& agents,
               std::size_t steps) {
    const auto base = load(opts);
    for (const auto& a : agents) {
        risorch::ExperimentConfig cfg = base;
        risorch::apply_config_entry(cfg, "agent.kind", a);
        const double sps = risorch::measure_throughput(cfg, steps);
        std::printf("%-10s n_tot=%-4zu %12.2f steps/sec\n", a.c_str(), cfg.n_tot, sps);
    }
    return 0;
}

int cmd_gradcheck(std::size_t input_dim, std::size_t output_dim, double epsilon,
                  double tolerance) {
    auto net = risorch::build_reward_network<double>(input_dim, output_dim,
                                                     risorch::NetworkVariant::conv, 11);
    risorch::Rng rng(17);
    std::vector<double> x(input_dim);
    for (auto& v : x) v = rng.gaussian();
    const auto report = risorch::gradient_check(net, x, output_dim / 2, 0.75, epsilon, 250);
    std::printf("checked %zu parameters, max relative error %.3e (tolerance %.1e)\n",
                report.checked_parameters, report.max_relative_error, tolerance);
    return report.max_relative_error < tolerance ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-RIS downlink orchestration benchmark"};
    app.require_subcommand(1);

    CommonOpts run_opts, sweep_opts, power_opts, timing_opts;
    std::vector<std::size_t> n_tots{32, 64};
    std::vector<double> powers{10.0, 30.0, 50.0};
    std::vector<std::string> agents{"random", "ucb", "neural_eg", "dqn"};
    std::size_t timing_steps = 200;
    std::size_t gc_input = 400, gc_output = 16;
    double gc_epsilon = 1e-4, gc_tolerance = 1e-4;

    auto* run = app.add_subcommand("run", "run one experiment");
    add_common(run, run_opts);

    auto* sweep = app.add_subcommand("sweep", "sweep n_tot over several agents");
    add_common(sweep, sweep_opts);
    sweep->add_option("--n-tot", n_tots, "n_tot values to sweep")->take_all();
    sweep->add_option("--agents", agents, "agent kinds to run")->take_all();

    auto* psweep = app.add_subcommand("power-sweep", "sweep transmit power");
    add_common(psweep, power_opts);
    psweep->add_option("--powers", powers, "transmit powers in dBm")->take_all();
    psweep->add_option("--agents", agents, "agent kinds to run")->take_all();

    auto* timing = app.add_subcommand("timing", "measure steps/sec per agent");
    add_common(timing, timing_opts);
    timing->add_option("--agents", agents, "agent kinds to time")->take_all();
    timing->add_option("--steps", timing_steps, "timed steps per repetition");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
    gradcheck->add_option("--input-dim", gc_input, "network input dimension");
    gradcheck->add_option("--output-dim", gc_output, "network output dimension");
    gradcheck->add_option("--epsilon", gc_epsilon, "finite-difference step");
    gradcheck->add_option("--tolerance", gc_tolerance, "max relative error allowed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_opts);
        if (sweep->parsed()) return cmd_sweep(sweep_opts, n_tots, agents);
        if (psweep->parsed()) return cmd_power_sweep(power_opts, powers, agents);
        if (timing->parsed()) return cmd_timing(timing_opts, agents, timing_steps);
        if (gradcheck->parsed())
            return cmd_gradcheck(gc_input, gc_output, gc_epsilon, gc_tolerance);
    } catch (const risorch::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
