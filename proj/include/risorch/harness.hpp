#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "agents.hpp"
#include "config.hpp"
#include "environment.hpp"
#include "rng.hpp"

namespace risorch {

struct TrialResult {
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    double mean_reward = 0.0;
    double optimal_mean = 0.0;
    double normalized_ratio = 0.0;
    double steps_per_sec = 0.0;  // filled only by the timing command
};

struct ResultsTable {
    std::uint64_t fingerprint = 0;
    std::string agent;
    std::size_t n_tot = 0;
    std::uint64_t cardinality = 0;
    std::vector<TrialResult> trials;
    double aggregate_mean = 0.0;
    double aggregate_std = 0.0;
    double aggregate_ratio = 0.0;

    void finalize() {
        double sum = 0.0, ratio = 0.0;
        for (const auto& t : trials) {
            sum += t.mean_reward;
            ratio += t.normalized_ratio;
        }
        const double n = static_cast<double>(trials.size());
        aggregate_mean = trials.empty() ? 0.0 : sum / n;
        aggregate_ratio = trials.empty() ? 0.0 : ratio / n;
        double var = 0.0;
        for (const auto& t : trials) {
            const double d = t.mean_reward - aggregate_mean;
            var += d * d;
        }
        aggregate_std = trials.empty() ? 0.0 : std::sqrt(var / n);
    }
};

namespace seeds {
// purpose tags for per-trial stream separation
inline constexpr std::uint64_t env = 1;
inline constexpr std::uint64_t agent = 2;
inline constexpr std::uint64_t act = 3;
inline constexpr std::uint64_t eval_env = 4;
inline constexpr std::uint64_t eval_act = 5;
}  // namespace seeds

inline std::uint64_t trial_seed(const ExperimentConfig& cfg, std::size_t trial) {
    return derive_seed(cfg.base_seed, trial);
}

inline Environment make_environment(const ExperimentConfig& cfg, std::uint64_t seed,
                                    ObservationMode obs_mode) {
    return Environment(cfg.build_geometry(), cfg.ricean, cfg.build_action_space(),
                       cfg.build_reward_spec(), obs_mode, cfg.scenario, seed,
                       cfg.azimuth_convention, cfg.coherence_interval);
}

// Observation mode the environment must produce for the configured agent.
inline ObservationMode agent_observation_mode(const ExperimentConfig& cfg) {
    switch (cfg.agent_kind) {
        case AgentKind::neural_eg:
        case AgentKind::dqn:
            return cfg.observation_mode;
        default:
            return ObservationMode::none;
    }
}

inline std::unique_ptr<Agent> make_agent(const ExperimentConfig& cfg, const Environment& env,
                                         std::uint64_t agent_seed) {
    const std::uint64_t card = env.action_space().cardinality();
    const ObservationMode mode = agent_observation_mode(cfg);
    const std::size_t input_dim = observation_dimension(
        mode, cfg.n_tot, env.geometry().num_ris(), env.geometry().num_ue(), cfg.bs_antennas);
    switch (cfg.agent_kind) {
        case AgentKind::random:
            return std::make_unique<RandomAgent>(card);
        case AgentKind::optimal:
            return std::make_unique<OptimalAgent>(env);
        case AgentKind::ucb: {
            UcbConfig u;
            u.confidence_width = cfg.ucb_confidence_width;
            return std::make_unique<UcbAgent>(card, agent_seed, u);
        }
        case AgentKind::neural_eg: {
            if (mode == ObservationMode::none)
                throw ConfigError("neural_eg requires an observation mode");
            NeuralEgConfig n;
            n.epsilon = cfg.effective_epsilon();
            n.batch_size = cfg.effective_batch_size();
            n.learning_rate = cfg.effective_learning_rate();
            n.updates_per_batch = cfg.effective_updates_per_batch(card);
            n.variant = cfg.network_variant;
            return std::make_unique<NeuralEgAgent>(input_dim, card, agent_seed, n);
        }
        case AgentKind::dqn: {
            if (mode == ObservationMode::none)
                throw ConfigError("dqn requires an observation mode");
            DqnConfig d;
            d.epsilon = cfg.effective_epsilon();
            d.epsilon_start = cfg.dqn_epsilon_start;
            d.epsilon_decay_steps = cfg.dqn_epsilon_decay_steps;
            d.train_interval = cfg.effective_dqn_train_interval(card);
            d.batch_size = cfg.effective_batch_size();
            d.learning_rate = cfg.effective_learning_rate();
            d.target_update_interval = cfg.dqn_target_update_interval;
            d.target_temperature = cfg.dqn_target_temperature;
            d.gradient_clip = cfg.dqn_gradient_clip;
            d.replay_capacity = cfg.dqn_replay_capacity;
            d.terminal_per_step = cfg.dqn_terminal_per_step;
            d.discount = cfg.dqn_discount;
            d.variant = cfg.network_variant;
            return std::make_unique<DqnAgent>(input_dim, card, agent_seed, d);
        }
    }
    throw ConfigError("unknown agent kind");
}

// One explore-mode training pass: act, step, record, train.
inline void run_training(Agent& agent, Environment& env, std::size_t steps, Rng& act_rng) {
    const bool oracle = agent.required_observation_mode() == AgentObservation::oracle_channels;
    for (std::size_t t = 0; t < steps; ++t) {
        const Observation obs = env.current_observation();
        // the exhaustive baseline has nothing to learn; keep the channel draw
        // sequence identical without paying for the search
        const std::uint64_t a = oracle ? 0 : agent.act(obs, true, act_rng);
        const StepResult res = env.env_step(a);
        if (!oracle) {
            agent.record(obs, a, res.reward, res.next_observation);
            agent.train_tick(t);
        }
    }
}

// Greedy evaluation over `steps` draws of the given environment. Oracle-mode
// agents are re-bound to this environment's channels.
inline double evaluate_steps(Agent& agent, Environment& env, std::size_t steps, Rng& act_rng) {
    OptimalAgent rebound(env);
    Agent& a = agent.required_observation_mode() == AgentObservation::oracle_channels
                   ? static_cast<Agent&>(rebound)
                   : agent;
    double sum = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        const Observation obs = env.current_observation();
        sum += env.env_step(a.act(obs, false, act_rng)).reward;
    }
    return steps > 0 ? sum / static_cast<double>(steps) : 0.0;
}

// Fresh evaluation environment seeded independently of training, so matched
// seeds give identical channel draws to every agent including the optimal
// baseline.
inline double evaluate_static(Agent& agent, const ExperimentConfig& cfg,
                              std::uint64_t eval_env_seed, std::uint64_t eval_act_seed) {
    Environment env = make_environment(cfg, eval_env_seed, agent_observation_mode(cfg));
    Rng act_rng(eval_act_seed);
    return evaluate_steps(agent, env, cfg.eval_steps, act_rng);
}

inline double evaluate_optimal_static(const ExperimentConfig& cfg, std::uint64_t eval_env_seed,
                                      std::uint64_t eval_act_seed) {
    Environment env = make_environment(cfg, eval_env_seed, ObservationMode::none);
    OptimalAgent opt(env);
    Rng act_rng(eval_act_seed);
    return evaluate_steps(opt, env, cfg.eval_steps, act_rng);
}

// Mobility protocol: one continuously advancing environment; training is
// split into eval_intervals chunks, each followed by a greedy evaluation
// window during which learning pauses but the UEs keep walking. Returns the
// mean reward across all windows.
inline double run_mobility_trial(Agent& agent, const ExperimentConfig& cfg,
                                 std::uint64_t env_seed, std::uint64_t act_seed,
                                 std::uint64_t eval_act_seed) {
    Environment env = make_environment(cfg, env_seed, agent_observation_mode(cfg));
    Rng act_rng(act_seed);
    Rng eval_rng(eval_act_seed);
    const std::size_t total_training =
        cfg.effective_training_steps(env.action_space().cardinality());
    const std::size_t intervals = std::max<std::size_t>(cfg.eval_intervals, 1);
    const std::size_t chunk = total_training / intervals;
    double sum = 0.0;
    for (std::size_t w = 0; w < intervals; ++w) {
        run_training(agent, env, chunk, act_rng);
        sum += evaluate_steps(agent, env, cfg.eval_steps, eval_rng);
    }
    return sum / static_cast<double>(intervals);
}

inline TrialResult run_trial(const ExperimentConfig& cfg, std::size_t trial) {
    const std::uint64_t ts = trial_seed(cfg, trial);
    TrialResult out;
    out.trial = trial;
    out.seed = ts;
    if (cfg.scenario == Scenario::mobility) {
        {
            Environment env0 = make_environment(cfg, derive_seed(ts, seeds::env),
                                                agent_observation_mode(cfg));
            auto agent = make_agent(cfg, env0, derive_seed(ts, seeds::agent));
            out.mean_reward = run_mobility_trial(*agent, cfg, derive_seed(ts, seeds::env),
                                                 derive_seed(ts, seeds::act),
                                                 derive_seed(ts, seeds::eval_act));
        }
        {
            ExperimentConfig opt_cfg = cfg;
            opt_cfg.agent_kind = AgentKind::optimal;
            Environment env0 = make_environment(opt_cfg, derive_seed(ts, seeds::env),
                                                ObservationMode::none);
            OptimalAgent opt(env0);
            out.optimal_mean = run_mobility_trial(opt, opt_cfg, derive_seed(ts, seeds::env),
                                                  derive_seed(ts, seeds::act),
                                                  derive_seed(ts, seeds::eval_act));
        }
    } else {
        Environment env = make_environment(cfg, derive_seed(ts, seeds::env),
                                           agent_observation_mode(cfg));
        auto agent = make_agent(cfg, env, derive_seed(ts, seeds::agent));
        Rng act_rng(derive_seed(ts, seeds::act));
        run_training(*agent, env,
                     cfg.effective_training_steps(env.action_space().cardinality()), act_rng);
        out.mean_reward = evaluate_static(*agent, cfg, derive_seed(ts, seeds::eval_env),
                                          derive_seed(ts, seeds::eval_act));
        out.optimal_mean = evaluate_optimal_static(cfg, derive_seed(ts, seeds::eval_env),
                                                   derive_seed(ts, seeds::eval_act));
    }
    out.normalized_ratio = out.optimal_mean != 0.0 ? out.mean_reward / out.optimal_mean : 0.0;
    return out;
}

inline std::size_t harness_thread_count() {
    const char* env = std::getenv("RISORCH_THREADS");
    if (!env) return 1;
    const long n = std::atol(env);
    return n > 1 ? static_cast<std::size_t>(n) : 1;
}

inline ResultsTable run_experiment(const ExperimentConfig& cfg) {
    ResultsTable table;
    table.fingerprint = config_fingerprint(cfg);
    table.agent = agent_kind_name(cfg.agent_kind);
    table.n_tot = cfg.n_tot;
    table.cardinality = cfg.build_action_space().cardinality();
    table.trials.resize(cfg.trials);
    const std::size_t threads = std::min(harness_thread_count(), cfg.trials);
    if (threads <= 1) {
        for (std::size_t t = 0; t < cfg.trials; ++t) table.trials[t] = run_trial(cfg, t);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex mtx;
        for (std::size_t i = 0; i < threads; ++i) {
            pool.emplace_back([&]() {
                for (;;) {
                    std::size_t t;
                    {
                        std::lock_guard<std::mutex> lock(mtx);
                        if (next >= cfg.trials) return;
                        t = next++;
                    }
                    table.trials[t] = run_trial(cfg, t);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    table.finalize();
    return table;
}

// Wall-clock steps per second of the full act + record + train cycle, after
// a 50-step warm-up; median of three timed repetitions.
inline double measure_throughput(const ExperimentConfig& cfg, std::size_t timed_steps = 200,
                                 std::size_t warmup_steps = 50) {
    const std::uint64_t ts = trial_seed(cfg, 0);
    Environment env = make_environment(cfg, derive_seed(ts, seeds::env),
                                       agent_observation_mode(cfg));
    auto agent = make_agent(cfg, env, derive_seed(ts, seeds::agent));
    Rng act_rng(derive_seed(ts, seeds::act));
    auto cycle = [&](std::size_t n) {
        for (std::size_t t = 0; t < n; ++t) {
            const Observation obs = env.current_observation();
            const std::uint64_t a = agent->act(obs, true, act_rng);
            const StepResult res = env.env_step(a);
            agent->record(obs, a, res.reward, res.next_observation);
            agent->train_tick(t);
        }
    };
    cycle(warmup_steps);
    std::vector<double> rates(3);
    for (auto& r : rates) {
        const auto t0 = std::chrono::steady_clock::now();
        cycle(timed_steps);
        const auto t1 = std::chrono::steady_clock::now();
        const double secs = std::chrono::duration<double>(t1 - t0).count();
        r = static_cast<double>(timed_steps) / std::max(secs, 1e-12);
    }
    std::sort(rates.begin(), rates.end());
    return rates[1];
}

namespace detail {
inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace detail

inline std::string results_to_csv(const std::vector<ResultsTable>& tables) {
    std::ostringstream os;
    os << "fingerprint,agent,n_tot,card_A,trial,seed,mean_reward,normalized_ratio,std,"
          "steps_per_sec\n";
    for (const auto& tab : tables) {
        for (const auto& t : tab.trials) {
            os << tab.fingerprint << ',' << tab.agent << ',' << tab.n_tot << ','
               << tab.cardinality << ',' << t.trial << ',' << t.seed << ','
               << detail::format_g17(t.mean_reward) << ','
               << detail::format_g17(t.normalized_ratio) << ','
               << detail::format_g17(tab.aggregate_std) << ','
               << detail::format_g17(t.steps_per_sec) << '\n';
        }
    }
    return os.str();
}

inline std::string results_to_json(const std::vector<ResultsTable>& tables) {
    // hand-rolled emission keeps field order and float formatting byte-stable
    std::ostringstream os;
    os << "[\n";
    for (std::size_t i = 0; i < tables.size(); ++i) {
        const auto& tab = tables[i];
        os << "  {\n"
           << "    \"fingerprint\": " << tab.fingerprint << ",\n"
           << "    \"agent\": \"" << tab.agent << "\",\n"
           << "    \"n_tot\": " << tab.n_tot << ",\n"
           << "    \"card_A\": " << tab.cardinality << ",\n"
           << "    \"aggregate\": {\n"
           << "      \"mean_reward\": " << detail::format_g17(tab.aggregate_mean) << ",\n"
           << "      \"std\": " << detail::format_g17(tab.aggregate_std) << ",\n"
           << "      \"normalized_ratio\": " << detail::format_g17(tab.aggregate_ratio) << "\n"
           << "    },\n"
           << "    \"trials\": [\n";
        for (std::size_t j = 0; j < tab.trials.size(); ++j) {
            const auto& t = tab.trials[j];
            os << "      {\"trial\": " << t.trial << ", \"seed\": " << t.seed
               << ", \"mean_reward\": " << detail::format_g17(t.mean_reward)
               << ", \"normalized_ratio\": " << detail::format_g17(t.normalized_ratio)
               << ", \"steps_per_sec\": " << detail::format_g17(t.steps_per_sec) << "}"
               << (j + 1 < tab.trials.size() ? "," : "") << "\n";
        }
        os << "    ]\n  }" << (i + 1 < tables.size() ? "," : "") << "\n";
    }
    os << "]\n";
    return os.str();
}

inline void emit_results(const std::vector<ResultsTable>& tables, const std::string& path,
                         const std::string& format) {
    std::string payload;
    if (format == "csv") payload = results_to_csv(tables);
    else if (format == "json") payload = results_to_json(tables);
    else throw ConfigError("unknown output format '" + format + "'");
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write results to '" + path + "'");
    out << payload;
    if (!out) throw std::runtime_error("write failure on '" + path + "'");
}

}  // namespace risorch
