#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "environment.hpp"
#include "neural.hpp"
#include "rng.hpp"

namespace risorch {

enum class AgentObservation { full_csi, partial_aod, none, oracle_channels };

// Common controller interface. act() with explore = false must be
// deterministic given the agent's internal state; learning happens through
// record() and train_tick().
class Agent {
  public:
    virtual ~Agent() = default;
    virtual std::uint64_t act(const Observation& obs, bool explore, Rng& rng) = 0;
    virtual void record(const Observation& obs, std::uint64_t action, double reward,
                        const Observation& next_obs) {
        (void)obs;
        (void)action;
        (void)reward;
        (void)next_obs;
    }
    virtual void train_tick(std::uint64_t step) { (void)step; }
    virtual AgentObservation required_observation_mode() const = 0;
};

class RandomAgent : public Agent {
  public:
    explicit RandomAgent(std::uint64_t cardinality) : cardinality_(cardinality) {
        if (cardinality_ < 1) throw std::invalid_argument("cardinality must be >= 1");
    }
    std::uint64_t act(const Observation&, bool, Rng& rng) override {
        return rng.uniform_int(cardinality_);
    }
    AgentObservation required_observation_mode() const override { return AgentObservation::none; }

  private:
    std::uint64_t cardinality_;
};

// Exhaustive per-step search over the current channel realization. Needs
// oracle access to the environment's channels, so it holds a reference.
// Every candidate is recomputed from the raw channels instead of going
// through the environment's factored evaluator, keeping the baseline an
// independent reference whose cost scales with the full codebook.
class OptimalAgent : public Agent {
  public:
    explicit OptimalAgent(const Environment& env) : env_(&env) {}
    std::uint64_t act(const Observation&, bool, Rng&) override {
        const ActionSpace& space = env_->action_space();
        const ChannelSet& cs = env_->current_channels();
        const RewardSpec& spec = env_->reward_spec();
        std::uint64_t best = 0;
        double best_reward = -std::numeric_limits<double>::infinity();
        for (std::uint64_t a = 0; a < space.cardinality(); ++a) {
            const double r = compute_reward(compute_sinrs(cs, space.decode(a), spec), spec);
            if (r > best_reward) {
                best_reward = r;
                best = a;
            }
        }
        return best;
    }
    AgentObservation required_observation_mode() const override {
        return AgentObservation::oracle_channels;
    }

  private:
    const Environment* env_;
};

struct UcbConfig {
    double confidence_width = 1.5;
};

// Upper-confidence-bound bandit over the flat action space. Running averages
// start from optimistic random draws on [r_bar, 2 r_bar] (r_bar is the
// magnitude of the first observed reward), so untried arms keep getting
// selected until their real means fall below the best arm found so far.
// Counts start at zero with a zero confidence bonus, and an arm's first real
// sample overwrites its random initialization.
class UcbAgent : public Agent {
  public:
    UcbAgent(std::uint64_t cardinality, std::uint64_t seed, UcbConfig cfg = {})
        : cfg_(cfg),
          means_(cardinality, 0.0),
          counts_(cardinality, 0),
          init_rng_(seed) {
        if (cardinality < 1) throw std::invalid_argument("cardinality must be >= 1");
    }

    std::uint64_t act(const Observation&, bool explore, Rng& rng) override {
        if (!initialized_) return rng.uniform_int(means_.size());
        std::uint64_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        const double ln_t = std::log(static_cast<double>(step_ > 0 ? step_ : 1));
        for (std::uint64_t a = 0; a < means_.size(); ++a) {
            double score = means_[a];
            if (explore && cfg_.confidence_width != 0.0 && counts_[a] > 0)
                score += cfg_.confidence_width *
                         std::sqrt(ln_t / static_cast<double>(counts_[a]));
            if (score > best_score) {
                best_score = score;
                best = a;
            }
        }
        return best;
    }

    void record(const Observation&, std::uint64_t action, double reward,
                const Observation&) override {
        if (!initialized_) {
            // the probe reward sets the scale of the random initialization
            const double r_bar = std::max(std::abs(reward), 1e-3);
            for (auto& m : means_) m = init_rng_.uniform(r_bar, 2.0 * r_bar);
            initialized_ = true;
        }
        ++step_;
        if (counts_[action] == 0) {
            counts_[action] = 1;
            means_[action] = reward;
        } else {
            ++counts_[action];
            means_[action] += (reward - means_[action]) / static_cast<double>(counts_[action]);
        }
    }

    AgentObservation required_observation_mode() const override { return AgentObservation::none; }

    const std::vector<double>& means() const { return means_; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }
    std::uint64_t step() const { return step_; }

  private:
    UcbConfig cfg_;
    std::vector<double> means_;
    std::vector<std::uint64_t> counts_;
    Rng init_rng_;
    bool initialized_ = false;
    std::uint64_t step_ = 0;
};

template <class Real>
std::vector<Real> to_real(const std::vector<double>& v) {
    std::vector<Real> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<Real>(v[i]);
    return out;
}

template <class Real>
std::uint64_t argmax_lowest(const std::vector<Real>& v) {
    std::uint64_t best = 0;
    for (std::uint64_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

enum class OptimizerKind { sgd, adam };

struct NeuralEgConfig {
    double epsilon = 0.3;
    std::size_t batch_size = 32;  // t'
    double learning_rate = 0.003;
    // optimizer passes over each collected batch before it is discarded
    std::size_t updates_per_batch = 4;
    OptimizerKind optimizer = OptimizerKind::adam;
    NetworkVariant variant = NetworkVariant::conv;
};

// Contextual bandit with a reward-prediction network: epsilon-greedy action
// selection, then one Adam step on the summed masked MSE every t' steps,
// after which the pending batch is discarded.
class NeuralEgAgent : public Agent {
  public:
    NeuralEgAgent(std::size_t input_dim, std::uint64_t cardinality, std::uint64_t seed,
                  NeuralEgConfig cfg = {}, AgentObservation obs_mode = AgentObservation::full_csi)
        : cfg_(cfg),
          obs_mode_(obs_mode),
          cardinality_(cardinality),
          net_(build_reward_network<float>(input_dim, cardinality, cfg.variant, seed)) {}

    std::uint64_t act(const Observation& obs, bool explore, Rng& rng) override {
        if (explore && rng.uniform() < cfg_.epsilon) return rng.uniform_int(cardinality_);
        if (obs.data.size() != net_.input_dim())
            throw std::domain_error("observation dimension does not match network input");
        return argmax_lowest(net_.forward(to_real<float>(obs.data)));
    }

    void record(const Observation& obs, std::uint64_t action, double reward,
                const Observation&) override {
        pending_obs_.push_back(to_real<float>(obs.data));
        pending_actions_.push_back(static_cast<std::size_t>(action));
        pending_rewards_.push_back(static_cast<float>(reward));
    }

    void train_tick(std::uint64_t) override {
        if (pending_actions_.size() < cfg_.batch_size) return;
        const std::size_t batch = pending_actions_.size();
        std::vector<float> input;
        input.reserve(batch * net_.input_dim());
        for (const auto& o : pending_obs_) input.insert(input.end(), o.begin(), o.end());
        const std::size_t passes = std::max<std::size_t>(1, cfg_.updates_per_batch);
        for (std::size_t pass = 0; pass < passes; ++pass) {
            const auto& out = net_.forward_batch(input, batch, true);
            const auto seed = masked_mse_gradient<float>(out, net_.output_dim(),
                                                         pending_actions_, pending_rewards_);
            const auto grad = net_.backward_batch(seed);
            if (cfg_.optimizer == OptimizerKind::adam)
                net_.adam_step(grad, cfg_.learning_rate);
            else
                net_.sgd_step(grad, cfg_.learning_rate);
        }
        pending_obs_.clear();
        pending_actions_.clear();
        pending_rewards_.clear();
    }

    AgentObservation required_observation_mode() const override { return obs_mode_; }
    Network<float>& network() { return net_; }

  private:
    NeuralEgConfig cfg_;
    AgentObservation obs_mode_;
    std::uint64_t cardinality_;
    Network<float> net_;
    std::vector<std::vector<float>> pending_obs_;
    std::vector<std::size_t> pending_actions_;
    std::vector<float> pending_rewards_;
};

struct DqnConfig {
    double epsilon = 0.05;             // exploration floor after annealing
    double epsilon_start = 1.0;
    std::size_t epsilon_decay_steps = 500;  // explore-mode acts from start to floor
    std::size_t train_interval = 1;    // optimize on every k-th training tick
    std::size_t batch_size = 128;
    double learning_rate = 0.002;
    std::size_t target_update_interval = 100;
    double target_temperature = 0.18;  // soft-copy weight
    double gradient_clip = 1000.0;     // elementwise, symmetric interval
    std::size_t replay_capacity = 50000;
    bool terminal_per_step = true;     // target = r; otherwise r + gamma max Q_target(s')
    double discount = 0.99;
    NetworkVariant variant = NetworkVariant::conv;
};

// Deep Q-network with a bounded FIFO replay buffer, uniform-with-replacement
// minibatch sampling, elementwise gradient clipping, and a periodically
// soft-updated target network. In terminal-per-step mode every step is its
// own episode and the target is just the observed reward.
class DqnAgent : public Agent {
  public:
    DqnAgent(std::size_t input_dim, std::uint64_t cardinality, std::uint64_t seed,
             DqnConfig cfg = {}, AgentObservation obs_mode = AgentObservation::full_csi)
        : cfg_(cfg),
          obs_mode_(obs_mode),
          cardinality_(cardinality),
          net_(build_reward_network<float>(input_dim, cardinality, cfg.variant, seed)),
          target_net_(net_),
          sample_rng_(derive_seed(seed, 0x9d1)) {}

    std::uint64_t act(const Observation& obs, bool explore, Rng& rng) override {
        if (explore) {
            const double eps = annealed_epsilon();
            ++explore_acts_;
            if (rng.uniform() < eps) return rng.uniform_int(cardinality_);
        }
        if (obs.data.size() != net_.input_dim())
            throw std::domain_error("observation dimension does not match network input");
        return argmax_lowest(net_.forward(to_real<float>(obs.data)));
    }

    // Linear decay from epsilon_start to the epsilon floor over the first
    // epsilon_decay_steps explore-mode actions.
    double annealed_epsilon() const {
        if (explore_acts_ >= cfg_.epsilon_decay_steps) return cfg_.epsilon;
        const double frac = static_cast<double>(explore_acts_) /
                            static_cast<double>(cfg_.epsilon_decay_steps);
        return cfg_.epsilon_start + frac * (cfg_.epsilon - cfg_.epsilon_start);
    }

    void record(const Observation& obs, std::uint64_t action, double reward,
                const Observation& next_obs) override {
        Experience e;
        e.obs = to_real<float>(obs.data);
        e.action = static_cast<std::size_t>(action);
        e.reward = static_cast<float>(reward);
        if (!cfg_.terminal_per_step) e.next_obs = to_real<float>(next_obs.data);
        if (replay_.size() < cfg_.replay_capacity) {
            replay_.push_back(std::move(e));
        } else {
            replay_[replay_head_] = std::move(e);
            replay_head_ = (replay_head_ + 1) % cfg_.replay_capacity;
        }
    }

    void train_tick(std::uint64_t) override {
        ++tick_count_;
        if (cfg_.train_interval > 1 && tick_count_ % cfg_.train_interval != 0) return;
        if (replay_.size() < cfg_.batch_size) return;
        const std::size_t batch = cfg_.batch_size;
        const std::size_t dim = net_.input_dim();
        std::vector<std::size_t> picks(batch);
        for (auto& p : picks) p = static_cast<std::size_t>(sample_rng_.uniform_int(replay_.size()));

        std::vector<float> targets(batch);
        if (cfg_.terminal_per_step) {
            for (std::size_t i = 0; i < batch; ++i) targets[i] = replay_[picks[i]].reward;
        } else {
            std::vector<float> next_input;
            next_input.reserve(batch * dim);
            for (std::size_t i = 0; i < batch; ++i)
                next_input.insert(next_input.end(), replay_[picks[i]].next_obs.begin(),
                                  replay_[picks[i]].next_obs.end());
            const auto& q_next = target_net_.forward_batch(next_input, batch, false);
            for (std::size_t i = 0; i < batch; ++i) {
                float best = q_next[i * cardinality_];
                for (std::size_t a = 1; a < cardinality_; ++a)
                    best = std::max(best, q_next[i * cardinality_ + a]);
                targets[i] = replay_[picks[i]].reward +
                             static_cast<float>(cfg_.discount) * best;
            }
        }

        std::vector<float> input;
        input.reserve(batch * dim);
        std::vector<std::size_t> actions(batch);
        for (std::size_t i = 0; i < batch; ++i) {
            input.insert(input.end(), replay_[picks[i]].obs.begin(), replay_[picks[i]].obs.end());
            actions[i] = replay_[picks[i]].action;
        }
        const auto& out = net_.forward_batch(input, batch, true);
        const auto seed = masked_mse_gradient<float>(out, net_.output_dim(), actions, targets);
        const auto grad = net_.backward_batch(seed);
        net_.adam_step(grad, cfg_.learning_rate, -cfg_.gradient_clip, cfg_.gradient_clip);

        ++train_steps_;
        if (train_steps_ % cfg_.target_update_interval == 0) soft_update_target();
    }

    AgentObservation required_observation_mode() const override { return obs_mode_; }
    Network<float>& network() { return net_; }
    Network<float>& target_network() { return target_net_; }
    std::size_t replay_size() const { return replay_.size(); }

    void soft_update_target() {
        const float tau = static_cast<float>(cfg_.target_temperature);
        auto& tw = target_net_.parameters();
        const auto& w = net_.parameters();
        for (std::size_t i = 0; i < tw.size(); ++i)
            tw[i] = (1.0f - tau) * tw[i] + tau * w[i];
    }

  private:
    struct Experience {
        std::vector<float> obs;
        std::size_t action = 0;
        float reward = 0.0f;
        std::vector<float> next_obs;
    };

    DqnConfig cfg_;
    AgentObservation obs_mode_;
    std::uint64_t cardinality_;
    Network<float> net_;
    Network<float> target_net_;
    Rng sample_rng_;
    std::vector<Experience> replay_;
    std::size_t replay_head_ = 0;
    std::uint64_t train_steps_ = 0;
    std::uint64_t tick_count_ = 0;
    std::uint64_t explore_acts_ = 0;
};

}  // namespace risorch
