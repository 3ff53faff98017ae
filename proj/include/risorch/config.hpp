#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "action_space.hpp"
#include "agents.hpp"
#include "channel.hpp"
#include "environment.hpp"
#include "geometry.hpp"

namespace risorch {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class AgentKind { random, optimal, ucb, neural_eg, dqn };

// Full description of one experiment, loadable from a flat key = value file
// with dotted keys. Unknown keys are hard errors.
struct ExperimentConfig {
    // scene
    Vec3 bs_position{10.0, 5.0, 2.0};
    std::vector<Vec3> ris_positions{{7.5, 13.0, 2.0}, {12.5, 13.0, 2.0}};
    std::vector<Vec3> ue_positions{{8.775, 14.394, 1.634}, {9.648, 13.281, 1.632}};
    double carrier_frequency = 5e9;
    std::size_t n_tot = 32;
    std::size_t n_group = 16;
    unsigned phase_bits = 1;
    std::size_t bs_antennas = 4;
    AzimuthConvention azimuth_convention = AzimuthConvention::paper;

    RiceanConfig ricean;

    // reward
    RewardMode reward_mode = RewardMode::sum_rate;
    std::vector<double> rate_requests{0.4, 0.4};
    double power_dbm = 40.0;
    double noise_dbm = -110.0;
    double sinr_report_noise_db = 0.0;  // hook, currently unused

    // agent
    AgentKind agent_kind = AgentKind::neural_eg;
    double agent_epsilon = -1.0;  // <0: kind default (0.3; dqn anneals to a 0.05 floor)
    std::size_t agent_batch_size = 0;  // 0: kind default (32 neural_eg, 128 dqn)
    double agent_learning_rate = 0.0;  // 0: kind default (0.003 / 0.002)
    std::size_t agent_updates_per_batch = 0;  // 0: kind and codebook-size default
    double ucb_confidence_width = 1.5;
    double dqn_epsilon_start = 1.0;
    std::size_t dqn_epsilon_decay_steps = 500;
    std::size_t dqn_train_interval = 0;  // 0: codebook-size default
    std::size_t dqn_target_update_interval = 100;
    double dqn_target_temperature = 0.18;
    double dqn_gradient_clip = 1000.0;
    std::size_t dqn_replay_capacity = 50000;
    bool dqn_terminal_per_step = true;
    double dqn_discount = 0.99;
    NetworkVariant network_variant = NetworkVariant::conv;

    ObservationMode observation_mode = ObservationMode::full_csi;
    Scenario scenario = Scenario::iid_static;
    double coherence_interval = 6e-3;

    // run protocol
    std::size_t training_steps = 0;  // 0: default 50 * cardinality
    std::size_t eval_steps = 300;
    std::size_t trials = 5;
    std::size_t eval_intervals = 15;  // mobility only
    std::uint64_t base_seed = 1;
    std::string output_path;

    SceneGeometry build_geometry() const {
        SceneGeometry g;
        g.bs_position = bs_position;
        g.ris_positions = ris_positions;
        g.ue_positions = ue_positions;
        g.carrier_frequency = carrier_frequency;
        g.bs_antennas = bs_antennas;
        const std::size_t m = ris_positions.size();
        if (m == 0 || n_tot % m != 0)
            throw ConfigError("n_tot must be divisible by the number of RISs");
        const auto [nh, nv] = squarest_shape(n_tot / m);
        g.ris_n_h = nh;
        g.ris_n_v = nv;
        const Vec3 up{0.0, 0.0, 1.0};
        g.bs_orientation = make_orientation(centroid(g.ris_positions) - g.bs_position, up);
        const Vec3 ue_c = centroid(g.ue_positions);
        g.ris_orientations.clear();
        for (const auto& rp : g.ris_positions)
            g.ris_orientations.push_back(make_orientation(ue_c - rp, up));
        g.validate();
        return g;
    }

    ActionSpace build_action_space() const {
        const SceneGeometry g = build_geometry();
        try {
            return ActionSpace(g.num_ris(), g.elements_per_ris(), g.ris_n_h, g.ris_n_v, n_group,
                               phase_bits, g.bs_antennas, g.num_ue());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }

    RewardSpec build_reward_spec() const {
        RewardSpec spec;
        spec.mode = reward_mode;
        spec.rate_requests = rate_requests;
        spec.power = dbm_to_watts(power_dbm);
        spec.noise_power = dbm_to_watts(noise_dbm);
        return spec;
    }

    std::size_t effective_training_steps(std::uint64_t cardinality) const {
        return training_steps > 0 ? training_steps
                                  : static_cast<std::size_t>(50 * cardinality);
    }

    std::size_t effective_batch_size() const {
        if (agent_batch_size > 0) return agent_batch_size;
        return agent_kind == AgentKind::dqn ? 128 : 32;
    }

    double effective_epsilon() const {
        if (agent_epsilon >= 0.0) return agent_epsilon;
        return agent_kind == AgentKind::dqn ? 0.05 : 0.3;
    }

    double effective_learning_rate() const {
        if (agent_learning_rate > 0.0) return agent_learning_rate;
        return agent_kind == AgentKind::dqn ? 0.002 : 0.003;
    }

    // DQN trains on every k-th step by default with k growing with the
    // codebook, so its optimizer-update budget stays roughly constant
    // instead of scaling with the step budget.
    std::size_t effective_dqn_train_interval(std::uint64_t cardinality) const {
        if (dqn_train_interval > 0) return dqn_train_interval;
        return static_cast<std::size_t>(std::max<std::uint64_t>(1, 5 * cardinality / 8));
    }

    // Default optimizer passes per collected batch shrink as the codebook
    // grows: repeated passes over small exploratory batches overfit large
    // action spaces long before every action has been tried.
    std::size_t effective_updates_per_batch(std::uint64_t cardinality) const {
        if (agent_updates_per_batch > 0) return agent_updates_per_batch;
        if (agent_kind == AgentKind::dqn) return 1;
        const std::uint64_t scaled = 64 / std::max<std::uint64_t>(cardinality, 1);
        return static_cast<std::size_t>(std::clamp<std::uint64_t>(scaled, 2, 4));
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for " + key + ": '" + v + "'");
    }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw ConfigError("bad integer value for " + key + ": '" + v + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("bad boolean value for " + key + ": '" + v + "'");
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    if (out.empty()) throw ConfigError("empty list for " + key);
    return out;
}

inline Vec3 parse_vec3(const std::string& key, const std::string& v) {
    const auto list = parse_double_list(key, v);
    if (list.size() != 3) throw ConfigError(key + " needs exactly 3 components");
    return {list[0], list[1], list[2]};
}

inline std::vector<Vec3> parse_vec3_list(const std::string& key, const std::string& v) {
    std::vector<Vec3> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ';')) out.push_back(parse_vec3(key, trim(item)));
    if (out.empty()) throw ConfigError("empty position list for " + key);
    return out;
}

}  // namespace detail

inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value) {
    using namespace detail;
    if (key == "scene.bs_position") cfg.bs_position = parse_vec3(key, value);
    else if (key == "scene.ris_positions") cfg.ris_positions = parse_vec3_list(key, value);
    else if (key == "scene.ue_positions") cfg.ue_positions = parse_vec3_list(key, value);
    else if (key == "scene.carrier_frequency") cfg.carrier_frequency = parse_double(key, value);
    else if (key == "scene.n_tot") cfg.n_tot = parse_uint(key, value);
    else if (key == "scene.n_group") cfg.n_group = parse_uint(key, value);
    else if (key == "scene.phase_bits") cfg.phase_bits = static_cast<unsigned>(parse_uint(key, value));
    else if (key == "scene.bs_antennas") cfg.bs_antennas = parse_uint(key, value);
    else if (key == "scene.azimuth_convention") {
        if (value == "paper") cfg.azimuth_convention = AzimuthConvention::paper;
        else if (value == "upa_standard") cfg.azimuth_convention = AzimuthConvention::upa_standard;
        else throw ConfigError("unknown azimuth convention '" + value + "'");
    } else if (key == "ricean.kappa_ris_bs") cfg.ricean.kappa_ris_bs = parse_double(key, value);
    else if (key == "ricean.kappa_ue_ris") cfg.ricean.kappa_ue_ris = parse_double(key, value);
    else if (key == "ricean.direct_attenuation")
        cfg.ricean.direct_attenuation = parse_double(key, value);
    else if (key == "reward.mode") {
        if (value == "sum_rate") cfg.reward_mode = RewardMode::sum_rate;
        else if (value == "qos") cfg.reward_mode = RewardMode::qos;
        else throw ConfigError("unknown reward mode '" + value + "'");
    } else if (key == "reward.rate_requests") cfg.rate_requests = parse_double_list(key, value);
    else if (key == "reward.power_dbm") cfg.power_dbm = parse_double(key, value);
    else if (key == "reward.noise_dbm") cfg.noise_dbm = parse_double(key, value);
    else if (key == "reward.sinr_report_noise_db")
        cfg.sinr_report_noise_db = parse_double(key, value);
    else if (key == "agent.kind") {
        if (value == "random") cfg.agent_kind = AgentKind::random;
        else if (value == "optimal") cfg.agent_kind = AgentKind::optimal;
        else if (value == "ucb") cfg.agent_kind = AgentKind::ucb;
        else if (value == "neural_eg") cfg.agent_kind = AgentKind::neural_eg;
        else if (value == "dqn") cfg.agent_kind = AgentKind::dqn;
        else throw ConfigError("unknown agent kind '" + value + "'");
    } else if (key == "agent.epsilon") cfg.agent_epsilon = parse_double(key, value);
    else if (key == "agent.batch_size") cfg.agent_batch_size = parse_uint(key, value);
    else if (key == "agent.learning_rate") cfg.agent_learning_rate = parse_double(key, value);
    else if (key == "agent.updates_per_batch")
        cfg.agent_updates_per_batch = parse_uint(key, value);
    else if (key == "agent.confidence_width") cfg.ucb_confidence_width = parse_double(key, value);
    else if (key == "agent.epsilon_start") cfg.dqn_epsilon_start = parse_double(key, value);
    else if (key == "agent.epsilon_decay_steps")
        cfg.dqn_epsilon_decay_steps = parse_uint(key, value);
    else if (key == "agent.train_interval") cfg.dqn_train_interval = parse_uint(key, value);
    else if (key == "agent.target_update_interval")
        cfg.dqn_target_update_interval = parse_uint(key, value);
    else if (key == "agent.target_temperature")
        cfg.dqn_target_temperature = parse_double(key, value);
    else if (key == "agent.gradient_clip") cfg.dqn_gradient_clip = parse_double(key, value);
    else if (key == "agent.replay_capacity") cfg.dqn_replay_capacity = parse_uint(key, value);
    else if (key == "agent.terminal_per_step")
        cfg.dqn_terminal_per_step = parse_bool(key, value);
    else if (key == "agent.discount") cfg.dqn_discount = parse_double(key, value);
    else if (key == "agent.variant") {
        if (value == "conv") cfg.network_variant = NetworkVariant::conv;
        else if (value == "dense_only") cfg.network_variant = NetworkVariant::dense_only;
        else throw ConfigError("unknown network variant '" + value + "'");
    } else if (key == "observation.mode") {
        if (value == "full_csi") cfg.observation_mode = ObservationMode::full_csi;
        else if (value == "partial_aod") cfg.observation_mode = ObservationMode::partial_aod;
        else if (value == "none") cfg.observation_mode = ObservationMode::none;
        else throw ConfigError("unknown observation mode '" + value + "'");
    } else if (key == "scenario") {
        if (value == "iid_static") cfg.scenario = Scenario::iid_static;
        else if (value == "mobility") cfg.scenario = Scenario::mobility;
        else throw ConfigError("unknown scenario '" + value + "'");
    } else if (key == "scenario.coherence_interval")
        cfg.coherence_interval = parse_double(key, value);
    else if (key == "run.training_steps") cfg.training_steps = parse_uint(key, value);
    else if (key == "run.eval_steps") cfg.eval_steps = parse_uint(key, value);
    else if (key == "run.trials") cfg.trials = parse_uint(key, value);
    else if (key == "run.eval_intervals") cfg.eval_intervals = parse_uint(key, value);
    else if (key == "run.base_seed") cfg.base_seed = parse_uint(key, value);
    else if (key == "run.output_path") cfg.output_path = value;
    else throw ConfigError("unknown config key '" + key + "'");
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::stringstream ss(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        apply_config_entry(cfg, key, value);
    }
    return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

inline const char* agent_kind_name(AgentKind k) {
    switch (k) {
        case AgentKind::random: return "random";
        case AgentKind::optimal: return "optimal";
        case AgentKind::ucb: return "ucb";
        case AgentKind::neural_eg: return "neural_eg";
        case AgentKind::dqn: return "dqn";
    }
    return "?";
}

// FNV-1a over a canonical serialization of every field, used to stamp result
// rows with the configuration they came from.
inline std::uint64_t config_fingerprint(const ExperimentConfig& c) {
    std::ostringstream os;
    os.precision(17);
    auto v3 = [&os](const Vec3& v) { os << v[0] << ',' << v[1] << ',' << v[2] << ';'; };
    v3(c.bs_position);
    for (const auto& p : c.ris_positions) v3(p);
    for (const auto& p : c.ue_positions) v3(p);
    os << c.carrier_frequency << '|' << c.n_tot << '|' << c.n_group << '|' << c.phase_bits << '|'
       << c.bs_antennas << '|' << static_cast<int>(c.azimuth_convention) << '|'
       << c.ricean.kappa_ris_bs << '|' << c.ricean.kappa_ue_ris << '|'
       << c.ricean.direct_attenuation << '|' << static_cast<int>(c.reward_mode) << '|';
    for (double r : c.rate_requests) os << r << ',';
    os << '|' << c.power_dbm << '|' << c.noise_dbm << '|' << c.sinr_report_noise_db << '|'
       << agent_kind_name(c.agent_kind) << '|' << c.agent_epsilon << '|' << c.agent_batch_size
       << '|' << c.agent_learning_rate << '|' << c.agent_updates_per_batch << '|'
       << c.ucb_confidence_width << '|' << c.dqn_epsilon_start << '|'
       << c.dqn_epsilon_decay_steps << '|' << c.dqn_train_interval << '|'
       << c.dqn_target_update_interval << '|' << c.dqn_target_temperature << '|'
       << c.dqn_gradient_clip << '|' << c.dqn_replay_capacity << '|' << c.dqn_terminal_per_step
       << '|' << c.dqn_discount << '|' << static_cast<int>(c.network_variant) << '|'
       << static_cast<int>(c.observation_mode) << '|' << static_cast<int>(c.scenario) << '|'
       << c.coherence_interval << '|' << c.training_steps << '|' << c.eval_steps << '|'
       << c.trials << '|' << c.eval_intervals << '|' << c.base_seed;
    const std::string s = os.str();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace risorch
