#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "action_space.hpp"
#include "channel.hpp"
#include "geometry.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace risorch {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

enum class RewardMode { sum_rate, qos };

struct RewardSpec {
    RewardMode mode = RewardMode::sum_rate;
    std::vector<double> rate_requests;  // per-UE bps/Hz, qos mode only
    double power = dbm_to_watts(40.0);        // Watts
    double noise_power = dbm_to_watts(-110.0);  // Watts

    void validate(std::size_t num_ue) const {
        if (!(power > 0.0) || !(noise_power > 0.0))
            throw std::invalid_argument("power and noise_power must be > 0");
        if (mode == RewardMode::qos) {
            if (rate_requests.size() != num_ue)
                throw std::invalid_argument("qos mode needs one rate request per UE");
            for (double r : rate_requests)
                if (r < 0.0) throw std::invalid_argument("rate requests must be >= 0");
        }
    }
};

enum class ObservationMode { full_csi, partial_aod, none };

struct Observation {
    ObservationMode mode = ObservationMode::none;
    std::vector<double> data;
};

inline std::size_t observation_dimension(ObservationMode mode, std::size_t n_tot,
                                         std::size_t num_ris, std::size_t num_ue,
                                         std::size_t bs_antennas) {
    switch (mode) {
        case ObservationMode::full_csi:
            return 2 * (n_tot * (num_ue + bs_antennas) + num_ue * bs_antennas);
        case ObservationMode::partial_aod:
            return 2 * num_ris * num_ue;
        case ObservationMode::none:
            return 0;
    }
    throw std::invalid_argument("bad observation mode");
}

// End-to-end channel row vector b_k: the attenuated direct link plus, per RIS,
// the reflected cascade sqrt(L_m L_mk) g_mk Phi_m H_m.
inline CVec cascaded_channel(const ChannelSet& cs, const Action& action, std::size_t k) {
    const std::size_t m_cnt = cs.ris_bs.size();
    const std::size_t nt = cs.direct[k].size();
    CVec b(nt, cxd{0.0, 0.0});
    const double sd = std::sqrt(cs.pathloss_direct[k]);
    for (std::size_t j = 0; j < nt; ++j) b[j] = sd * cs.direct[k][j];
    for (std::size_t m = 0; m < m_cnt; ++m) {
        const double s = std::sqrt(cs.pathloss_ris_bs[m] * cs.pathloss_ue_ris[m][k]);
        const CMat& h = cs.ris_bs[m];
        const CVec& g = cs.ue_ris[m][k];
        const CVec& phi = action.phase_diagonals[m];
        for (std::size_t i = 0; i < h.rows; ++i) {
            const cxd w = s * g[i] * phi[i];
            for (std::size_t j = 0; j < nt; ++j) b[j] += w * h(i, j);
        }
    }
    return b;
}

// SINR_k = |b_k v_k|^2 / (sum_{i != k} |b_k v_i|^2 + K sigma^2 / P).
inline std::vector<double> compute_sinrs(const ChannelSet& cs, const Action& action,
                                         const RewardSpec& spec) {
    const std::size_t k_cnt = cs.direct.size();
    const double noise = static_cast<double>(k_cnt) * spec.noise_power / spec.power;
    std::vector<double> sinrs(k_cnt);
    for (std::size_t k = 0; k < k_cnt; ++k) {
        const CVec b = cascaded_channel(cs, action, k);
        double signal = 0.0, interference = 0.0;
        for (std::size_t i = 0; i < k_cnt; ++i) {
            cxd s{0.0, 0.0};
            for (std::size_t j = 0; j < b.size(); ++j) s += b[j] * action.precoder(j, i);
            (i == k ? signal : interference) += std::norm(s);
        }
        sinrs[k] = signal / (interference + noise);
    }
    return sinrs;
}

inline double reward_sum_rate(const std::vector<double>& sinrs) {
    double r = 0.0;
    for (double s : sinrs) r += std::log2(1.0 + s);
    return r;
}

// If any UE misses its rate request, returns minus the number of misses;
// otherwise the sum rate. A positive value certifies all requests met.
inline double reward_qos(const std::vector<double>& sinrs, const RewardSpec& spec) {
    if (spec.rate_requests.size() != sinrs.size())
        throw std::invalid_argument("reward_qos: request count mismatch");
    std::size_t unmet = 0;
    double sum = 0.0;
    for (std::size_t k = 0; k < sinrs.size(); ++k) {
        const double rate = std::log2(1.0 + sinrs[k]);
        if (rate < spec.rate_requests[k]) ++unmet;
        sum += rate;
    }
    return unmet > 0 ? -static_cast<double>(unmet) : sum;
}

inline double compute_reward(const std::vector<double>& sinrs, const RewardSpec& spec) {
    return spec.mode == RewardMode::qos ? reward_qos(sinrs, spec) : reward_sum_rate(sinrs);
}

// Flattens a ChannelSet into the agent-visible real vector. Full CSI stacks
// [vec of the row-stacked RIS-BS matrix; all UE-RIS rows RIS-major; all direct
// rows], complex entries split as [all real parts; all imaginary parts].
// Partial mode exposes only (azimuth, elevation) per (RIS, UE) pair.
inline Observation observe(const ChannelSet& cs, ObservationMode mode) {
    Observation obs;
    obs.mode = mode;
    if (mode == ObservationMode::none) return obs;
    const std::size_t m_cnt = cs.ris_bs.size();
    const std::size_t k_cnt = cs.direct.size();
    if (mode == ObservationMode::partial_aod) {
        obs.data.reserve(2 * m_cnt * k_cnt);
        for (std::size_t m = 0; m < m_cnt; ++m)
            for (std::size_t k = 0; k < k_cnt; ++k) {
                obs.data.push_back(cs.aods_ris_ue[m][k].azimuth);
                obs.data.push_back(cs.aods_ris_ue[m][k].elevation);
            }
        return obs;
    }
    CVec flat;
    const std::size_t n = cs.ris_bs.empty() ? 0 : cs.ris_bs[0].rows;
    const std::size_t nt = cs.direct.empty() ? 0 : cs.direct[0].size();
    flat.reserve(m_cnt * n * nt + k_cnt * m_cnt * n + k_cnt * nt);
    // column-major vec of the (M*N) x N_T stack of all H_m
    for (std::size_t j = 0; j < nt; ++j)
        for (std::size_t m = 0; m < m_cnt; ++m)
            for (std::size_t i = 0; i < n; ++i) flat.push_back(cs.ris_bs[m](i, j));
    for (std::size_t m = 0; m < m_cnt; ++m)
        for (std::size_t k = 0; k < k_cnt; ++k)
            for (const auto& x : cs.ue_ris[m][k]) flat.push_back(x);
    for (std::size_t k = 0; k < k_cnt; ++k)
        for (const auto& x : cs.direct[k]) flat.push_back(x);
    obs.data.resize(2 * flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        obs.data[i] = flat[i].real();
        obs.data[flat.size() + i] = flat[i].imag();
    }
    return obs;
}

struct StepDiagnostics {
    std::vector<double> sinrs;
    std::vector<double> rates;
};

struct StepResult {
    double reward = 0.0;
    Observation next_observation;
    StepDiagnostics diagnostics;
};

enum class Scenario { iid_static, mobility };

// Fast per-ChannelSet evaluator. Per (UE, control group) it collapses the
// group's reflected contribution into one length-N_T row, then projects all
// rows onto the precoder codebook columns, so one action costs
// O(N_control * card(V)) complex multiplies instead of O(N_tot * N_T).
class CascadedEvaluator {
  public:
    CascadedEvaluator(const ActionSpace& space, const RewardSpec& spec, const ChannelSet& cs)
        : space_(&space), spec_(&spec) {
        const std::size_t m_cnt = space.num_ris();
        const std::size_t k_cnt = space.num_ue();
        const std::size_t nt = space.bs_antennas();
        const std::size_t gpr = space.groups_per_ris();
        const std::size_t n = space.elements_per_ris();
        const std::size_t n_control = space.n_control();
        num_ue_ = k_cnt;
        n_columns_ = nt;
        noise_ = static_cast<double>(k_cnt) * spec.noise_power / spec.power;

        // group rows: sum over the group's elements of sqrt(L_m L_mk) g[i] H_m[i,:]
        std::vector<CVec> rows(k_cnt * n_control, CVec(nt, cxd{0.0, 0.0}));
        for (std::size_t k = 0; k < k_cnt; ++k) {
            for (std::size_t m = 0; m < m_cnt; ++m) {
                const double s = std::sqrt(cs.pathloss_ris_bs[m] * cs.pathloss_ue_ris[m][k]);
                const CMat& h = cs.ris_bs[m];
                const CVec& g = cs.ue_ris[m][k];
                for (std::size_t i = 0; i < n; ++i) {
                    CVec& row = rows[k * n_control + m * gpr + space.group_of_element(i)];
                    const cxd w = s * g[i];
                    for (std::size_t j = 0; j < nt; ++j) row[j] += w * h(i, j);
                }
            }
        }

        // project group rows and the direct link onto every codebook column
        const std::size_t cpu = space.choices_per_ue();
        group_proj_.assign(k_cnt * n_control * nt, cxd{0.0, 0.0});
        direct_proj_.assign(k_cnt * nt, cxd{0.0, 0.0});
        for (std::size_t k = 0; k < k_cnt; ++k) {
            const double sd = std::sqrt(cs.pathloss_direct[k]);
            for (std::size_t ue = 0; ue < k_cnt; ++ue) {
                for (std::size_t c = 0; c < cpu; ++c) {
                    const std::size_t col = ue * cpu + c;
                    const CVec& v = space.precoder_column(ue, c);
                    cxd d{0.0, 0.0};
                    for (std::size_t j = 0; j < nt; ++j) d += sd * cs.direct[k][j] * v[j];
                    direct_proj_[k * nt + col] = d;
                    for (std::size_t gidx = 0; gidx < n_control; ++gidx) {
                        const CVec& row = rows[k * n_control + gidx];
                        cxd p{0.0, 0.0};
                        for (std::size_t j = 0; j < nt; ++j) p += row[j] * v[j];
                        group_proj_[(k * n_control + gidx) * nt + col] = p;
                    }
                }
            }
        }
    }

    // b_k projected onto codebook column `col` under the given group phases
    cxd projection(const std::vector<std::size_t>& group_phases, std::size_t k,
                   std::size_t col) const {
        const std::size_t n_control = space_->n_control();
        const auto& values = space_->phase_set().values;
        cxd s = direct_proj_[k * n_columns_ + col];
        for (std::size_t g = 0; g < n_control; ++g)
            s += values[group_phases[g]] * group_proj_[(k * n_control + g) * n_columns_ + col];
        return s;
    }

    std::vector<double> sinrs_for(const std::vector<std::size_t>& group_phases,
                                  const std::vector<std::size_t>& precoder_choice) const {
        const std::size_t cpu = space_->choices_per_ue();
        std::vector<double> sinrs(num_ue_);
        for (std::size_t k = 0; k < num_ue_; ++k) {
            double signal = 0.0, interference = 0.0;
            for (std::size_t i = 0; i < num_ue_; ++i) {
                const std::size_t col = i * cpu + precoder_choice[i];
                const double p = std::norm(projection(group_phases, k, col));
                (i == k ? signal : interference) += p;
            }
            sinrs[k] = signal / (interference + noise_);
        }
        return sinrs;
    }

    double reward_for(std::uint64_t action_index) const {
        const Action a = space_->decode(action_index);
        return compute_reward(sinrs_for(a.group_phases, a.precoder_choice), *spec_);
    }

    // Exhaustive search over the full action space; ties broken toward the
    // lowest index.
    std::pair<std::uint64_t, double> best_action() const {
        const std::size_t n_control = space_->n_control();
        const std::size_t b = space_->phase_set().values.size();
        const std::size_t k_cnt = num_ue_;
        const std::size_t cpu = space_->choices_per_ue();
        std::vector<std::size_t> phases(n_control, 0);
        std::vector<std::size_t> choice(k_cnt, 0);
        std::uint64_t best_index = 0;
        double best_reward = -std::numeric_limits<double>::infinity();
        std::uint64_t index = 0;
        bool done = false;
        while (!done) {
            // all precoder combinations under the current phase assignment,
            // enumerated in canonical order (UE_1 major)
            std::fill(choice.begin(), choice.end(), 0);
            bool pdone = false;
            while (!pdone) {
                const double r = compute_reward(sinrs_for(phases, choice), *spec_);
                if (r > best_reward) {
                    best_reward = r;
                    best_index = index;
                }
                ++index;
                pdone = true;
                for (std::size_t k = k_cnt; k-- > 0;) {
                    if (++choice[k] < cpu) {
                        pdone = false;
                        break;
                    }
                    choice[k] = 0;
                }
            }
            done = true;
            for (std::size_t g = n_control; g-- > 0;) {
                if (++phases[g] < b) {
                    done = false;
                    break;
                }
                phases[g] = 0;
            }
        }
        return {best_index, best_reward};
    }

  private:
    const ActionSpace* space_;
    const RewardSpec* spec_;
    std::size_t num_ue_ = 0;
    std::size_t n_columns_ = 0;
    double noise_ = 0.0;
    std::vector<cxd> group_proj_;   // [(k * n_control + g) * N_T + col]
    std::vector<cxd> direct_proj_;  // [k * N_T + col]
};

// One simulated downlink system: owns the geometry, RNG stream, current
// channel realization, and (in mobility mode) the UE walking state.
class Environment {
  public:
    Environment(SceneGeometry geom, RiceanConfig ricean, ActionSpace space, RewardSpec spec,
                ObservationMode obs_mode, Scenario scenario, std::uint64_t seed,
                AzimuthConvention convention = AzimuthConvention::paper,
                double coherence_interval = 6e-3)
        : geom_(std::move(geom)),
          ricean_(ricean),
          space_(std::move(space)),
          spec_(spec),
          obs_mode_(obs_mode),
          scenario_(scenario),
          convention_(convention),
          coherence_interval_(coherence_interval),
          rng_(seed) {
        geom_.validate();
        ricean_.validate();
        spec_.validate(geom_.num_ue());
        if (space_.num_ris() != geom_.num_ris() ||
            space_.elements_per_ris() != geom_.elements_per_ris() ||
            space_.bs_antennas() != geom_.bs_antennas || space_.num_ue() != geom_.num_ue())
            throw std::invalid_argument("action space does not match scene geometry");
        if (scenario_ == Scenario::mobility) {
            mobility_.resize(geom_.num_ue());
            for (std::size_t k = 0; k < geom_.num_ue(); ++k) {
                mobility_[k].position = geom_.ue_positions[k];
                mobility_[k].heading = (k % 2 == 0 ? 1.0 : -1.0) * M_PI / 4.0;
            }
        }
        current_ = draw_channel_set(geom_, ricean_, rng_, convention_);
    }

    const ActionSpace& action_space() const { return space_; }
    const RewardSpec& reward_spec() const { return spec_; }
    const SceneGeometry& geometry() const { return geom_; }
    const ChannelSet& current_channels() const { return current_; }
    ObservationMode observation_mode() const { return obs_mode_; }
    Scenario scenario() const { return scenario_; }

    Observation current_observation() const { return observe(current_, obs_mode_); }

    // evaluator over the current realization, for exhaustive baselines
    CascadedEvaluator evaluator() const { return CascadedEvaluator(space_, spec_, current_); }

    StepResult env_step(std::uint64_t action_index) {
        const Action action = space_.decode(action_index);
        StepResult out;
        out.diagnostics.sinrs = compute_sinrs(current_, action, spec_);
        out.diagnostics.rates.reserve(out.diagnostics.sinrs.size());
        for (double s : out.diagnostics.sinrs)
            out.diagnostics.rates.push_back(std::log2(1.0 + s));
        out.reward = compute_reward(out.diagnostics.sinrs, spec_);
        advance();
        out.next_observation = observe(current_, obs_mode_);
        return out;
    }

  private:
    void advance() {
        if (scenario_ == Scenario::mobility) {
            for (std::size_t k = 0; k < mobility_.size(); ++k) {
                mobility_[k] = advance_mobility(mobility_[k], coherence_interval_);
                geom_.ue_positions[k] = mobility_[k].position;
            }
        }
        current_ = draw_channel_set(geom_, ricean_, rng_, convention_);
    }

    SceneGeometry geom_;
    RiceanConfig ricean_;
    ActionSpace space_;
    RewardSpec spec_;
    ObservationMode obs_mode_;
    Scenario scenario_;
    AzimuthConvention convention_;
    double coherence_interval_;
    Rng rng_;
    ChannelSet current_;
    std::vector<UeMobilityState> mobility_;
};

}  // namespace risorch
