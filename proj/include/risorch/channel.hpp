#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "geometry.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace risorch {

// Eq.-faithful azimuth phase (sin(phi)cos(phi)) versus the standard UPA form
// (sin(theta)sin(phi)). The faithful form is the default.
enum class AzimuthConvention { paper, upa_standard };

struct RiceanConfig {
    double kappa_ris_bs = 1000.0;   // linear power ratio (30 dB)
    double kappa_ue_ris = 1000.0;   // linear power ratio (30 dB)
    double direct_attenuation = 0.0;  // nu in [0, 1]; 0 blocks all direct links

    void validate() const {
        if (kappa_ris_bs < 0.0 || kappa_ue_ris < 0.0)
            throw std::invalid_argument("Ricean factors must be >= 0");
        if (direct_attenuation < 0.0 || direct_attenuation > 1.0)
            throw std::invalid_argument("direct_attenuation must be in [0, 1]");
    }
};

// One coherence-interval realization of every link plus geometry metadata.
struct ChannelSet {
    std::vector<CMat> ris_bs;                  // M matrices, N x N_T
    std::vector<std::vector<CVec>> ue_ris;     // [m][k], row vectors length N
    std::vector<CVec> direct;                  // [k], row vectors length N_T
    std::vector<double> pathloss_direct;       // [k], linear
    std::vector<double> pathloss_ris_bs;       // [m], linear
    std::vector<std::vector<double>> pathloss_ue_ris;  // [m][k], linear
    std::vector<std::vector<AnglePair>> aods_ris_ue;   // [m][k]
};

// Normalized steering vector f_el(theta) (x) f_az(phi) for an n_h x n_v
// rectangular array; entries e^{j p omega}/sqrt(n_v) and e^{j q psi}/sqrt(n_h)
// with p = 1..n_v, q = 1..n_h. Unit Euclidean norm by construction.
inline CVec steering_vector(const AnglePair& angles, std::size_t n_h, std::size_t n_v,
                            double spacing,
                            AzimuthConvention convention = AzimuthConvention::paper) {
    if (n_h < 1 || n_v < 1) throw std::invalid_argument("steering_vector: shape must be >= 1x1");
    const double omega = 2.0 * M_PI * spacing * std::cos(angles.elevation);
    double psi;
    if (convention == AzimuthConvention::paper)
        psi = 2.0 * M_PI * spacing * std::sin(angles.azimuth) * std::cos(angles.azimuth);
    else
        psi = 2.0 * M_PI * spacing * std::sin(angles.elevation) * std::sin(angles.azimuth);
    CVec out(n_h * n_v);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_h * n_v));
    for (std::size_t p = 0; p < n_v; ++p) {
        for (std::size_t q = 0; q < n_h; ++q) {
            const double phase = omega * static_cast<double>(p + 1) + psi * static_cast<double>(q + 1);
            out[p * n_h + q] = scale * cxd{std::cos(phase), std::sin(phase)};
        }
    }
    return out;
}

// Ricean RIS_m-BS channel, Hm = sqrt(k1/(k1+1)) f_RIS^H f_BS + sqrt(1/(k1+1)) D,
// D with i.i.d. CN(0,1) entries.
inline CMat generate_ris_bs_channel(const SceneGeometry& geom, const RiceanConfig& ricean,
                                    std::size_t m, Rng& rng,
                                    AzimuthConvention convention = AzimuthConvention::paper) {
    if (m >= geom.num_ris()) throw std::invalid_argument("RIS index out of range");
    const std::size_t n = geom.elements_per_ris();
    const std::size_t nt = geom.bs_antennas;
    const AnglePair aoa_ris = angles_between(geom.ris_positions[m], geom.bs_position,
                                             geom.ris_orientations[m]);
    const AnglePair aod_bs = angles_between(geom.bs_position, geom.ris_positions[m],
                                            geom.bs_orientation);
    const CVec f_ris = steering_vector(aoa_ris, geom.ris_n_h, geom.ris_n_v,
                                       geom.element_spacing_ris, convention);
    const CVec f_bs = steering_vector(aod_bs, nt, 1, geom.element_spacing_bs, convention);
    const double k1 = ricean.kappa_ris_bs;
    const double los_w = std::sqrt(k1 / (k1 + 1.0));
    const double nlos_w = std::sqrt(1.0 / (k1 + 1.0));
    CMat h(n, nt);
    for (std::size_t i = 0; i < n; ++i) {
        const cxd fi = std::conj(f_ris[i]);
        for (std::size_t j = 0; j < nt; ++j)
            h(i, j) = los_w * fi * f_bs[j] + nlos_w * rng.cgaussian();
    }
    return h;
}

// Ricean UE_k-RIS_m channel row vector, modeled like Hm with kappa2 and the
// RIS-side departure steering vector.
inline CVec generate_ue_ris_channel(const SceneGeometry& geom, const RiceanConfig& ricean,
                                    std::size_t m, std::size_t k, Rng& rng,
                                    AzimuthConvention convention = AzimuthConvention::paper) {
    if (m >= geom.num_ris() || k >= geom.num_ue())
        throw std::invalid_argument("RIS or UE index out of range");
    const AnglePair aod = angles_between(geom.ris_positions[m], geom.ue_positions[k],
                                         geom.ris_orientations[m]);
    const CVec f_ris = steering_vector(aod, geom.ris_n_h, geom.ris_n_v,
                                       geom.element_spacing_ris, convention);
    const double k2 = ricean.kappa_ue_ris;
    const double los_w = std::sqrt(k2 / (k2 + 1.0));
    const double nlos_w = std::sqrt(1.0 / (k2 + 1.0));
    CVec g(f_ris.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = los_w * f_ris[i] + nlos_w * rng.cgaussian();
    return g;
}

// Rayleigh direct UE-BS channel: entries i.i.d. CN(0, nu).
inline CVec generate_direct_channel(double nu, std::size_t n_t, Rng& rng) {
    if (nu < 0.0 || nu > 1.0) throw std::invalid_argument("nu must be in [0, 1]");
    CVec h(n_t, cxd{0.0, 0.0});
    if (nu == 0.0) return h;
    const double s = std::sqrt(nu);
    for (auto& x : h) x = s * rng.cgaussian();
    return h;
}

// Draws one full coherence-interval realization.
inline ChannelSet draw_channel_set(const SceneGeometry& geom, const RiceanConfig& ricean,
                                   Rng& rng,
                                   AzimuthConvention convention = AzimuthConvention::paper) {
    geom.validate();
    ricean.validate();
    const std::size_t m_cnt = geom.num_ris();
    const std::size_t k_cnt = geom.num_ue();
    const double lambda = geom.wavelength();
    ChannelSet cs;
    cs.ris_bs.reserve(m_cnt);
    cs.ue_ris.assign(m_cnt, {});
    cs.pathloss_ris_bs.resize(m_cnt);
    cs.pathloss_ue_ris.assign(m_cnt, std::vector<double>(k_cnt));
    cs.aods_ris_ue.assign(m_cnt, std::vector<AnglePair>(k_cnt));
    for (std::size_t m = 0; m < m_cnt; ++m) {
        cs.ris_bs.push_back(generate_ris_bs_channel(geom, ricean, m, rng, convention));
        cs.pathloss_ris_bs[m] =
            pathloss_attenuation(distance(geom.ris_positions[m], geom.bs_position), lambda);
        cs.ue_ris[m].reserve(k_cnt);
        for (std::size_t k = 0; k < k_cnt; ++k) {
            cs.ue_ris[m].push_back(generate_ue_ris_channel(geom, ricean, m, k, rng, convention));
            cs.pathloss_ue_ris[m][k] =
                pathloss_attenuation(distance(geom.ue_positions[k], geom.ris_positions[m]), lambda);
            cs.aods_ris_ue[m][k] = angles_between(geom.ris_positions[m], geom.ue_positions[k],
                                                  geom.ris_orientations[m]);
        }
    }
    cs.direct.reserve(k_cnt);
    cs.pathloss_direct.resize(k_cnt);
    for (std::size_t k = 0; k < k_cnt; ++k) {
        cs.direct.push_back(generate_direct_channel(ricean.direct_attenuation, geom.bs_antennas, rng));
        cs.pathloss_direct[k] =
            pathloss_attenuation(distance(geom.ue_positions[k], geom.bs_position), lambda);
    }
    return cs;
}

// Walking UE on straight legs: reverses heading after `turnaround` meters of
// displacement, carrying any excess into the new leg.
struct UeMobilityState {
    Vec3 position{};
    double heading = 0.0;        // radians in the x-y plane
    double speed = 1.4;          // m/s
    double leg_displacement = 0.0;
    double turnaround = 2.0;     // meters
};

inline UeMobilityState advance_mobility(UeMobilityState state, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("advance_mobility: dt must be > 0");
    double remaining = state.speed * dt;
    while (state.leg_displacement + remaining > state.turnaround) {
        const double step = state.turnaround - state.leg_displacement;
        state.position[0] += step * std::cos(state.heading);
        state.position[1] += step * std::sin(state.heading);
        remaining -= step;
        state.heading += M_PI;
        if (state.heading > M_PI) state.heading -= 2.0 * M_PI;
        state.leg_displacement = 0.0;
    }
    state.position[0] += remaining * std::cos(state.heading);
    state.position[1] += remaining * std::sin(state.heading);
    state.leg_displacement += remaining;
    return state;
}

}  // namespace risorch
