#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace risorch {

using Vec3 = std::array<double, 3>;

inline Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }

inline double vdot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline Vec3 vcross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double vnorm(const Vec3& a) { return std::sqrt(vdot(a, a)); }
inline Vec3 vnormalize(const Vec3& a) {
    const double n = vnorm(a);
    if (n <= 0.0) throw std::domain_error("cannot normalize zero vector");
    return (1.0 / n) * a;
}
inline double distance(const Vec3& a, const Vec3& b) { return vnorm(a - b); }

// Azimuth/elevation pair. Azimuth in (-pi, pi] measured in the array's local
// x-y plane from boresight; elevation in [0, pi] is the polar angle from the
// local up axis.
struct AnglePair {
    double azimuth = 0.0;
    double elevation = 0.0;
};

// Local frame of an antenna array: boresight is the local x axis, up the
// local z axis.
struct ArrayOrientation {
    Vec3 boresight{1.0, 0.0, 0.0};
    Vec3 up{0.0, 0.0, 1.0};
};

inline ArrayOrientation make_orientation(const Vec3& boresight, const Vec3& up) {
    ArrayOrientation o;
    o.boresight = vnormalize(boresight);
    // remove any up component along boresight, then normalize
    Vec3 u = up - vdot(up, o.boresight) * o.boresight;
    o.up = vnormalize(u);
    return o;
}

// Free-space pathloss as a linear power attenuation factor (lambda/(4 pi d))^2.
// Strictly decreasing in d; equals 1 at the zero-dB distance d = lambda/(4 pi).
inline double pathloss_attenuation(double d, double wavelength) {
    if (!(d > 0.0) || !(wavelength > 0.0))
        throw std::domain_error("pathloss_attenuation: d and wavelength must be positive");
    const double x = wavelength / (4.0 * M_PI * d);
    return x * x;
}

// The same loss expressed in dB: 20 log10(4 pi d / lambda).
inline double pathloss_db(double d, double wavelength) {
    if (!(d > 0.0) || !(wavelength > 0.0))
        throw std::domain_error("pathloss_db: d and wavelength must be positive");
    return 20.0 * std::log10(4.0 * M_PI * d / wavelength);
}

// Direction from `from` to `to`, expressed in the array's local frame.
inline AnglePair angles_between(const Vec3& from, const Vec3& to, const ArrayOrientation& frame) {
    const Vec3 d = to - from;
    const double r = vnorm(d);
    if (r <= 0.0) throw std::domain_error("angles_between: coincident points");
    const Vec3 xl = frame.boresight;
    const Vec3 zl = frame.up;
    const Vec3 yl = vcross(zl, xl);
    const double dx = vdot(d, xl);
    const double dy = vdot(d, yl);
    const double dz = vdot(d, zl);
    AnglePair a;
    a.azimuth = std::atan2(dy, dx);
    a.elevation = std::acos(std::clamp(dz / r, -1.0, 1.0));
    return a;
}

struct SceneGeometry {
    Vec3 bs_position{};
    std::vector<Vec3> ris_positions;
    std::vector<Vec3> ue_positions;
    double carrier_frequency = 5e9;      // Hz
    double element_spacing_ris = 0.5;    // wavelengths
    double element_spacing_bs = 0.5;     // wavelengths
    std::size_t ris_n_h = 4;             // elements per RIS, horizontal
    std::size_t ris_n_v = 4;             // elements per RIS, vertical
    std::size_t bs_antennas = 4;
    ArrayOrientation bs_orientation;
    std::vector<ArrayOrientation> ris_orientations;

    double wavelength() const { return 299792458.0 / carrier_frequency; }
    std::size_t num_ris() const { return ris_positions.size(); }
    std::size_t num_ue() const { return ue_positions.size(); }
    std::size_t elements_per_ris() const { return ris_n_h * ris_n_v; }

    void validate() const {
        if (carrier_frequency <= 0.0) throw std::invalid_argument("carrier_frequency must be > 0");
        if (element_spacing_ris <= 0.0 || element_spacing_bs <= 0.0)
            throw std::invalid_argument("element spacings must be > 0");
        if (ris_n_h < 1 || ris_n_v < 1) throw std::invalid_argument("RIS shape must be >= 1x1");
        if (bs_antennas < 1) throw std::invalid_argument("bs_antennas must be >= 1");
        if (ris_positions.empty() || ue_positions.empty())
            throw std::invalid_argument("need at least one RIS and one UE");
        if (ris_orientations.size() != ris_positions.size())
            throw std::invalid_argument("one orientation per RIS required");
        auto finite3 = [](const Vec3& v) {
            return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
        };
        if (!finite3(bs_position)) throw std::invalid_argument("bs_position not finite");
        for (const auto& p : ris_positions)
            if (!finite3(p)) throw std::invalid_argument("ris position not finite");
        for (const auto& p : ue_positions)
            if (!finite3(p)) throw std::invalid_argument("ue position not finite");
    }
};

// Most-square factorization of n with n_h >= n_v.
inline std::pair<std::size_t, std::size_t> squarest_shape(std::size_t n) {
    std::size_t best_v = 1;
    for (std::size_t v = 1; v * v <= n; ++v)
        if (n % v == 0) best_v = v;
    return {n / best_v, best_v};
}

inline Vec3 centroid(const std::vector<Vec3>& pts) {
    Vec3 c{0.0, 0.0, 0.0};
    for (const auto& p : pts) c = c + p;
    return (1.0 / static_cast<double>(pts.size())) * c;
}

// Default desk-scale scene: one BS, two RISs near a small UE area. The BS
// boresight points at the RIS-pair centroid and each RIS at the UE-area
// centroid; up is +z everywhere.
inline SceneGeometry make_default_scene(std::size_t n_tot_elements) {
    SceneGeometry g;
    g.bs_position = {10.0, 5.0, 2.0};
    g.ris_positions = {{7.5, 13.0, 2.0}, {12.5, 13.0, 2.0}};
    g.ue_positions = {{8.775, 14.394, 1.634}, {9.648, 13.281, 1.632}};
    g.carrier_frequency = 5e9;
    g.bs_antennas = 4;
    const std::size_t m = g.ris_positions.size();
    if (n_tot_elements % m != 0)
        throw std::invalid_argument("n_tot must be divisible by the number of RISs");
    const auto [nh, nv] = squarest_shape(n_tot_elements / m);
    g.ris_n_h = nh;
    g.ris_n_v = nv;
    const Vec3 up{0.0, 0.0, 1.0};
    g.bs_orientation = make_orientation(centroid(g.ris_positions) - g.bs_position, up);
    const Vec3 ue_c = centroid(g.ue_positions);
    for (const auto& rp : g.ris_positions)
        g.ris_orientations.push_back(make_orientation(ue_c - rp, up));
    g.validate();
    return g;
}

}  // namespace risorch
