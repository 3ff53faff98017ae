#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "risorch/channel.hpp"
#include "risorch/geometry.hpp"
#include "risorch/rng.hpp"

using namespace risorch;

TEST_CASE("pathloss attenuation basics") {
    const double lambda = 0.06;
    CHECK(pathloss_attenuation(lambda / (4.0 * M_PI), lambda) == doctest::Approx(1.0));
    const double a1 = pathloss_attenuation(3.0, lambda);
    const double a2 = pathloss_attenuation(6.0, lambda);
    CHECK(a2 == doctest::Approx(a1 / 4.0));
    CHECK(a1 > a2);
    CHECK_THROWS_AS(pathloss_attenuation(0.0, lambda), std::domain_error);
    CHECK_THROWS_AS(pathloss_attenuation(1.0, -1.0), std::domain_error);
}

TEST_CASE("pathloss matches independent dB evaluation") {
    const double lambda = 299792458.0 / 5e9;  // 0.059958 m
    const double d = 10.0;
    const double db = 20.0 * std::log10(4.0 * M_PI * d / lambda);
    CHECK(db == doctest::Approx(66.43).epsilon(1e-3));
    const double linear = std::pow(10.0, -db / 10.0);
    CHECK(linear == doctest::Approx(2.274e-7).epsilon(1e-3));
    CHECK(pathloss_attenuation(d, lambda) == doctest::Approx(linear).epsilon(1e-12));
    // dB form and linear form agree for a spread of distances
    for (double dd : {0.5, 1.930, 8.545, 25.0}) {
        const double back = 10.0 * std::log10(1.0 / pathloss_attenuation(dd, lambda));
        CHECK(back == doctest::Approx(pathloss_db(dd, lambda)).epsilon(1e-12));
    }
}

TEST_CASE("steering vector broadside and normalization") {
    AnglePair broadside{0.0, M_PI / 2.0};
    const CVec v = steering_vector(broadside, 3, 2, 0.5);
    const double expect = 1.0 / std::sqrt(6.0);
    for (const auto& e : v) {
        CHECK(e.real() == doctest::Approx(expect).epsilon(1e-12));
        CHECK(std::abs(e.imag()) < 1e-12);
    }
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        AnglePair a{rng.uniform(-M_PI, M_PI), rng.uniform(0.0, M_PI)};
        const CVec s = steering_vector(a, 4, 4, 0.5);
        CHECK(norm(s) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("steering vector elementwise on a 2x2 array") {
    const double spacing = 0.5;
    const double theta = M_PI / 3.0;
    const double phi = M_PI / 6.0;
    const CVec v = steering_vector({phi, theta}, 2, 2, spacing);
    const double omega = 2.0 * M_PI * spacing * std::cos(theta);
    const double psi = 2.0 * M_PI * spacing * std::sin(phi) * std::cos(phi);
    // entry (p, q), p = vertical index, q = horizontal index, both 1-based in
    // the phase, stored row-major with vertical-major flattening
    for (std::size_t p = 0; p < 2; ++p) {
        for (std::size_t q = 0; q < 2; ++q) {
            const double phase = omega * double(p + 1) + psi * double(q + 1);
            const std::complex<double> expect =
                0.5 * std::complex<double>{std::cos(phase), std::sin(phase)};
            const std::complex<double> got = v[p * 2 + q];
            CHECK(std::abs(got - expect) < 1e-12);
        }
    }
}

TEST_CASE("steering vector standard azimuth convention") {
    const double theta = 1.1, phi = 0.4, spacing = 0.5;
    const CVec v = steering_vector({phi, theta}, 2, 1, spacing, AzimuthConvention::upa_standard);
    const double psi = 2.0 * M_PI * spacing * std::sin(theta) * std::sin(phi);
    const std::complex<double> ratio = v[1] / v[0];
    CHECK(std::arg(ratio) == doctest::Approx(psi).epsilon(1e-12));
}

TEST_CASE("angles_between frame conventions") {
    ArrayOrientation frame = make_orientation({0.0, 1.0, 0.0}, {0.0, 0.0, 1.0});
    // target on boresight at the same height
    AnglePair a = angles_between({0, 0, 0}, {0, 5, 0}, frame);
    CHECK(a.azimuth == doctest::Approx(0.0));
    CHECK(a.elevation == doctest::Approx(M_PI / 2.0));
    // target directly above
    a = angles_between({0, 0, 0}, {0, 0, 3}, frame);
    CHECK(a.elevation == doctest::Approx(0.0));
    CHECK_THROWS_AS(angles_between({1, 2, 3}, {1, 2, 3}, frame), std::domain_error);
}

TEST_CASE("angles_between matches an explicit rotation-matrix oracle") {
    const Vec3 bs{10.0, 5.0, 2.0};
    const Vec3 ris{7.5, 13.0, 2.0};
    ArrayOrientation frame = make_orientation({0.0, 1.0, 0.0}, {0.0, 0.0, 1.0});
    const AnglePair got = angles_between(bs, ris, frame);
    // rows of R are the local axes: x = boresight (0,1,0), y = up x boresight
    // = (-1,0,0), z = up (0,0,1); local = R * (to - from)
    const double d[3] = {ris[0] - bs[0], ris[1] - bs[1], ris[2] - bs[2]};
    const double lx = 0.0 * d[0] + 1.0 * d[1] + 0.0 * d[2];
    const double ly = -1.0 * d[0] + 0.0 * d[1] + 0.0 * d[2];
    const double lz = 0.0 * d[0] + 0.0 * d[1] + 1.0 * d[2];
    const double r = std::sqrt(lx * lx + ly * ly + lz * lz);
    CHECK(got.azimuth == doctest::Approx(std::atan2(ly, lx)).epsilon(1e-12));
    CHECK(got.elevation == doctest::Approx(std::acos(lz / r)).epsilon(1e-12));
}

TEST_CASE("make_orientation produces an orthonormal frame") {
    ArrayOrientation o = make_orientation({1.0, 2.0, 0.5}, {0.1, 0.0, 1.0});
    CHECK(vnorm(o.boresight) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vnorm(o.up) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(vdot(o.boresight, o.up)) < 1e-12);
    CHECK_THROWS_AS(make_orientation({0, 0, 0}, {0, 0, 1}), std::domain_error);
}

TEST_CASE("squarest_shape is the most-square factorization with n_h >= n_v") {
    CHECK(squarest_shape(16) == std::pair<std::size_t, std::size_t>{4, 4});
    CHECK(squarest_shape(32) == std::pair<std::size_t, std::size_t>{8, 4});
    CHECK(squarest_shape(24) == std::pair<std::size_t, std::size_t>{6, 4});
    CHECK(squarest_shape(7) == std::pair<std::size_t, std::size_t>{7, 1});
    CHECK(squarest_shape(1) == std::pair<std::size_t, std::size_t>{1, 1});
}

namespace {

CMat los_ris_bs(const SceneGeometry& g, std::size_t m) {
    const AnglePair aoa = angles_between(g.ris_positions[m], g.bs_position, g.ris_orientations[m]);
    const AnglePair aod = angles_between(g.bs_position, g.ris_positions[m], g.bs_orientation);
    const CVec f_ris = steering_vector(aoa, g.ris_n_h, g.ris_n_v, g.element_spacing_ris);
    const CVec f_bs = steering_vector(aod, g.bs_antennas, 1, g.element_spacing_bs);
    CMat h(g.elements_per_ris(), g.bs_antennas);
    for (std::size_t i = 0; i < h.rows; ++i)
        for (std::size_t j = 0; j < h.cols; ++j) h(i, j) = std::conj(f_ris[i]) * f_bs[j];
    return h;
}

}  // namespace

TEST_CASE("ris-bs channel Ricean limits") {
    SceneGeometry g = make_default_scene(32);
    RiceanConfig rc;

    SUBCASE("large kappa collapses to the LOS outer product") {
        rc.kappa_ris_bs = 1e14;
        Rng rng(3);
        const CMat h = generate_ris_bs_channel(g, rc, 0, rng);
        const CMat los = los_ris_bs(g, 0);
        for (std::size_t i = 0; i < h.rows; ++i)
            for (std::size_t j = 0; j < h.cols; ++j)
                CHECK(std::abs(h(i, j) - los(i, j)) < 1e-6);
    }

    SUBCASE("kappa zero is unit-variance complex Gaussian") {
        rc.kappa_ris_bs = 0.0;
        Rng rng(5);
        double acc = 0.0;
        std::size_t n = 0;
        for (int rep = 0; rep < 1600; ++rep) {
            const CMat h = generate_ris_bs_channel(g, rc, 0, rng);
            for (std::size_t i = 0; i < h.data.size(); ++i) acc += std::norm(h.data[i]);
            n += h.data.size();
        }
        CHECK(n >= 100000);
        CHECK(acc / double(n) == doctest::Approx(1.0).epsilon(0.01));
    }

    SUBCASE("kappa 1000 NLOS residual second moment") {
        rc.kappa_ris_bs = 1000.0;
        Rng rng(11);
        const CMat los = los_ris_bs(g, 0);
        const double n_entries = double(g.elements_per_ris() * g.bs_antennas);
        double acc = 0.0;
        const int reps = 10000;
        for (int rep = 0; rep < reps; ++rep) {
            const CMat h = generate_ris_bs_channel(g, rc, 0, rng);
            const double los_w = std::sqrt(1000.0 / 1001.0);
            for (std::size_t i = 0; i < h.data.size(); ++i)
                acc += std::norm(h.data[i] - los_w * los.data[i]);
        }
        // residual is the NLOS part only: expected squared Frobenius norm
        // N * N_T / (kappa + 1)
        CHECK(acc / reps == doctest::Approx(n_entries / 1001.0).epsilon(0.03));
    }
}

TEST_CASE("ue-ris channel Ricean limits") {
    SceneGeometry g = make_default_scene(32);
    RiceanConfig rc;
    const AnglePair aod =
        angles_between(g.ris_positions[0], g.ue_positions[1], g.ris_orientations[0]);
    const CVec los = steering_vector(aod, g.ris_n_h, g.ris_n_v, g.element_spacing_ris);

    SUBCASE("large kappa collapses to the steering vector") {
        rc.kappa_ue_ris = 1e14;
        Rng rng(3);
        const CVec v = generate_ue_ris_channel(g, rc, 0, 1, rng);
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(v[i] - los[i]) < 1e-6);
    }

    SUBCASE("kappa 1000 NLOS residual second moment") {
        rc.kappa_ue_ris = 1000.0;
        Rng rng(17);
        double acc = 0.0;
        const int reps = 10000;
        const double los_w = std::sqrt(1000.0 / 1001.0);
        for (int rep = 0; rep < reps; ++rep) {
            const CVec v = generate_ue_ris_channel(g, rc, 0, 1, rng);
            for (std::size_t i = 0; i < v.size(); ++i) acc += std::norm(v[i] - los_w * los[i]);
        }
        CHECK(acc / reps == doctest::Approx(double(los.size()) / 1001.0).epsilon(0.03));
    }
}

TEST_CASE("direct channel variance scaling") {
    Rng rng(23);
    SUBCASE("nu zero is exactly zero") {
        const CVec v = generate_direct_channel(0.0, 4, rng);
        for (const auto& e : v) CHECK(e == std::complex<double>{0.0, 0.0});
    }
    SUBCASE("per-entry variance matches nu") {
        for (double nu : {1.0, 0.25}) {
            double acc = 0.0;
            const int reps = 25000;
            for (int rep = 0; rep < reps; ++rep) {
                const CVec v = generate_direct_channel(nu, 4, rng);
                for (const auto& e : v) acc += std::norm(e);
            }
            CHECK(acc / double(reps * 4) == doctest::Approx(nu).epsilon(0.02));
        }
    }
    CHECK_THROWS_AS(generate_direct_channel(1.5, 4, rng), std::invalid_argument);
}

TEST_CASE("draw_channel_set dimensions, distances, determinism") {
    SceneGeometry g = make_default_scene(32);
    RiceanConfig rc;
    Rng rng(42);
    const ChannelSet cs = draw_channel_set(g, rc, rng);

    CHECK(cs.ris_bs.size() == 2);
    for (const auto& h : cs.ris_bs) {
        CHECK(h.rows == 16);
        CHECK(h.cols == 4);
    }
    CHECK(cs.ue_ris.size() == 2);
    for (const auto& per_ris : cs.ue_ris) {
        CHECK(per_ris.size() == 2);
        for (const auto& v : per_ris) CHECK(v.size() == 16);
    }
    CHECK(cs.direct.size() == 2);
    for (const auto& v : cs.direct) CHECK(v.size() == 4);

    // UE1-RIS1 distance against a standalone Euclidean computation
    const double dx = 8.775 - 7.5, dy = 14.394 - 13.0, dz = 1.634 - 2.0;
    const double d11 = std::sqrt(dx * dx + dy * dy + dz * dz);
    CHECK(d11 == doctest::Approx(1.93).epsilon(0.01));
    CHECK(cs.pathloss_ue_ris[0][0] ==
          doctest::Approx(pathloss_attenuation(d11, g.wavelength())).epsilon(1e-12));
    CHECK(cs.pathloss_ris_bs[0] ==
          doctest::Approx(pathloss_attenuation(distance(g.ris_positions[0], g.bs_position),
                                               g.wavelength()))
              .epsilon(1e-12));

    // same seed reproduces bitwise, different seed differs
    Rng rng2(42);
    const ChannelSet cs2 = draw_channel_set(g, rc, rng2);
    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t i = 0; i < cs.ris_bs[m].data.size(); ++i)
            CHECK(cs.ris_bs[m].data[i] == cs2.ris_bs[m].data[i]);
    Rng rng3(43);
    const ChannelSet cs3 = draw_channel_set(g, rc, rng3);
    bool any_diff = false;
    for (std::size_t i = 0; i < cs.ris_bs[0].data.size(); ++i)
        if (cs.ris_bs[0].data[i] != cs3.ris_bs[0].data[i]) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("channel draws from different seeds are uncorrelated") {
    SceneGeometry g = make_default_scene(32);
    RiceanConfig rc;
    rc.kappa_ris_bs = 0.0;  // pure NLOS so the correlation test sees only noise
    Rng a(1), b(2);
    double sum_ab = 0.0, sum_aa = 0.0, sum_bb = 0.0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        const CMat ha = generate_ris_bs_channel(g, rc, 0, a);
        const CMat hb = generate_ris_bs_channel(g, rc, 0, b);
        for (std::size_t i = 0; i < ha.data.size(); ++i) {
            sum_ab += (ha.data[i] * std::conj(hb.data[i])).real();
            sum_aa += std::norm(ha.data[i]);
            sum_bb += std::norm(hb.data[i]);
        }
    }
    CHECK(std::abs(sum_ab) / std::sqrt(sum_aa * sum_bb) < 0.05);
}

TEST_CASE("mobility stepping") {
    UeMobilityState s;
    s.position = {1.0, 2.0, 1.6};
    s.heading = M_PI / 4.0;
    s.speed = 1.4;

    SUBCASE("one coherence step displaces speed * dt") {
        const UeMobilityState n = advance_mobility(s, 0.006);
        const double step = 1.4 * 0.006;
        CHECK(step == doctest::Approx(0.0084));
        CHECK(n.leg_displacement == doctest::Approx(0.0084).epsilon(1e-12));
        const double moved = std::sqrt(std::pow(n.position[0] - s.position[0], 2) +
                                       std::pow(n.position[1] - s.position[1], 2));
        CHECK(moved == doctest::Approx(step).epsilon(1e-9));
        CHECK(n.position[2] == s.position[2]);
    }

    SUBCASE("zero speed leaves the position unchanged") {
        UeMobilityState still = s;
        still.speed = 0.0;
        const UeMobilityState n = advance_mobility(still, 0.006);
        CHECK(n.position == s.position);
        CHECK(n.leg_displacement == s.leg_displacement);
    }

    SUBCASE("turnaround reverses heading and carries the excess") {
        UeMobilityState near_turn = s;
        near_turn.leg_displacement = 1.999;
        const UeMobilityState n = advance_mobility(near_turn, 0.006);
        CHECK(n.leg_displacement == doctest::Approx(0.0074).epsilon(1e-9));
        const double flipped = std::remainder(n.heading - s.heading, 2.0 * M_PI);
        CHECK(std::abs(std::abs(flipped) - M_PI) < 1e-12);
    }

    SUBCASE("path length accumulates exactly and legs stay bounded") {
        UeMobilityState cur = s;
        const Vec3 start = cur.position;
        const double step = cur.speed * 0.006;
        Vec3 prev = cur.position;
        double prev_heading = cur.heading;
        for (int t = 0; t < 5000; ++t) {
            cur = advance_mobility(cur, 0.006);
            const double chord = std::sqrt(std::pow(cur.position[0] - prev[0], 2) +
                                           std::pow(cur.position[1] - prev[1], 2));
            if (cur.heading == prev_heading) {
                // no turn: the chord is the full path length of the step
                CHECK(chord == doctest::Approx(step).epsilon(1e-9));
            } else {
                // turn inside the step: forward then back, chord can only shrink
                CHECK(chord <= step + 1e-12);
                prev_heading = cur.heading;
            }
            // the walk starts a fresh leg at the initial position, so every
            // later position lies on that leg's 2 m segment
            CHECK(distance(cur.position, start) < 2.0 + 1e-9);
            CHECK(cur.leg_displacement <= cur.turnaround + 1e-12);
            prev = cur.position;
        }
    }
}
