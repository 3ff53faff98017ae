#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "risorch/environment.hpp"

using namespace risorch;

TEST_CASE("dbm to watts") {
    CHECK(dbm_to_watts(40.0) == doctest::Approx(10.0));
    CHECK(dbm_to_watts(0.0) == doctest::Approx(1e-3));
    CHECK(dbm_to_watts(-110.0) == doctest::Approx(1e-14));
}

TEST_CASE("phase set values") {
    SUBCASE("one bit is {+1, -1}") {
        const PhaseSet ps = make_phase_set(1);
        REQUIRE(ps.values.size() == 2);
        CHECK(std::abs(ps.values[0] - cxd{1.0, 0.0}) < 1e-15);
        CHECK(std::abs(ps.values[1] - cxd{-1.0, 0.0}) < 1e-15);
    }
    SUBCASE("two bits walk the quarter circle") {
        const PhaseSet ps = make_phase_set(2);
        REQUIRE(ps.values.size() == 4);
        CHECK(std::abs(ps.values[1] - cxd{0.0, 1.0}) < 1e-15);
        CHECK(std::abs(ps.values[3] - cxd{0.0, -1.0}) < 1e-15);
    }
    SUBCASE("all magnitudes are one") {
        for (unsigned b = 1; b <= 8; ++b)
            for (const auto& v : make_phase_set(b).values)
                CHECK(std::abs(v) == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK_THROWS_AS(make_phase_set(0), std::invalid_argument);
    CHECK_THROWS_AS(make_phase_set(9), std::invalid_argument);
}

namespace {

ActionSpace default_space(std::size_t n_tot) {
    const std::size_t per_ris = n_tot / 2;
    const auto [nh, nv] = squarest_shape(per_ris);
    return ActionSpace(2, per_ris, nh, nv, 16, 1, 4, 2);
}

}  // namespace

TEST_CASE("action space cardinality") {
    CHECK(default_space(32).cardinality() == 16);    // 2 control groups
    CHECK(default_space(64).cardinality() == 64);    // 4 control groups
    CHECK(default_space(160).cardinality() == 4096); // 10 control groups
    CHECK(default_space(32).n_control() == 2);
    CHECK(default_space(160).n_control() == 10);
    CHECK(default_space(32).precoder_combinations() == 4);
}

TEST_CASE("action decode canonical endpoints") {
    const ActionSpace space = default_space(64);
    const Action lo = space.decode(0);
    for (std::size_t p : lo.group_phases) CHECK(p == 0);
    for (std::size_t c : lo.precoder_choice) CHECK(c == 0);
    for (const auto& diag : lo.phase_diagonals)
        for (const auto& v : diag) CHECK(std::abs(v - cxd{1.0, 0.0}) < 1e-15);

    const Action hi = space.decode(space.cardinality() - 1);
    for (std::size_t p : hi.group_phases) CHECK(p == space.phase_set().values.size() - 1);
    for (std::size_t c : hi.precoder_choice) CHECK(c == space.choices_per_ue() - 1);

    CHECK_THROWS_AS(space.decode(space.cardinality()), std::domain_error);
}

TEST_CASE("action index round-trip is the identity at cardinality 64") {
    const ActionSpace space = default_space(64);
    for (std::uint64_t i = 0; i < space.cardinality(); ++i) {
        const Action a = space.decode(i);
        CHECK(space.encode(a.group_phases, a.precoder_choice) == i);
    }
}

TEST_CASE("action expansion unitarity") {
    const ActionSpace space = default_space(32);
    for (std::uint64_t i : {std::uint64_t{0}, std::uint64_t{7}, std::uint64_t{15}}) {
        const Action a = space.decode(i);
        for (const auto& diag : a.phase_diagonals)
            for (const auto& v : diag) CHECK(std::abs(v) == doctest::Approx(1.0).epsilon(1e-14));
        for (std::size_t k = 0; k < 2; ++k) {
            double n2 = 0.0;
            for (std::size_t j = 0; j < 4; ++j) n2 += std::norm(a.precoder(j, k));
            CHECK(std::sqrt(n2) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("elements within a control group share one phase") {
    const ActionSpace space = default_space(64);  // 32 per RIS, groups of 16
    Rng rng(5);
    const Action a = space.decode(rng.uniform_int(space.cardinality()));
    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t i = 0; i < 32; ++i) {
            const std::size_t g = space.group_of_element(i);
            // the diagonal entry equals the phase value of the element's group
            CHECK(std::abs(a.phase_diagonals[m][i] -
                           space.phase_set().values[a.group_phases[m * 2 + g]]) < 1e-15);
        }
}

namespace {

// hand-built two-element, two-antenna, single-RIS channel set
ChannelSet toy_channel_set() {
    ChannelSet cs;
    CMat h(2, 2);
    h(0, 0) = {0.3, -0.1};
    h(0, 1) = {-0.2, 0.5};
    h(1, 0) = {0.8, 0.1};
    h(1, 1) = {0.05, -0.6};
    cs.ris_bs.push_back(h);
    cs.ue_ris = {{{{0.9, 0.2}, {-0.4, 0.7}}, {{0.1, -0.3}, {0.6, 0.6}}}};
    cs.direct = {{{0.25, 0.0}, {0.0, -0.5}}, {{-0.15, 0.1}, {0.3, 0.2}}};
    cs.pathloss_direct = {0.5, 0.25};
    cs.pathloss_ris_bs = {0.04};
    cs.pathloss_ue_ris = {{0.09, 0.16}};
    cs.aods_ris_ue = {{{0.1, 1.5}, {-0.2, 1.4}}};
    return cs;
}

Action toy_action(const CVec& phases, const CMat& precoder) {
    Action a;
    a.phase_diagonals = {phases};
    a.precoder = precoder;
    return a;
}

}  // namespace

TEST_CASE("cascaded channel matches a scalar expansion") {
    const ChannelSet cs = toy_channel_set();
    CMat v(2, 2);
    v(0, 0) = {1.0, 0.0};
    v(1, 0) = {0.0, 0.0};
    v(0, 1) = {0.0, 0.0};
    v(1, 1) = {1.0, 0.0};
    const Action a = toy_action({{0.0, 1.0}, {-1.0, 0.0}}, v);

    for (std::size_t k = 0; k < 2; ++k) {
        const CVec b = cascaded_channel(cs, a, k);
        const double s = std::sqrt(cs.pathloss_ris_bs[0] * cs.pathloss_ue_ris[0][k]);
        const double sd = std::sqrt(cs.pathloss_direct[k]);
        for (std::size_t j = 0; j < 2; ++j) {
            cxd expect = sd * cs.direct[k][j];
            for (std::size_t i = 0; i < 2; ++i)
                expect += s * cs.ue_ris[0][k][i] * a.phase_diagonals[0][i] * cs.ris_bs[0](i, j);
            CHECK(std::abs(b[j] - expect) < 1e-14);
        }
    }
}

TEST_CASE("cascaded channel degenerate forms") {
    ChannelSet cs = toy_channel_set();
    CMat v(2, 2);
    v(0, 0) = v(1, 1) = {1.0, 0.0};
    const Action ident = toy_action({{1.0, 0.0}, {1.0, 0.0}}, v);

    SUBCASE("no direct link leaves only the reflected cascade") {
        cs.direct[0] = {cxd{0.0, 0.0}, cxd{0.0, 0.0}};
        const CVec b = cascaded_channel(cs, ident, 0);
        const double s = std::sqrt(cs.pathloss_ris_bs[0] * cs.pathloss_ue_ris[0][0]);
        const CVec gh = rowvec_times_mat(cs.ue_ris[0][0], cs.ris_bs[0]);
        for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(b[j] - s * gh[j]) < 1e-14);
    }

    SUBCASE("zero channels give a zero vector") {
        for (auto& x : cs.direct[0]) x = {0.0, 0.0};
        for (auto& x : cs.ue_ris[0][0]) x = {0.0, 0.0};
        const CVec b = cascaded_channel(cs, ident, 0);
        for (const auto& x : b) CHECK(std::abs(x) == 0.0);
    }
}

TEST_CASE("sinr single-user reduction") {
    ChannelSet cs;
    cs.direct = {{{0.6, 0.0}, {0.0, 0.8}}};
    cs.pathloss_direct = {1.0};
    RewardSpec spec;
    spec.power = 2.0;
    spec.noise_power = 1e-3;
    CMat v(2, 1);
    v(0, 0) = {1.0, 0.0};
    v(1, 0) = {0.0, 0.0};
    Action a;
    a.precoder = v;
    const auto sinrs = compute_sinrs(cs, a, spec);
    REQUIRE(sinrs.size() == 1);
    // K = 1: SINR = |b v|^2 / (sigma^2 / P)
    CHECK(sinrs[0] == doctest::Approx(0.36 / (1e-3 / 2.0)).epsilon(1e-12));
}

TEST_CASE("sinr two-user signal decomposition") {
    ChannelSet cs;
    cs.direct = {{{1.0, 0.0}, {0.5, 0.0}}, {{0.0, 1.0}, {-0.3, 0.2}}};
    cs.pathloss_direct = {1.0, 1.0};
    RewardSpec spec;
    spec.power = 4.0;
    spec.noise_power = 0.02;
    CMat v(2, 2);
    v(0, 0) = {0.6, 0.0};
    v(1, 0) = {0.8, 0.0};
    v(0, 1) = {0.8, 0.0};
    v(1, 1) = {-0.6, 0.0};
    Action a;
    a.precoder = v;
    const auto sinrs = compute_sinrs(cs, a, spec);

    const double noise = 2.0 * spec.noise_power / spec.power;
    for (std::size_t k = 0; k < 2; ++k) {
        const CVec& b = cs.direct[k];
        double terms[2];
        for (std::size_t i = 0; i < 2; ++i)
            terms[i] = std::norm(b[0] * v(0, i) + b[1] * v(1, i));
        const double expect = terms[k] / (terms[1 - k] + noise);
        CHECK(sinrs[k] == doctest::Approx(expect).epsilon(1e-12));
    }

    SUBCASE("zero channel gives zero sinr") {
        cs.direct[0] = {cxd{0.0, 0.0}, cxd{0.0, 0.0}};
        const auto z = compute_sinrs(cs, a, spec);
        CHECK(z[0] == 0.0);
    }

    SUBCASE("removing interference never hurts") {
        for (std::size_t k = 0; k < 2; ++k) {
            const CVec& b = cs.direct[k];
            const double signal = std::norm(b[0] * v(0, k) + b[1] * v(1, k));
            CHECK(sinrs[k] <= signal / noise + 1e-12);
        }
    }
}

TEST_CASE("sum-rate reward") {
    CHECK(reward_sum_rate({1.0, 1.0}) == doctest::Approx(2.0));
    CHECK(reward_sum_rate({0.0, 0.0}) == doctest::Approx(0.0));
    CHECK(reward_sum_rate({3.0, 15.0}) == doctest::Approx(6.0));
}

TEST_CASE("qos reward signs") {
    RewardSpec spec;
    spec.mode = RewardMode::qos;
    spec.rate_requests = {0.4, 0.4};
    auto sinr_for_rate = [](double rate) { return std::pow(2.0, rate) - 1.0; };

    SUBCASE("both unmet") {
        CHECK(reward_qos({sinr_for_rate(0.1), sinr_for_rate(0.2)}, spec) == doctest::Approx(-2.0));
    }
    SUBCASE("one unmet") {
        CHECK(reward_qos({sinr_for_rate(0.5), sinr_for_rate(0.3)}, spec) == doctest::Approx(-1.0));
    }
    SUBCASE("all met returns the sum rate") {
        CHECK(reward_qos({sinr_for_rate(0.5), sinr_for_rate(0.5)}, spec) == doctest::Approx(1.0));
    }
    SUBCASE("positive iff all requests met, magnitude counts misses") {
        Rng rng(9);
        for (int t = 0; t < 200; ++t) {
            std::vector<double> sinrs{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
            const double r = reward_qos(sinrs, spec);
            std::size_t misses = 0;
            for (std::size_t k = 0; k < 2; ++k)
                if (std::log2(1.0 + sinrs[k]) < spec.rate_requests[k]) ++misses;
            if (r > 0.0) CHECK(misses == 0);
            else CHECK(r == doctest::Approx(-double(misses)));
        }
    }
}

TEST_CASE("observation dimensions match the size table") {
    // full-CSI dimension 2 (N_tot (K + N_T) + K N_T) for the five sweep sizes
    const std::size_t expected[] = {400, 784, 1168, 1552, 1936};
    const std::size_t n_tots[] = {32, 64, 96, 128, 160};
    for (int i = 0; i < 5; ++i) {
        CHECK(observation_dimension(ObservationMode::full_csi, n_tots[i], 2, 2, 4) == expected[i]);
    }
    CHECK(observation_dimension(ObservationMode::partial_aod, 32, 2, 2, 4) == 8);
    CHECK(observation_dimension(ObservationMode::none, 32, 2, 2, 4) == 0);
}

TEST_CASE("observation layout") {
    SceneGeometry g = make_default_scene(32);
    RiceanConfig rc;
    Rng rng(77);
    const ChannelSet cs = draw_channel_set(g, rc, rng);

    SUBCASE("full csi stacks channels column-major with split re/im halves") {
        const Observation obs = observe(cs, ObservationMode::full_csi);
        REQUIRE(obs.data.size() == 400);
        std::vector<cxd> flat;
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t m = 0; m < 2; ++m)
                for (std::size_t i = 0; i < 16; ++i) flat.push_back(cs.ris_bs[m](i, j));
        for (std::size_t m = 0; m < 2; ++m)
            for (std::size_t k = 0; k < 2; ++k)
                for (const auto& x : cs.ue_ris[m][k]) flat.push_back(x);
        for (std::size_t k = 0; k < 2; ++k)
            for (const auto& x : cs.direct[k]) flat.push_back(x);
        REQUIRE(flat.size() == 200);
        for (std::size_t i = 0; i < flat.size(); ++i) {
            CHECK(obs.data[i] == flat[i].real());
            CHECK(obs.data[200 + i] == flat[i].imag());
        }
    }

    SUBCASE("partial mode carries the azimuth/elevation pairs ris-major") {
        const Observation obs = observe(cs, ObservationMode::partial_aod);
        REQUIRE(obs.data.size() == 8);
        std::size_t idx = 0;
        for (std::size_t m = 0; m < 2; ++m)
            for (std::size_t k = 0; k < 2; ++k) {
                CHECK(obs.data[idx++] == cs.aods_ris_ue[m][k].azimuth);
                CHECK(obs.data[idx++] == cs.aods_ris_ue[m][k].elevation);
            }
    }

    SUBCASE("none mode is empty") {
        CHECK(observe(cs, ObservationMode::none).data.empty());
    }
}

namespace {

Environment make_env(std::size_t n_tot, std::uint64_t seed,
                     Scenario scenario = Scenario::iid_static,
                     RewardSpec spec = {}) {
    SceneGeometry g = make_default_scene(n_tot);
    return Environment(g, RiceanConfig{}, default_space(n_tot), spec,
                       ObservationMode::full_csi, scenario, seed);
}

}  // namespace

TEST_CASE("env_step reward composition and determinism") {
    Environment env1 = make_env(32, 123);
    Environment env2 = make_env(32, 123);
    Rng act(5);
    for (int t = 0; t < 50; ++t) {
        const std::uint64_t a = act.uniform_int(16);
        // reward must equal the sum-rate of the analytically computed SINRs on
        // the pre-step realization
        const double expect = compute_reward(
            compute_sinrs(env1.current_channels(), env1.action_space().decode(a),
                          env1.reward_spec()),
            env1.reward_spec());
        const StepResult r1 = env1.env_step(a);
        const StepResult r2 = env2.env_step(a);
        // same arithmetic, but a different inline site: allow for floating
        // point contraction differences between the two call paths
        CHECK(r1.reward == doctest::Approx(expect).epsilon(1e-12));
        CHECK(r1.reward == r2.reward);
        REQUIRE(r1.diagnostics.rates.size() == 2);
        for (std::size_t k = 0; k < 2; ++k)
            CHECK(r1.diagnostics.rates[k] ==
                  doctest::Approx(std::log2(1.0 + r1.diagnostics.sinrs[k])));
    }
}

TEST_CASE("evaluator agrees with the direct computation on every action") {
    Environment env = make_env(32, 321);
    for (int step = 0; step < 5; ++step) {
        const CascadedEvaluator ev = env.evaluator();
        for (std::uint64_t a = 0; a < 16; ++a) {
            const double direct = compute_reward(
                compute_sinrs(env.current_channels(), env.action_space().decode(a),
                              env.reward_spec()),
                env.reward_spec());
            CHECK(ev.reward_for(a) == doctest::Approx(direct).epsilon(1e-12));
        }
        env.env_step(0);
    }
}

TEST_CASE("grouping equivalence across group sizes") {
    // with one group per RIS and with one element per group, the grouped
    // evaluator must agree with the ungrouped reference on matched phases
    SceneGeometry g = make_default_scene(8);  // 4 elements per RIS
    RewardSpec spec;
    for (std::size_t group_size : {std::size_t{1}, std::size_t{4}}) {
        ActionSpace space(2, 4, 2, 2, group_size, 1, 4, 2);
        Rng rng(11);
        const ChannelSet cs = draw_channel_set(g, RiceanConfig{}, rng);
        const CascadedEvaluator ev(space, spec, cs);
        for (std::uint64_t a = 0; a < space.cardinality(); ++a) {
            const Action act = space.decode(a);
            const auto ref = compute_sinrs(cs, act, spec);
            const auto got = ev.sinrs_for(act.group_phases, act.precoder_choice);
            for (std::size_t k = 0; k < 2; ++k)
                CHECK(got[k] == doctest::Approx(ref[k]).epsilon(1e-10));
        }
    }
}

TEST_CASE("mobility scenario walks the ues along their legs") {
    Environment env = make_env(32, 55, Scenario::mobility);
    const Vec3 start0 = env.geometry().ue_positions[0];
    const Vec3 start1 = env.geometry().ue_positions[1];
    env.env_step(0);
    const double step = 1.4 * 6e-3;
    const Vec3 p0 = env.geometry().ue_positions[0];
    const Vec3 p1 = env.geometry().ue_positions[1];
    // first UE heads +45 degrees, second -45 degrees
    CHECK(p0[0] - start0[0] == doctest::Approx(step * std::cos(M_PI / 4)).epsilon(1e-9));
    CHECK(p0[1] - start0[1] == doctest::Approx(step * std::sin(M_PI / 4)).epsilon(1e-9));
    CHECK(p1[0] - start1[0] == doctest::Approx(step * std::cos(-M_PI / 4)).epsilon(1e-9));
    CHECK(p1[1] - start1[1] == doctest::Approx(step * std::sin(-M_PI / 4)).epsilon(1e-9));

    // static scenario leaves positions untouched
    Environment fixed = make_env(32, 55);
    const Vec3 f0 = fixed.geometry().ue_positions[0];
    fixed.env_step(0);
    CHECK(fixed.geometry().ue_positions[0] == f0);
}

TEST_CASE("environment rejects mismatched configuration") {
    SceneGeometry g = make_default_scene(32);
    CHECK_THROWS_AS(Environment(g, RiceanConfig{}, default_space(64), RewardSpec{},
                                ObservationMode::full_csi, Scenario::iid_static, 1),
                    std::invalid_argument);
    RewardSpec qos;
    qos.mode = RewardMode::qos;
    qos.rate_requests = {0.4};  // needs one per UE
    CHECK_THROWS_AS(Environment(g, RiceanConfig{}, default_space(32), qos,
                                ObservationMode::full_csi, Scenario::iid_static, 1),
                    std::invalid_argument);
}
