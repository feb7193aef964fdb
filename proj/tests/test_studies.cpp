#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "oracles.hpp"
#include "phonon/studies.hpp"

using namespace phonon;

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) {
        v.push_back(a + (b - a) * i / (n - 1));
    }
    return v;
}

// Closed-system desk-scale protocol: 1 Hz beat, one period sampled.
ProtocolConfig sweep_base(int n_max = 3) {
    ProtocolConfig c;
    c.system.omega1_hz = 1000.0;
    c.system.omega2_hz = 1001.0;
    c.detection.eta = 0.01;
    c.basis = FockBasis(n_max, n_max);
    c.herald.max_order = 3;
    c.tau_grid = linspace(0.0, 1.0, 17);
    c.propagator = Propagator::secular_exact;
    return c;
}

std::vector<double> visibilities(const SweepGrid &g) {
    std::vector<double> v;
    for (const auto &c : g.cells) {
        REQUIRE(c.error.empty());
        v.push_back(c.visibility);
    }
    return v;
}

bool same_bits(double a, double b) {
    return std::memcmp(&a, &b, sizeof a) == 0;
}

} // namespace

TEST_SUITE("studies") {

TEST_CASE("timing examples") {
    TimingParams t;
    t.n_a = 1000;
    t.n_p = 30;
    t.eta = 0.01;
    t.p = 0.01;
    t.t12_s = 1e-6;
    t.ttot_s = 1e-6;
    const auto a = timing_estimate(t);
    // 30000 * (1e-6 * (1 - 1e-4) / 1e-6 + 1e-6 * 1e-2)
    CHECK(a.exact_s == doctest::Approx(30000.0 * (0.9999 + 1e-8)).epsilon(1e-12));
    CHECK(a.exact_s / 3600.0 == doctest::Approx(8.33).epsilon(0.001));
    CHECK(a.approx_s == doctest::Approx(30000.0).epsilon(1e-12));
    CHECK(a.postselection_s == doctest::Approx(29997.0).epsilon(1e-12));
    CHECK(a.exact_s >= a.postselection_s);

    t.t12_s = 100e-6;
    const auto b = timing_estimate(t);
    CHECK(b.exact_s == doctest::Approx(3.0e6).epsilon(0.001));
    CHECK(b.exact_s / 86400.0 == doctest::Approx(34.7).epsilon(0.002));
}

TEST_CASE("timing limits") {
    TimingParams t;
    t.eta = 1.0;
    t.p = 1.0;
    const auto e = timing_estimate(t);
    CHECK(e.exact_s == doctest::Approx(t.n_a * t.n_p * t.ttot_s).epsilon(1e-12));

    // approximation improves as eta p -> 0
    double last = 1.0;
    for (double p : {1e-1, 1e-2, 1e-3, 1e-4}) {
        t.eta = 0.01;
        t.p = p;
        const auto r = timing_estimate(t);
        const double gap = std::abs(r.approx_s / r.exact_s - 1.0);
        CHECK(gap < last);
        last = gap;
    }
    CHECK(last < 1e-5);

    t.eta = 0.0;
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}

TEST_CASE("two-detector timing") {
    TimingParams t;
    t.eta1 = 0.02;
    t.eta2 = 0.05;
    const auto r = timing_estimate(t, TimingMode::two_detector);
    const double expect = t.n_a * t.n_p * (t.t12_s * (1 - 0.02 * t.p) / (0.02 * 0.05 * t.p) + t.ttot_s * 0.02 * t.p / 0.05);
    CHECK(r.exact_s == doctest::Approx(expect).epsilon(1e-12));
    CHECK(r.approx_s == doctest::Approx(t.n_a * t.n_p * t.t12_s / (0.02 * 0.05 * t.p)).epsilon(1e-12));

    // equal detectors reduce to the single-detector form
    t.eta1 = t.eta;
    t.eta2 = t.eta;
    CHECK(timing_estimate(t, TimingMode::two_detector).exact_s ==
          doctest::Approx(timing_estimate(t).exact_s).epsilon(1e-14));
}

TEST_CASE("counting constraint bands") {
    auto r = counting_constraint(0.01, 5.0);
    CHECK(r.product == doctest::Approx(0.05));
    CHECK(r.band == Band::pass);
    CHECK(counting_constraint(0.5, 10.0).band == Band::fail);
    CHECK(counting_constraint(0.1, 5.0).band == Band::warn);
    CHECK(counting_constraint(1.0, 0.0).band == Band::pass);
    CHECK(to_string(Band::warn) == "warn");
}

TEST_CASE("sweep parameters") {
    CHECK(parse_sweep_parameter("jc_over_j") == SweepParameter::jc_over_j);
    CHECK(to_string(SweepParameter::dark) == "dark");
    CHECK_THROWS_AS(parse_sweep_parameter("eta"), std::invalid_argument);
    ProtocolConfig c;
    apply_parameter(c, SweepParameter::n_th, 0.3);
    CHECK(c.n_th.n1 == 0.3);
    CHECK(c.n_th.n2 == 0.3);
    apply_parameter(c, SweepParameter::p, 0.2);
    CHECK(c.detection.p == 0.2);
    CHECK(c.herald.p == 0.2);
    apply_parameter(c, SweepParameter::dark, 1e-4);
    CHECK(c.detection.dark == 1e-4);
    CHECK(c.herald.dark == 1e-4);
}

TEST_CASE("zero imperfections give unit visibility everywhere") {
    const auto base = sweep_base();
    const auto g = sweep_visibility(base, {{"jc_over_j", {0.0}}, {"n_th", {0.0}}});
    REQUIRE(g.size() == 1);
    CHECK(g.cells[0].visibility == doctest::Approx(1.0).epsilon(1e-12));
    const auto g2 = sweep_visibility(base, {{"p", {0.0}}, {"dark", {0.0}}});
    CHECK(g2.cells[0].visibility == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g2.cells[0].feasible);
}

TEST_CASE("sweep cells are reproducible and independent of threads") {
    auto base = sweep_base();
    base.integrator.leakage.fail = 1.0;
    const std::vector<SweepAxis> axes{{"n_th", {0.0, 0.05, 0.2}}, {"p", {0.01, 0.1}}};
    const auto one = sweep_visibility(base, axes, {1, feasibility_threshold});
    const auto four = sweep_visibility(base, axes, {4, feasibility_threshold});
    REQUIRE(one.size() == 6);
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(same_bits(one.cells[i].visibility, four.cells[i].visibility));
        const auto alone = run_cell(one.cells[i].inputs);
        CHECK(same_bits(alone.visibility, one.cells[i].visibility));
    }
    CHECK(one.at(2, 1).coords == std::vector<double>{0.2, 0.1});
    CHECK(one.at(2, 1).inputs.n_th.n2 == 0.2);
    CHECK(one.at(2, 1).inputs.herald.p == 0.1);
}

TEST_CASE("single-cell sweep equals a direct protocol run") {
    auto base = sweep_base();
    base.n_th = {0.05, 0.05};
    const auto g = sweep_visibility(base, {{"dark", {1e-4}}});
    auto direct = base;
    direct.detection.dark = 1e-4;
    direct.herald.dark = 1e-4;
    CHECK(same_bits(g.cells[0].visibility, extract_visibility(run_protocol(direct))));
}

TEST_CASE("cell failures stay inside the grid") {
    auto base = sweep_base();
    const auto g = sweep_visibility(base, {{"n_th", {0.0, 3.0}}});
    CHECK(g.cells[0].error.empty());
    CHECK_FALSE(g.cells[1].error.empty());
    CHECK(std::isnan(g.cells[1].visibility));
    CHECK_FALSE(g.cells[1].feasible);
    CHECK_THROWS_AS(sweep_visibility(base, {}), std::invalid_argument);
    CHECK_THROWS_AS(sweep_visibility(base, {{"n_th", {}}}), std::invalid_argument);
    CHECK_THROWS_AS(sweep_visibility(base, {{"p", {0.1}}, {"p", {0.2}}}), std::invalid_argument);
}

TEST_CASE("visibility degrades along thermal, dark and sideband axes") {
    // bases large enough that the leakage policy holds at its defaults
    auto base = sweep_base(5);
    base.n_th = {0.01, 0.01};
    base.detection.p = base.herald.p = 0.01;
    base.detection.dark = base.herald.dark = 1e-6;

    const auto check_axis = [&](const char *name, std::vector<double> values) {
        const auto v = visibilities(sweep_visibility(base, {{name, values}}));
        for (std::size_t i = 1; i < v.size(); ++i) {
            CHECK_MESSAGE(v[i] < v[i - 1], name << " at " << values[i]);
        }
    };
    check_axis("n_th", {0.0, 0.02, 0.05, 0.1, 0.2});
    check_axis("dark", {1e-6, 1e-4, 1e-3, 1e-2, 0.1});
    check_axis("jc_over_j", {0.0, 0.01, 0.05, 0.1, 0.2});
    check_axis("jh_over_j", {0.0, 0.01, 0.05, 0.1, 0.2});
}

TEST_CASE("dark counts alone are invisible without thermal background") {
    // a dark herald leaves the vacuum, which never clicks the readout
    auto base = sweep_base();
    const auto v = visibilities(sweep_visibility(base, {{"dark", {0.0, 0.1, 1.0}}}));
    for (double x : v) {
        CHECK(x == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("multi-phonon herald branches raise the fringe contrast slightly") {
    // two-phonon branches interfere with full contrast on top of the thermal background,
    // so at low n_th the visibility grows with p
    auto base = sweep_base(5);
    base.n_th = {0.01, 0.01};
    base.detection.dark = base.herald.dark = 1e-6;
    const auto v = visibilities(sweep_visibility(base, {{"p", {0.001, 0.01, 0.05, 0.1}}}));
    for (std::size_t i = 1; i < v.size(); ++i) {
        CHECK(v[i] > v[i - 1]);
    }
    CHECK(v.front() > 0.97);
    CHECK(v.back() < 0.99);
}

TEST_CASE("detuning rates") {
    const DetuningParams p;
    const auto far = detuning_rates(1e4, p);
    CHECK(far.finite);
    CHECK(far.jc_over_j < 1e-3);
    CHECK(far.jh_over_j < 1e-3);
    const auto on = detuning_rates(0.0, p);
    const bool usable = on.finite && on.jc_over_j + on.jh_over_j < 1.0;
    CHECK_FALSE(usable);
    // beam on the other mode's red sideband
    const auto cross = detuning_rates(10.0, p);
    CHECK(cross.jc_over_j > 1.0);
    // the exchange rate peaks at |delta| = kappa / 2
    CHECK(detuning_rates(0.5, p).j > detuning_rates(0.3, p).j);
    CHECK(detuning_rates(0.5, p).j > detuning_rates(0.8, p).j);
    DetuningParams bad;
    bad.omega2_over_omega1 = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("detuning sweep masks near the sidebands") {
    auto base = sweep_base();
    base.n_th = {0.01, 0.01};
    base.detection.p = base.herald.p = 0.01;
    base.detection.dark = base.herald.dark = 1e-6;
    base.integrator.leakage.fail = 1.0;
    std::vector<double> deltas{0.0};
    for (double d = -12.0; d <= -8.0; d += 0.5) {
        deltas.push_back(d);
    }
    for (double d = 0.25; d <= 2.5; d += 0.25) {
        deltas.push_back(d);
    }
    deltas.push_back(100.0);
    deltas.push_back(1000.0);
    const auto g = detuning_sweep(base, deltas, DetuningParams{}, {2, feasibility_threshold});
    REQUIRE(g.size() == deltas.size());
    CHECK(g.cells[0].masked);
    CHECK(std::isnan(g.cells[0].visibility));
    CHECK(g.at(deltas.size() - 1).feasible);
    CHECK(g.at(deltas.size() - 1).visibility > 0.9);

    double j_max = 0.0;
    for (const auto &c : g.cells) {
        j_max = std::max(j_max, c.extras.at("j_normalized"));
        CHECK(c.extras.at("j_normalized") >= 0.0);
        CHECK(c.extras.at("j_normalized") <= 1.0);
        if (!c.masked) {
            CHECK(c.error.empty());
            CHECK(c.inputs.coupling.jc_over_j == c.extras.at("jc_over_j"));
        }
    }
    CHECK(j_max == 1.0);
    // large detuning, small exchange rate
    CHECK(g.at(deltas.size() - 1).extras.at("j_normalized") < g.at(deltas.size() - 2).extras.at("j_normalized"));
}

TEST_CASE("detuning mask is monotone towards a sideband") {
    const DetuningParams p;
    for (double centre : {0.0, 10.0, -10.0, -20.0, -30.0, -40.0}) {
        for (double side : {-1.0, 1.0}) {
            bool masked = false;
            for (double off = 4.0; off > 1e-6; off *= 0.8) {
                const auto r = detuning_rates(centre + side * off, p);
                const bool now = !r.finite || r.jc_over_j + r.jh_over_j >= 1.0;
                if (masked) {
                    CHECK_MESSAGE(now, "centre " << centre << " offset " << side * off);
                }
                masked = masked || now;
            }
            CHECK(masked);
        }
    }
}

TEST_CASE("snapshot at zero delay is the split state") {
    auto c = sweep_base();
    c.n_th = {0.01, 0.01};
    c.system.gamma_hz = 0.1;
    c.system.t_env_k = 1e-8;
    c.propagator = Propagator::rk4;
    const auto snaps = snapshot_sequence(c, {0.0});
    REQUIRE(snaps.size() == 1);
    const auto split = prepare_split_state(c);
    CHECK((snaps[0].rho.elements() - split.elements()).cwiseAbs().maxCoeff() < 1e-15);
    // population sits in the single-excitation sector
    CHECK(snaps[0].rho.population(1, 0) + snaps[0].rho.population(0, 1) > 0.9);
    CHECK(off_diagonal_magnitude(snaps[0].rho) > 0.9);
}

TEST_CASE("closed-system snapshots are frozen in the rotating frame") {
    auto c = sweep_base();
    const std::vector<double> times{0.7, 0.0, 0.31};
    const auto rot = snapshot_sequence(c, times);
    const auto lab = snapshot_sequence(c, times, Frame::lab);
    REQUIRE(rot.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(rot[i].tau == times[i]);
        CHECK((rot[i].rho.elements() - rot[1].rho.elements()).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK((lab[0].rho.elements() - lab[1].rho.elements()).cwiseAbs().maxCoeff() > 0.1);
    CHECK_THROWS_AS(snapshot_sequence(c, {}), std::invalid_argument);
    CHECK_THROWS_AS(snapshot_sequence(c, {-1.0}), std::invalid_argument);
}

TEST_CASE("off-diagonal magnitude") {
    const FockBasis b(1, 1);
    CHECK(off_diagonal_magnitude(DensityMatrix::fock(b, 1, 0)) == 0.0);
    Vector psi = Vector::Zero(4);
    psi(1) = psi(2) = 1.0 / std::sqrt(2.0);
    CHECK(off_diagonal_magnitude(DensityMatrix::pure(b, psi)) == doctest::Approx(1.0).epsilon(1e-15));
}

} // TEST_SUITE
