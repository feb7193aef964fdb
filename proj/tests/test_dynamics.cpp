#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "phonon/dynamics.hpp"
#include "phonon/error.hpp"

using namespace phonon;

namespace {

// Bath temperature that gives occupancy n at frequency f.
double temperature_for(double f_hz, double n) {
    return constants::two_pi * constants::hbar * f_hz / (constants::k_B * std::log1p(1.0 / n));
}

SystemParams params_with(double gamma_hz, double n_env) {
    SystemParams p;
    p.omega1_hz = 1000.0;
    p.omega2_hz = 1100.0;
    p.gamma_hz = gamma_hz;
    p.t_env_k = n_env > 0.0 ? temperature_for(p.omega2_hz, n_env) : 0.0;
    return p;
}

DensityMatrix split_state(const FockBasis &b) {
    Vector psi = Vector::Zero(static_cast<Eigen::Index>(b.dimension()));
    psi(static_cast<Eigen::Index>(b.index(1, 0))) = 1.0 / std::sqrt(2.0);
    psi(static_cast<Eigen::Index>(b.index(0, 1))) = 1.0 / std::sqrt(2.0);
    return DensityMatrix::pure(b, psi);
}

// [x,[x,E]] and [x,{p,E}] for E = |r><s| built directly from ladder matrices.
Matrix double_commutator(int n, int r, int s, bool phi) {
    const RealMatrix b = oracle::lower(n);
    const Matrix x = (b + b.transpose()).cast<Complex>() / std::sqrt(2.0);
    const Matrix p = Complex(0, 1) * (b.transpose() - b).cast<Complex>() / std::sqrt(2.0);
    Matrix e = Matrix::Zero(n + 1, n + 1);
    e(r, s) = 1.0;
    Matrix inner = phi ? Matrix(p * e + e * p) : Matrix(x * e - e * x);
    return x * inner - inner * x;
}

double max_abs_diff(const DensityMatrix &a, const DensityMatrix &b) {
    return (a.elements() - b.elements()).cwiseAbs().maxCoeff();
}

} // namespace

TEST_SUITE("dynamics") {

TEST_CASE("gamma table on the vacuum projector") {
    const DecoherenceTables t(4);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(t.gamma(0, 0, 0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(t.gamma(1, 1, 0, 0) + 1.0) < 1e-15);
    CHECK(std::abs(t.gamma(2, 0, 0, 0) - r) < 1e-15);
    CHECK(std::abs(t.gamma(0, 2, 0, 0) - r) < 1e-15);
    CHECK(t.gamma_terms(0, 0).size() == 4);
}

TEST_CASE("phi table on the vacuum projector") {
    const DecoherenceTables t(4);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(t.phi(0, 0, 0, 0) - Complex(0, 1)) < 1e-15);
    CHECK(std::abs(t.phi(1, 1, 0, 0) - Complex(0, -1)) < 1e-15);
    CHECK(std::abs(t.phi(2, 0, 0, 0) - Complex(0, r)) < 1e-15);
    CHECK(std::abs(t.phi(0, 2, 0, 0) - Complex(0, r)) < 1e-15);
    CHECK(t.phi_terms(0, 0).size() == 4);
}

TEST_CASE("tables match the ladder expansion on every element") {
    const int n = 6;
    const DecoherenceTables t(n);
    for (int r = 0; r <= n; ++r) {
        for (int s = 0; s <= n; ++s) {
            const Matrix g = double_commutator(n, r, s, false);
            const Matrix f = double_commutator(n, r, s, true);
            for (int k = 0; k <= n; ++k) {
                for (int l = 0; l <= n; ++l) {
                    REQUIRE(std::abs(t.gamma(k, l, r, s) - g(k, l)) < 1e-13);
                    REQUIRE(std::abs(t.phi(k, l, r, s) - f(k, l)) < 1e-13);
                    if (std::abs(k - r) > 2 || std::abs(l - s) > 2) {
                        REQUIRE(t.gamma(k, l, r, s) == Complex(0, 0));
                        REQUIRE(t.phi(k, l, r, s) == Complex(0, 0));
                    }
                    // Gamma maps Hermitian conjugates to Hermitian conjugates
                    REQUIRE(std::abs(t.gamma(k, l, r, s) - std::conj(t.gamma(l, k, s, r))) < 1e-13);
                }
            }
        }
    }
}

TEST_CASE("closed system: rotating frame is frozen, lab coherence turns at the beat") {
    const FockBasis b(1, 3);
    const auto params = params_with(0.0, 0.0);
    const auto rho = split_state(b);
    IntegratorConfig cfg;
    for (double tau : {0.0, 1.3e-3, 7.77e-3}) {
        const auto out = evolve(rho, tau, params, cfg).samples.front().rho;
        const auto rot = to_rotating_frame(out, tau, params);
        CHECK(max_abs_diff(rot, rho) < 1e-12);
        // element |10><01| carries exp(-i (w1 - w2) tau)
        const Complex expect = rho.element({1, 0}, {0, 1}) *
                               std::exp(Complex(0, params.delta_omega_angular() * tau));
        CHECK(std::abs(out.element({1, 0}, {0, 1}) - expect) < 1e-12);
    }
}

TEST_CASE("thermalization follows the rate equation") {
    const FockBasis b(1, 10);
    const double n_env = 0.3;
    const auto params = params_with(5.0, n_env);
    CHECK(params.n_env() == doctest::Approx(n_env).epsilon(1e-12));
    const double g = params.gamma_angular();
    const auto rho = thermal_state({0.0, 1.2}, b);
    const double n0 = expected_occupancy(rho, Mode::two);

    std::vector<double> taus;
    for (int i = 1; i <= 10; ++i) {
        taus.push_back(0.05 * i / g);
    }
    IntegratorConfig cfg;
    cfg.leakage.fail = 1.0;  // the hot initial state sits high in the ladder
    const auto res = evolve_samples(rho, taus, params, cfg);
    for (const auto &s : res.samples) {
        const double expect = n_env + (n0 - n_env) * std::exp(-g * s.tau);
        CHECK(expected_occupancy(s.rho, Mode::two) == doctest::Approx(expect).epsilon(0.01));
    }
    // instantaneous rate from a short step
    const double h = 1e-4 / g;
    const auto early = evolve(rho, h, params, cfg).samples.front().rho;
    const double rate = (expected_occupancy(early, Mode::two) - n0) / h;
    CHECK(rate == doctest::Approx(-g * (n0 - n_env)).epsilon(0.05));
}

TEST_CASE("long-time fixed point is the truncated thermal state") {
    const FockBasis b(1, 8);
    const double n_env = 0.4;
    const auto params = params_with(2.0, n_env);
    const auto rho = split_state(b);
    const double tau = 20.0 / params.gamma_angular();
    const auto gen = secular_rates(b, params);
    const auto out = evolve_secular(gen, rho, tau, params);
    const auto m2 = out.marginal(Mode::two);
    const auto w = oracle::geometric(n_env, 8);
    for (int k = 0; k <= 8; ++k) {
        CHECK(std::abs(m2(k) - w(k)) < 0.02 * w(0));
    }
    IntegratorConfig cfg;
    const auto rk = evolve(rho, tau, params, cfg).samples.front().rho;
    CHECK(max_abs_diff(rk, out) < 1e-5);
}

TEST_CASE("split-state coherence decays while mode 1 is untouched") {
    const FockBasis b(1, 6);
    const auto params = params_with(3.0, 0.5);
    const auto rho = split_state(b);
    std::vector<double> taus;
    for (int i = 0; i <= 20; ++i) {
        taus.push_back(0.02 * i);
    }
    const auto res = evolve_samples(rho, taus, params, IntegratorConfig{});
    double last = 1.0;
    for (const auto &s : res.samples) {
        const auto rot = to_rotating_frame(s.rho, s.tau, params);
        const double c = std::abs(rot.element({1, 0}, {0, 1}));
        CHECK(c <= last + 1e-12);
        last = c;
        CHECK(expected_occupancy(s.rho, Mode::one) == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(std::abs(s.rho.trace() - 1.0) < 1e-8);
        CHECK(s.rho.hermiticity_error() < 1e-12);
        CHECK(s.rho.is_psd());
    }
    CHECK(last < 0.5 * 0.5);
    CHECK(res.error_estimate <= 1e-6);
}

TEST_CASE("secular rates match the thermal-bath closed forms") {
    const FockBasis b(1, 6);
    const double n = 0.7;
    const auto params = params_with(1.0, n);
    const double g = params.gamma_angular();
    const auto gen = secular_rates(b, params);
    // |m><m'| decays at g(n+1)(m+m')/2 + g n (m+m'+2)/2 away from the truncation
    for (int m = 0; m <= 3; ++m) {
        for (int mp = 0; mp <= 3; ++mp) {
            const double expect = 0.5 * g * (n + 1.0) * (m + mp) + 0.5 * g * n * (m + mp + 2);
            CHECK(gen.decay_rate(m, mp) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    // population transfer: down g(n+1) k, up g n (k+1)
    CHECK(gen.transfer_rate(1, 1, 2, 2) == doctest::Approx(g * (n + 1.0) * 2.0).epsilon(1e-12));
    CHECK(gen.transfer_rate(2, 2, 1, 1) == doctest::Approx(g * n * 2.0).epsilon(1e-12));
    CHECK(gen.transfer_rate(1, 0, 2, 2) == 0.0);
}

TEST_CASE("coherence outpaces population relaxation once n_env >= 1/4") {
    const FockBasis b(1, 6);
    for (double n : {0.25, 0.6, 2.0}) {
        const auto params = params_with(1.0, n);
        const auto gen = secular_rates(b, params);
        CHECK(gen.decay_rate(1, 0) >= params.gamma_angular() * (1.0 - 1e-12));
    }
    // colder baths approach the amplitude-damping limit gamma/2
    const auto cold = params_with(1.0, 1e-6);
    CHECK(secular_rates(b, cold).decay_rate(1, 0) == doctest::Approx(0.5 * cold.gamma_angular()).epsilon(1e-4));
}

TEST_CASE("coherence decay is linear in the diffusion coefficient") {
    const FockBasis b(1, 5);
    const double damping = 0.8;
    const double r0 = SecularGenerator(b, 0.0, damping).decay_rate(1, 0);
    const double r1 = SecularGenerator(b, 1.5, damping).decay_rate(1, 0);
    const double r2 = SecularGenerator(b, 3.0, damping).decay_rate(1, 0);
    CHECK(r2 - r1 == doctest::Approx(r1 - r0).epsilon(1e-12));
    CHECK(r1 > r0);
}

TEST_CASE("vacuum is stationary at zero temperature") {
    const FockBasis b(1, 4);
    const auto params = params_with(10.0, 0.0);
    const auto vac = DensityMatrix::fock(b, 0, 0);
    const auto gen = secular_rates(b, params);
    CHECK(max_abs_diff(evolve_secular(gen, vac, 0.5, params), vac) < 1e-14);
    CHECK(max_abs_diff(evolve(vac, 0.5, params, {}).samples.front().rho, vac) < 1e-12);
}

TEST_CASE("secular closed form agrees with full integration") {
    // Full Caldeira-Leggett integration keeps the counter-rotating couplings; with w2 >> gamma
    // they average out and the secular propagator follows within a few percent.
    const FockBasis b(1, 6);
    SystemParams params = params_with(0.5, 0.3);
    params.omega1_hz = 38.0;
    params.omega2_hz = 40.0;
    params.t_env_k = temperature_for(params.omega2_hz, 0.3);
    const auto rho = split_state(b);
    IntegratorConfig full;
    full.secular = false;
    const auto gen = secular_rates(b, params);
    for (double tau : {0.1, 0.3, 0.6}) {
        const auto a = evolve(rho, tau, params, full).samples.front().rho;
        const auto s = evolve_secular(gen, rho, tau, params);
        CHECK(expected_occupancy(a, Mode::two) ==
              doctest::Approx(expected_occupancy(s, Mode::two)).epsilon(0.05));
        CHECK(std::abs(a.element({1, 0}, {0, 1})) ==
              doctest::Approx(std::abs(s.element({1, 0}, {0, 1}))).epsilon(0.05));
    }
}

TEST_CASE("rotating and lab frames integrate the same physics") {
    const FockBasis b(1, 4);
    SystemParams params = params_with(0.5, 0.3);
    params.omega1_hz = 3.0;
    params.omega2_hz = 4.0;
    params.t_env_k = temperature_for(params.omega2_hz, 0.3);
    const auto rho = split_state(b);
    IntegratorConfig rot;
    rot.secular = false;
    IntegratorConfig lab = rot;
    lab.frame = Frame::lab;
    const auto a = evolve(rho, 0.4, params, rot).samples.front().rho;
    const auto c = evolve(rho, 0.4, params, lab).samples.front().rho;
    CHECK(max_abs_diff(a, c) < 1e-6);
}

TEST_CASE("RK4 is fourth order") {
    const FockBasis b(1, 5);
    const auto params = params_with(1.0, 0.5);
    const double tau = 1.0 / params.gamma_angular();
    const auto rho = split_state(b);
    const auto exact = evolve_secular(secular_rates(b, params), rho, tau, params);
    std::vector<double> errors;
    for (double h : {tau / 40.0, tau / 80.0}) {
        IntegratorConfig cfg;
        cfg.step_s = h;
        cfg.error_tolerance = 1.0;
        errors.push_back(max_abs_diff(evolve(rho, tau, params, cfg).samples.front().rho, exact));
    }
    const double ratio = errors[0] / errors[1];
    CHECK(ratio > 13.0);
    CHECK(ratio < 19.0);
}

TEST_CASE("evolution is linear") {
    const FockBasis b(1, 5);
    const auto params = params_with(2.0, 0.4);
    const auto r1 = split_state(b);
    const auto r2 = thermal_state({0.3, 0.2}, b);
    const double alpha = 0.35;
    const auto mix = DensityMatrix(b, alpha * r1.elements() + (1 - alpha) * r2.elements());
    IntegratorConfig cfg;
    const double tau = 0.07;
    const auto e1 = evolve(r1, tau, params, cfg).samples.front().rho;
    const auto e2 = evolve(r2, tau, params, cfg).samples.front().rho;
    const auto em = evolve(mix, tau, params, cfg).samples.front().rho;
    CHECK((em.elements() - alpha * e1.elements() - (1 - alpha) * e2.elements()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("oversized steps are refused") {
    const FockBasis b(1, 5);
    const auto params = params_with(2.0, 0.4);
    IntegratorConfig cfg;
    cfg.step_s = 0.5;
    CHECK_THROWS_AS(evolve(split_state(b), 2.0, params, cfg), IntegrationError);
}

TEST_CASE("bath heating past the truncation fails under the leakage policy") {
    const FockBasis b(1, 3);
    const auto params = params_with(2.0, 3.0);
    CHECK_THROWS_AS(evolve(split_state(b), 5.0, params, {}), TruncationError);
    IntegratorConfig lenient;
    lenient.leakage = {1e-3, 1.0};
    const auto res = evolve(split_state(b), 5.0, params, lenient);
    CHECK_FALSE(res.warnings.empty());
    CHECK(res.samples.front().leakage.mode2 > 1e-2);
}

TEST_CASE("sample order and validation") {
    const FockBasis b(1, 3);
    const auto params = params_with(2.0, 0.1);
    const std::vector<double> bad{0.2, 0.1};
    CHECK_THROWS_AS(evolve_samples(split_state(b), bad, params, {}), std::invalid_argument);
    IntegratorConfig cfg;
    cfg.step_s = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

} // TEST_SUITE
