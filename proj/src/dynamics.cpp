#include "phonon/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "phonon/error.hpp"

namespace phonon {

namespace {

constexpr double kTableCutoff = 1e-15;

Matrix unit_projector(int n_max, int r, int s) {
    Matrix e = Matrix::Zero(n_max + 1, n_max + 1);
    e(r, s) = 1.0;
    return e;
}

std::vector<TableEntry> nonzero_entries(const Matrix &m) {
    std::vector<TableEntry> out;
    for (Eigen::Index k = 0; k < m.rows(); ++k) {
        for (Eigen::Index l = 0; l < m.cols(); ++l) {
            if (std::abs(m(k, l)) > kTableCutoff) {
                out.push_back({static_cast<int>(k), static_cast<int>(l), m(k, l)});
            }
        }
    }
    return out;
}

Complex lookup(const std::vector<TableEntry> &terms, int k, int l) {
    for (const auto &t : terms) {
        if (t.k == k && t.l == l) {
            return t.value;
        }
    }
    return {0.0, 0.0};
}

// Fractional part of a cycle count, so large carrier phases keep full precision.
double cycles_mod1(double freq_hz, double t) {
    const double c = freq_hz * t;
    return c - std::floor(c);
}

} // namespace

DecoherenceTables::DecoherenceTables(int n_max) : n_max_(n_max) {
    if (n_max < 1) {
        throw std::invalid_argument("decoherence tables need n_max >= 1");
    }
    const RealMatrix b = single_mode_lowering(n_max);
    const double r2 = 1.0 / std::sqrt(2.0);
    const Matrix x = (b + b.transpose()).cast<Complex>() * r2;
    const Matrix p = (b.transpose() - b).cast<Complex>() * Complex(0.0, r2);
    const auto n = static_cast<std::size_t>(n_max + 1);
    gamma_.resize(n * n);
    phi_.resize(n * n);
    for (int r = 0; r <= n_max; ++r) {
        for (int s = 0; s <= n_max; ++s) {
            const Matrix e = unit_projector(n_max, r, s);
            const Matrix inner = x * e - e * x;
            const Matrix anti = p * e + e * p;
            gamma_[slot(r, s)] = nonzero_entries(x * inner - inner * x);
            phi_[slot(r, s)] = nonzero_entries(x * anti - anti * x);
        }
    }
}

Complex DecoherenceTables::gamma(int k, int l, int r, int s) const {
    return lookup(gamma_terms(r, s), k, l);
}

Complex DecoherenceTables::phi(int k, int l, int r, int s) const {
    return lookup(phi_terms(r, s), k, l);
}

DecoherenceTables build_tables(const FockBasis &basis) { return DecoherenceTables(basis.n2_max()); }

void IntegratorConfig::validate() const {
    if (!(step_s >= 0.0) || !std::isfinite(step_s)) {
        throw std::invalid_argument("integrator step must be finite and >= 0 (0 = automatic)");
    }
    if (!(error_tolerance > 0.0)) {
        throw std::invalid_argument("integrator error tolerance must be positive");
    }
    if (!(leakage.warn >= 0.0 && leakage.fail >= leakage.warn)) {
        throw std::invalid_argument("leakage thresholds must satisfy 0 <= warn <= fail");
    }
}

namespace {

// Mode-2 coupling: d a(.,r ; .,s)/dt += coef * exp(i w2 dphase t) * a(.,k ; .,l).
struct Coupling {
    int r, s, k, l;
    Complex coef;
    int dphase;
};

std::vector<Coupling> build_couplings(const DecoherenceTables &tables, double diffusion,
                                      double damping, bool secular) {
    std::vector<Coupling> out;
    const int n = tables.n_max();
    for (int k = 0; k <= n; ++k) {
        for (int l = 0; l <= n; ++l) {
            // Accumulate Gamma and Phi on each target so merged coefficients are stored once.
            Matrix target = Matrix::Zero(n + 1, n + 1);
            for (const auto &t : tables.gamma_terms(k, l)) {
                target(t.k, t.l) += -diffusion * t.value;
            }
            for (const auto &t : tables.phi_terms(k, l)) {
                target(t.k, t.l) += Complex(0.0, -damping) * t.value;
            }
            for (int r = 0; r <= n; ++r) {
                for (int s = 0; s <= n; ++s) {
                    const Complex c = target(r, s);
                    if (std::abs(c) == 0.0) {
                        continue;
                    }
                    const int dphase = (r - s) - (k - l);
                    if (secular && dphase != 0) {
                        continue;
                    }
                    out.push_back({r, s, k, l, c, dphase});
                }
            }
        }
    }
    return out;
}

class MasterEquation {
public:
    MasterEquation(const FockBasis &basis, const SystemParams &params,
                   const IntegratorConfig &config)
        : basis_(basis), params_(params), frame_(config.frame) {
        const auto tables = build_tables(basis);
        // The lab frame keeps every coupling; dropping them only makes sense against the
        // analytic carrier phases of the rotating frame.
        const bool secular = config.secular && config.frame == Frame::rotating;
        couplings_ = build_couplings(tables, params.diffusion(config.diffusion), params.damping(),
                                     secular);
        const auto dim = static_cast<Eigen::Index>(basis.dimension());
        phase_rate_ = Matrix::Zero(dim, dim);
        if (frame_ == Frame::lab) {
            for (std::size_t i = 0; i < basis.dimension(); ++i) {
                for (std::size_t j = 0; j < basis.dimension(); ++j) {
                    const auto a = basis.state(i);
                    const auto b = basis.state(j);
                    const double w = params.omega1_angular() * (a.n1 - b.n1) +
                                     params.omega2_angular() * (a.n2 - b.n2);
                    phase_rate_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        Complex(0.0, -w);
                }
            }
        }
        has_time_dependence_ = std::any_of(couplings_.begin(), couplings_.end(),
                                           [](const Coupling &c) { return c.dphase != 0; }) &&
                               frame_ == Frame::rotating;
    }

    // Gershgorin bound on the generator plus the fastest explicit oscillation.
    double rate_bound() const {
        const int n = basis_.n2_max();
        std::vector<double> row(static_cast<std::size_t>((n + 1) * (n + 1)), 0.0);
        for (const auto &c : couplings_) {
            row[static_cast<std::size_t>(c.r * (n + 1) + c.s)] += std::abs(c.coef);
        }
        double bound = row.empty() ? 0.0 : *std::max_element(row.begin(), row.end());
        if (frame_ == Frame::lab) {
            bound += phase_rate_.cwiseAbs().maxCoeff();
        } else if (has_time_dependence_) {
            bound += 2.0 * params_.omega2_angular();
        }
        return bound;
    }

    void derivative(double t, const Matrix &a, Matrix &out) const {
        out.setZero(a.rows(), a.cols());
        const int n1 = basis_.n1_max();
        const int w = basis_.n2_max() + 1;
        for (const auto &c : couplings_) {
            Complex coef = c.coef;
            if (has_time_dependence_ && c.dphase != 0) {
                const double ph =
                    constants::two_pi * cycles_mod1(params_.omega2_hz, t) * c.dphase;
                coef *= Complex(std::cos(ph), std::sin(ph));
            }
            for (int p = 0; p <= n1; ++p) {
                for (int q = 0; q <= n1; ++q) {
                    out(p * w + c.r, q * w + c.s) += coef * a(p * w + c.k, q * w + c.l);
                }
            }
        }
        if (frame_ == Frame::lab) {
            out.array() += phase_rate_.array() * a.array();
        }
    }

    void rk4_step(double t, double h, Matrix &a) {
        derivative(t, a, k1_);
        tmp_ = a + 0.5 * h * k1_;
        derivative(t + 0.5 * h, tmp_, k2_);
        tmp_ = a + 0.5 * h * k2_;
        derivative(t + 0.5 * h, tmp_, k3_);
        tmp_ = a + h * k3_;
        derivative(t + h, tmp_, k4_);
        a += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

    bool is_trivial() const { return couplings_.empty() && frame_ == Frame::rotating; }

private:
    FockBasis basis_;
    SystemParams params_;
    Frame frame_;
    std::vector<Coupling> couplings_;
    Matrix phase_rate_;  // -i (w1 (p-q) + w2 (r-s)), lab frame only
    bool has_time_dependence_ = false;
    Matrix k1_, k2_, k3_, k4_, tmp_;
};

DensityMatrix finish_state(const FockBasis &basis, const Matrix &internal, double t,
                           const SystemParams &params, Frame frame) {
    const double tr = internal.trace().real();
    if (std::abs(tr - 1.0) > 1e-8) {
        std::ostringstream msg;
        msg.precision(12);
        msg << "trace drifted to " << tr << " at tau=" << t << "; reduce step_s";
        throw IntegrationError(msg.str());
    }
    auto rho = DensityMatrix::normalized(basis, internal);
    return frame == Frame::rotating ? to_lab_frame(rho, t, params) : rho;
}

} // namespace

EvolutionResult evolve_samples(const DensityMatrix &rho, std::span<const double> taus,
                               const SystemParams &params, const IntegratorConfig &config) {
    params.validate();
    config.validate();
    if (taus.empty()) {
        throw std::invalid_argument("evolve needs at least one delay");
    }
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] >= 0.0) || !std::isfinite(taus[i]) || (i > 0 && taus[i] < taus[i - 1])) {
            throw std::invalid_argument("delays must be finite, >= 0 and non-decreasing");
        }
    }
    const auto &basis = rho.basis();
    MasterEquation coarse(basis, params, config);
    MasterEquation fine(basis, params, config);

    EvolutionResult result;
    const double bound = coarse.rate_bound();
    double h = config.step_s;
    if (h == 0.0) {
        h = bound > 0.0 ? 0.05 / bound : std::numeric_limits<double>::infinity();
    }
    result.step_s = h;

    Matrix a_coarse = rho.elements();
    Matrix a_fine = rho.elements();
    double t = 0.0;
    for (const double tau : taus) {
        const double span = tau - t;
        if (span > 0.0 && !coarse.is_trivial()) {
            const double count = std::ceil(span / h);
            if (count > 5e8) {
                throw IntegrationError("step count exceeds 5e8; increase step_s");
            }
            const auto steps = static_cast<long>(std::max(1.0, count));
            const double hs = span / static_cast<double>(steps);
            for (long i = 0; i < steps; ++i) {
                const double t0 = t + static_cast<double>(i) * hs;
                coarse.rk4_step(t0, hs, a_coarse);
                fine.rk4_step(t0, 0.5 * hs, a_fine);
                fine.rk4_step(t0 + 0.5 * hs, 0.5 * hs, a_fine);
            }
        }
        t = tau;
        const double scale = std::max(a_fine.norm(), std::numeric_limits<double>::min());
        const double err = (a_coarse - a_fine).norm() / scale;
        result.error_estimate = std::max(result.error_estimate, err);
        if (err > config.error_tolerance) {
            std::ostringstream msg;
            msg << "step-halving error " << err << " at tau=" << tau << " exceeds "
                << config.error_tolerance << " with step " << h << " s; use a smaller step_s";
            throw IntegrationError(msg.str());
        }
        auto state = finish_state(basis, a_fine, tau, params, config.frame);
        const auto leak = top_level_population(state);
        std::ostringstream ctx;
        ctx << "evolution to tau=" << tau;
        // Only the bath mode can climb during free evolution, and only when it is damped;
        // closed evolution is exact on any truncation.
        if (params.gamma_hz > 0.0) {
            enforce_leakage(leak.mode2, config.leakage, ctx.str(), &result.warnings);
        }
        result.samples.push_back({tau, std::move(state), leak});
    }
    return result;
}

EvolutionResult evolve(const DensityMatrix &rho, double tau, const SystemParams &params,
                       const IntegratorConfig &config) {
    const double taus[] = {tau};
    return evolve_samples(rho, taus, params, config);
}

namespace {

DensityMatrix apply_carrier_phase(const DensityMatrix &rho, double t, const SystemParams &params,
                                  double sign) {
    const auto &basis = rho.basis();
    const double c1 = cycles_mod1(params.omega1_hz, t);
    const double cd = cycles_mod1(params.delta_omega_hz(), t);
    Matrix m = rho.elements();
    for (std::size_t i = 0; i < basis.dimension(); ++i) {
        for (std::size_t j = 0; j < basis.dimension(); ++j) {
            const auto a = basis.state(i);
            const auto b = basis.state(j);
            // w1 (p-q) + w2 (r-s) = w1 ((p-q) + (r-s)) + dw (r-s)
            const int total = (a.n1 - b.n1) + (a.n2 - b.n2);
            const int mode2 = a.n2 - b.n2;
            const double ph = sign * constants::two_pi * (c1 * total + cd * mode2);
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *=
                Complex(std::cos(ph), std::sin(ph));
        }
    }
    return DensityMatrix::normalized(basis, std::move(m));
}

} // namespace

DensityMatrix to_rotating_frame(const DensityMatrix &lab, double t, const SystemParams &params) {
    return apply_carrier_phase(lab, t, params, +1.0);
}

DensityMatrix to_lab_frame(const DensityMatrix &rotating, double t, const SystemParams &params) {
    return apply_carrier_phase(rotating, t, params, -1.0);
}

namespace {

// Element (r, s) of the offset-d chain at position j.
std::pair<int, int> chain_element(int offset, int j) {
    return offset >= 0 ? std::pair{j + offset, j} : std::pair{j, j - offset};
}

int chain_length(int n2_max, int offset) { return n2_max + 1 - std::abs(offset); }

} // namespace

SecularGenerator::SecularGenerator(const FockBasis &basis, double diffusion, double damping)
    : basis_(basis), diffusion_(diffusion), damping_(damping) {
    const int n = basis.n2_max();
    const auto tables = build_tables(basis);
    const auto couplings = build_couplings(tables, diffusion, damping, true);
    blocks_.resize(static_cast<std::size_t>(2 * n + 1));
    for (int d = -n; d <= n; ++d) {
        const int len = chain_length(n, d);
        blocks_[static_cast<std::size_t>(d + n)] = RealMatrix::Zero(len, len);
    }
    for (const auto &c : couplings) {
        const int d = c.r - c.s;
        auto &blk = blocks_[static_cast<std::size_t>(d + n)];
        // Secular couplings are real: Gamma is real and Phi purely imaginary.
        blk(std::min(c.r, c.s), std::min(c.k, c.l)) += c.coef.real();
    }
}

const RealMatrix &SecularGenerator::block(int offset) const {
    const int n = basis_.n2_max();
    if (std::abs(offset) > n) {
        throw std::out_of_range("coherence offset outside the mode-2 truncation");
    }
    return blocks_[static_cast<std::size_t>(offset + n)];
}

double SecularGenerator::decay_rate(int r, int s) const {
    const auto &blk = block(r - s);
    const int j = std::min(r, s);
    return -blk(j, j);
}

double SecularGenerator::transfer_rate(int r, int s, int k, int l) const {
    if (r - s != k - l) {
        return 0.0;
    }
    return block(r - s)(std::min(r, s), std::min(k, l));
}

DensityMatrix SecularGenerator::propagate(const DensityMatrix &rotating, double tau) const {
    if (!(rotating.basis() == basis_)) {
        throw std::invalid_argument("state basis does not match the secular generator");
    }
    if (!(tau >= 0.0)) {
        throw std::invalid_argument("delay must be >= 0");
    }
    const int n1 = basis_.n1_max();
    const int n = basis_.n2_max();
    const int w = n + 1;
    Matrix out = rotating.elements();
    for (int d = -n; d <= n; ++d) {
        const Matrix prop = (tau * block(d)).exp().cast<Complex>();
        const int len = chain_length(n, d);
        Vector v(len);
        for (int p = 0; p <= n1; ++p) {
            for (int q = 0; q <= n1; ++q) {
                for (int j = 0; j < len; ++j) {
                    const auto [r, s] = chain_element(d, j);
                    v(j) = rotating.elements()(p * w + r, q * w + s);
                }
                const Vector moved = prop * v;
                for (int j = 0; j < len; ++j) {
                    const auto [r, s] = chain_element(d, j);
                    out(p * w + r, q * w + s) = moved(j);
                }
            }
        }
    }
    return DensityMatrix::normalized(basis_, std::move(out));
}

SecularGenerator secular_rates(const FockBasis &basis, const SystemParams &params,
                               DiffusionModel model) {
    return SecularGenerator(basis, params.diffusion(model), params.damping());
}

DensityMatrix evolve_secular(const SecularGenerator &generator, const DensityMatrix &lab,
                             double tau, const SystemParams &params) {
    // The initial lab and rotating frames coincide at t = 0.
    return to_lab_frame(generator.propagate(lab, tau), tau, params);
}

} // namespace phonon
