#pragma once

#include <span>
#include <string>
#include <vector>

#include "phonon/fock.hpp"
#include "phonon/params.hpp"

namespace phonon {

/// One term of a double-commutator expansion: coefficient of |k><l|.
struct TableEntry {
    int k = 0;
    int l = 0;
    Complex value;
};

/// Expansions of [x,[x,|r><s|]] (Gamma) and [x,{p,|r><s|}] (Phi) on the mode-2 truncation,
/// with x, p the dimensionless quadratures. Only non-zero entries are stored.
class DecoherenceTables {
public:
    explicit DecoherenceTables(int n_max);

    int n_max() const noexcept { return n_max_; }
    const std::vector<TableEntry> &gamma_terms(int r, int s) const { return gamma_[slot(r, s)]; }
    const std::vector<TableEntry> &phi_terms(int r, int s) const { return phi_[slot(r, s)]; }

    /// Gamma_klrs: coefficient of |k><l| in [x,[x,|r><s|]].
    Complex gamma(int k, int l, int r, int s) const;
    /// Phi_klrs: coefficient of |k><l| in [x,{p,|r><s|}].
    Complex phi(int k, int l, int r, int s) const;

private:
    std::size_t slot(int r, int s) const {
        return static_cast<std::size_t>(r) * static_cast<std::size_t>(n_max_ + 1) +
               static_cast<std::size_t>(s);
    }

    int n_max_;
    std::vector<std::vector<TableEntry>> gamma_;
    std::vector<std::vector<TableEntry>> phi_;
};

DecoherenceTables build_tables(const FockBasis &basis);

enum class Frame { rotating, lab };

struct IntegratorConfig {
    /// Fixed RK4 step in seconds; 0 selects 0.05 / (largest generator rate).
    double step_s = 0.0;
    Frame frame = Frame::rotating;
    bool secular = true;
    LeakagePolicy leakage;
    /// Bound on the relative step-halving difference at every reported sample.
    double error_tolerance = 1e-6;
    DiffusionModel diffusion = DiffusionModel::quantum;

    bool operator==(const IntegratorConfig &) const = default;
    void validate() const;
};

struct EvolutionSample {
    double tau = 0.0;
    DensityMatrix rho;  // lab frame
    LeakageReport leakage;
};

struct EvolutionResult {
    std::vector<EvolutionSample> samples;
    /// Largest relative step-halving difference over all samples.
    double error_estimate = 0.0;
    double step_s = 0.0;
    std::vector<std::string> warnings;
};

/// Integrates the Caldeira-Leggett master equation for resonator 2 (resonator 1 bath-free):
///   d a_pqrs/dt = -i (w1 (p-q) + w2 (r-s)) a_pqrs - D sum_kl Gamma_rskl a_pqkl
///                 - i gamma~ sum_kl Phi_rskl a_pqkl
/// with D = params.diffusion(model) and gamma~ = gamma/2. In the rotating frame the carrier
/// phases are applied analytically; with `secular` only couplings with k - l = r - s are kept.
/// Marches once through the sorted `taus` and returns a lab-frame state at each.
/// Throws IntegrationError if the step-halving bound or trace conservation fails and
/// TruncationError under the leakage policy.
EvolutionResult evolve_samples(const DensityMatrix &rho, std::span<const double> taus,
                               const SystemParams &params, const IntegratorConfig &config);

/// Single delay; same contract as evolve_samples.
EvolutionResult evolve(const DensityMatrix &rho, double tau, const SystemParams &params,
                       const IntegratorConfig &config);

/// Multiplies element (pr, qs) by exp(+i (w1 (p-q) + w2 (r-s)) t) (to_rotating) or its inverse.
DensityMatrix to_rotating_frame(const DensityMatrix &lab, double t, const SystemParams &params);
DensityMatrix to_lab_frame(const DensityMatrix &rotating, double t, const SystemParams &params);

/// Secular generator: each rotating-frame coherence offset d = r - s evolves under a closed
/// real matrix over the chain {|j+d><j|} (or {|j><j-d|}); propagation is its exponential.
class SecularGenerator {
public:
    SecularGenerator(const FockBasis &basis, double diffusion, double damping);

    const FockBasis &basis() const noexcept { return basis_; }
    double diffusion() const noexcept { return diffusion_; }
    double damping() const noexcept { return damping_; }

    /// Generator over the offset-d chain, ordered by increasing min(r, s).
    const RealMatrix &block(int offset) const;
    /// -d ln a_rs / dt from the diagonal of the generator.
    double decay_rate(int r, int s) const;
    /// Rate of transfer from element (k, l) into (r, s); zero unless r - s == k - l.
    double transfer_rate(int r, int s, int k, int l) const;

    /// Exact propagation of a rotating-frame state.
    DensityMatrix propagate(const DensityMatrix &rotating, double tau) const;

private:
    FockBasis basis_;
    double diffusion_;
    double damping_;
    std::vector<RealMatrix> blocks_;  // index offset + n2_max
};

SecularGenerator secular_rates(const FockBasis &basis, const SystemParams &params,
                               DiffusionModel model = DiffusionModel::quantum);

/// Lab-frame delay evolution through the secular closed form.
DensityMatrix evolve_secular(const SecularGenerator &generator, const DensityMatrix &lab,
                             double tau, const SystemParams &params);

} // namespace phonon
