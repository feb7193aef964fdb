#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace phonon {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

enum class Mode { one = 1, two = 2 };

struct FockState {
    int n1 = 0;
    int n2 = 0;
    bool operator==(const FockState &) const = default;
};

/// Truncated two-mode number basis {|n1 n2>} ordered row-major:
/// index(n1, n2) = n1 * (n2_max + 1) + n2.
class FockBasis {
public:
    /// Throws std::invalid_argument unless both truncations are >= 1.
    FockBasis(int n1_max, int n2_max);

    int n1_max() const noexcept { return n1_max_; }
    int n2_max() const noexcept { return n2_max_; }
    int n_max(Mode mode) const noexcept { return mode == Mode::one ? n1_max_ : n2_max_; }
    std::size_t dimension() const noexcept {
        return static_cast<std::size_t>(n1_max_ + 1) * static_cast<std::size_t>(n2_max_ + 1);
    }
    bool is_square() const noexcept { return n1_max_ == n2_max_; }

    std::size_t index(int n1, int n2) const;
    std::size_t index(FockState s) const { return index(s.n1, s.n2); }
    FockState state(std::size_t k) const;
    bool contains(int n1, int n2) const noexcept {
        return n1 >= 0 && n2 >= 0 && n1 <= n1_max_ && n2 <= n2_max_;
    }

    /// Label as printed in state listings: digits of n1 followed by digits of n2 ("00", "010", "110").
    std::string label(std::size_t k) const;

    bool operator==(const FockBasis &) const = default;

private:
    int n1_max_;
    int n2_max_;
};

FockBasis build_basis(int n1_max, int n2_max);

/// Complex Hermitian unit-trace matrix over a FockBasis. Entry (i, j) is the coefficient
/// of |state(i)><state(j)|.
class DensityMatrix {
public:
    static constexpr double hermiticity_tolerance = 1e-12;
    static constexpr double trace_tolerance = 1e-10;
    static constexpr double psd_tolerance = 1e-9;

    /// Validates shape, Hermiticity and unit trace (and PSD in debug builds); throws
    /// std::invalid_argument otherwise.
    DensityMatrix(FockBasis basis, Matrix elements);

    static DensityMatrix pure(FockBasis basis, const Vector &amplitudes);
    static DensityMatrix fock(FockBasis basis, int n1, int n2);
    /// Hermitizes and rescales to unit trace before validating. Throws if the trace vanishes.
    static DensityMatrix normalized(FockBasis basis, Matrix elements);

    const FockBasis &basis() const noexcept { return basis_; }
    const Matrix &elements() const noexcept { return elements_; }
    Complex operator()(std::size_t i, std::size_t j) const {
        return elements_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    Complex element(FockState row, FockState col) const {
        return (*this)(basis_.index(row), basis_.index(col));
    }
    double population(int n1, int n2) const { return element({n1, n2}, {n1, n2}).real(); }

    double trace() const { return elements_.trace().real(); }
    double min_eigenvalue() const;
    bool is_psd(double tolerance = psd_tolerance) const { return min_eigenvalue() >= -tolerance; }
    /// Largest |rho_ij - conj(rho_ji)|.
    double hermiticity_error() const;

    /// Occupation probabilities of one mode, length n_max(mode) + 1.
    RealVector marginal(Mode mode) const;

private:
    FockBasis basis_;
    Matrix elements_;
};

struct LadderPair {
    RealMatrix lowering;
    RealMatrix raising;
};

/// Lowering/raising operators of one mode on the two-mode basis (identity on the other);
/// matrix elements beyond the truncation are dropped.
LadderPair ladder_elements(Mode mode, const FockBasis &basis);

struct QuadraturePair {
    Matrix x;  // (b + b^dag) / sqrt(2)
    Matrix p;  // i (b^dag - b) / sqrt(2)
};

QuadraturePair quadratures(Mode mode, const FockBasis &basis);

/// Single-mode versions on {|0>..|n_max>}, used by the dissipator tables.
RealMatrix single_mode_lowering(int n_max);

struct ThermalOccupancy {
    double n1 = 0.0;
    double n2 = 0.0;
    bool operator==(const ThermalOccupancy &) const = default;
};

/// Bose-Einstein weight beyond the truncation, 1 - sum_{k<=n_max} P(k) = (n/(1+n))^(n_max+1).
double thermal_truncated_weight(double n_th, int n_max);

enum class TruncationCheck { warn, fail };

/// Diagonal product of Bose-Einstein distributions, renormalized over the basis.
/// When either mode loses more than `truncation_limit` of its weight, a warning is appended
/// to `warnings` (TruncationCheck::warn) or TruncationError is thrown (TruncationCheck::fail).
DensityMatrix thermal_state(ThermalOccupancy n_th, const FockBasis &basis,
                            TruncationCheck check = TruncationCheck::warn,
                            std::vector<std::string> *warnings = nullptr,
                            double truncation_limit = 0.01);

double expected_occupancy(const DensityMatrix &rho, Mode mode);

/// Population sitting in the top Fock level of each mode.
struct LeakageReport {
    double mode1 = 0.0;
    double mode2 = 0.0;
    double max() const { return mode1 > mode2 ? mode1 : mode2; }
};

LeakageReport top_level_population(const DensityMatrix &rho);

/// Thresholds applied to LeakageReport values (and to population dropped off the basis).
struct LeakagePolicy {
    double warn = 1e-3;
    double fail = 1e-2;
    bool operator==(const LeakagePolicy &) const = default;
};

/// Appends a warning above policy.warn; throws TruncationError above policy.fail.
void enforce_leakage(double leaked, const LeakagePolicy &policy, const std::string &context,
                     std::vector<std::string> *warnings);

/// Embed into a larger basis (zero padding) or crop into a smaller one.
/// Cropping returns the discarded population and renormalizes.
DensityMatrix embed(const DensityMatrix &rho, const FockBasis &target);
std::pair<DensityMatrix, double> crop(const DensityMatrix &rho, const FockBasis &target);

} // namespace phonon
