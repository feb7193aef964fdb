#include "phonon/fock.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "phonon/error.hpp"

namespace phonon {

FockBasis::FockBasis(int n1_max, int n2_max) : n1_max_(n1_max), n2_max_(n2_max) {
    if (n1_max < 1 || n2_max < 1) {
        std::ostringstream msg;
        msg << "Fock truncation must keep at least |0> and |1> in each mode; got n1_max=" << n1_max
            << ", n2_max=" << n2_max;
        throw std::invalid_argument(msg.str());
    }
}

std::size_t FockBasis::index(int n1, int n2) const {
    if (!contains(n1, n2)) {
        std::ostringstream msg;
        msg << "state |" << n1 << "," << n2 << "> is outside the basis (" << n1_max_ << ","
            << n2_max_ << ")";
        throw std::out_of_range(msg.str());
    }
    return static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2_max_ + 1) +
           static_cast<std::size_t>(n2);
}

FockState FockBasis::state(std::size_t k) const {
    if (k >= dimension()) {
        throw std::out_of_range("basis index out of range");
    }
    const auto width = static_cast<std::size_t>(n2_max_ + 1);
    return {static_cast<int>(k / width), static_cast<int>(k % width)};
}

std::string FockBasis::label(std::size_t k) const {
    const auto s = state(k);
    return std::to_string(s.n1) + std::to_string(s.n2);
}

FockBasis build_basis(int n1_max, int n2_max) { return FockBasis(n1_max, n2_max); }

namespace {

double scale_of(const Matrix &m) { return std::max(1.0, m.cwiseAbs().maxCoeff()); }

} // namespace

DensityMatrix::DensityMatrix(FockBasis basis, Matrix elements)
    : basis_(basis), elements_(std::move(elements)) {
    const auto dim = static_cast<Eigen::Index>(basis_.dimension());
    if (elements_.rows() != dim || elements_.cols() != dim) {
        throw std::invalid_argument("density matrix shape does not match the basis dimension");
    }
    if (!elements_.allFinite()) {
        throw std::invalid_argument("density matrix contains non-finite entries");
    }
    if (hermiticity_error() > hermiticity_tolerance * scale_of(elements_)) {
        throw std::invalid_argument("density matrix is not Hermitian");
    }
    if (std::abs(elements_.trace() - Complex(1.0, 0.0)) > trace_tolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "density matrix trace " << elements_.trace().real() << " differs from 1";
        throw std::invalid_argument(msg.str());
    }
#ifndef NDEBUG
    if (!is_psd()) {
        throw std::invalid_argument("density matrix has a negative eigenvalue");
    }
#endif
}

DensityMatrix DensityMatrix::pure(FockBasis basis, const Vector &amplitudes) {
    if (static_cast<std::size_t>(amplitudes.size()) != basis.dimension()) {
        throw std::invalid_argument("state vector length does not match the basis dimension");
    }
    const double norm = amplitudes.norm();
    if (norm == 0.0) {
        throw std::invalid_argument("zero state vector");
    }
    const Vector psi = amplitudes / norm;
    return normalized(basis, psi * psi.adjoint());
}

DensityMatrix DensityMatrix::fock(FockBasis basis, int n1, int n2) {
    const auto dim = static_cast<Eigen::Index>(basis.dimension());
    Matrix m = Matrix::Zero(dim, dim);
    const auto k = static_cast<Eigen::Index>(basis.index(n1, n2));
    m(k, k) = 1.0;
    return DensityMatrix(basis, std::move(m));
}

DensityMatrix DensityMatrix::normalized(FockBasis basis, Matrix elements) {
    Matrix herm = 0.5 * (elements + elements.adjoint());
    const double tr = herm.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) {
        throw EngineError("cannot normalize a density matrix with non-positive trace");
    }
    herm /= tr;
    return DensityMatrix(basis, std::move(herm));
}

double DensityMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(elements_, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

double DensityMatrix::hermiticity_error() const {
    return (elements_ - elements_.adjoint()).cwiseAbs().maxCoeff();
}

RealVector DensityMatrix::marginal(Mode mode) const {
    RealVector probs = RealVector::Zero(basis_.n_max(mode) + 1);
    for (std::size_t k = 0; k < basis_.dimension(); ++k) {
        const auto s = basis_.state(k);
        probs(mode == Mode::one ? s.n1 : s.n2) += (*this)(k, k).real();
    }
    return probs;
}

RealMatrix single_mode_lowering(int n_max) {
    RealMatrix b = RealMatrix::Zero(n_max + 1, n_max + 1);
    for (int n = 1; n <= n_max; ++n) {
        b(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    return b;
}

LadderPair ladder_elements(Mode mode, const FockBasis &basis) {
    const auto dim = static_cast<Eigen::Index>(basis.dimension());
    RealMatrix lower = RealMatrix::Zero(dim, dim);
    for (std::size_t k = 0; k < basis.dimension(); ++k) {
        const auto s = basis.state(k);
        const int n = mode == Mode::one ? s.n1 : s.n2;
        if (n == 0) {
            continue;
        }
        const auto target = mode == Mode::one ? basis.index(s.n1 - 1, s.n2)
                                              : basis.index(s.n1, s.n2 - 1);
        lower(static_cast<Eigen::Index>(target), static_cast<Eigen::Index>(k)) =
            std::sqrt(static_cast<double>(n));
    }
    RealMatrix raise = lower.transpose();
    return {std::move(lower), std::move(raise)};
}

QuadraturePair quadratures(Mode mode, const FockBasis &basis) {
    const auto [b, bd] = ladder_elements(mode, basis);
    const double r = 1.0 / std::sqrt(2.0);
    Matrix x = (b + bd).cast<Complex>() * r;
    Matrix p = (bd - b).cast<Complex>() * Complex(0.0, r);
    return {std::move(x), std::move(p)};
}

double thermal_truncated_weight(double n_th, int n_max) {
    if (n_th <= 0.0) {
        return 0.0;
    }
    return std::pow(n_th / (1.0 + n_th), n_max + 1);
}

namespace {

RealVector bose_einstein(double n_th, int n_max) {
    RealVector w = RealVector::Zero(n_max + 1);
    if (n_th <= 0.0) {
        w(0) = 1.0;
        return w;
    }
    const double ratio = n_th / (1.0 + n_th);
    double term = 1.0 / (1.0 + n_th);
    for (int k = 0; k <= n_max; ++k) {
        w(k) = term;
        term *= ratio;
    }
    return w / w.sum();
}

} // namespace

DensityMatrix thermal_state(ThermalOccupancy n_th, const FockBasis &basis, TruncationCheck check,
                            std::vector<std::string> *warnings, double truncation_limit) {
    if (!(n_th.n1 >= 0.0) || !(n_th.n2 >= 0.0) || !std::isfinite(n_th.n1) ||
        !std::isfinite(n_th.n2)) {
        throw std::invalid_argument("thermal occupancy must be finite and non-negative");
    }
    for (const auto mode : {Mode::one, Mode::two}) {
        const double n = mode == Mode::one ? n_th.n1 : n_th.n2;
        const double lost = thermal_truncated_weight(n, basis.n_max(mode));
        if (lost > truncation_limit) {
            std::ostringstream msg;
            msg << "thermal state of mode " << static_cast<int>(mode) << " (n_th=" << n
                << ") loses weight " << lost << " beyond n_max=" << basis.n_max(mode);
            if (check == TruncationCheck::fail) {
                throw TruncationError(msg.str());
            }
            if (warnings != nullptr) {
                warnings->push_back(msg.str());
            }
        }
    }
    const RealVector w1 = bose_einstein(n_th.n1, basis.n1_max());
    const RealVector w2 = bose_einstein(n_th.n2, basis.n2_max());
    const auto dim = static_cast<Eigen::Index>(basis.dimension());
    Matrix m = Matrix::Zero(dim, dim);
    for (std::size_t k = 0; k < basis.dimension(); ++k) {
        const auto s = basis.state(k);
        m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = w1(s.n1) * w2(s.n2);
    }
    return DensityMatrix::normalized(basis, std::move(m));
}

double expected_occupancy(const DensityMatrix &rho, Mode mode) {
    const RealVector probs = rho.marginal(mode);
    double mean = 0.0;
    for (Eigen::Index n = 0; n < probs.size(); ++n) {
        mean += static_cast<double>(n) * probs(n);
    }
    return mean;
}

LeakageReport top_level_population(const DensityMatrix &rho) {
    const RealVector m1 = rho.marginal(Mode::one);
    const RealVector m2 = rho.marginal(Mode::two);
    return {m1(m1.size() - 1), m2(m2.size() - 1)};
}

void enforce_leakage(double leaked, const LeakagePolicy &policy, const std::string &context,
                     std::vector<std::string> *warnings) {
    if (leaked <= policy.warn) {
        return;
    }
    std::ostringstream msg;
    msg << context << ": truncation population " << leaked;
    if (leaked > policy.fail) {
        msg << " exceeds the failure threshold " << policy.fail << "; enlarge the Fock basis";
        throw TruncationError(msg.str());
    }
    msg << " exceeds the warning threshold " << policy.warn;
    if (warnings != nullptr) {
        warnings->push_back(msg.str());
    }
}

DensityMatrix embed(const DensityMatrix &rho, const FockBasis &target) {
    const auto &src = rho.basis();
    if (target.n1_max() < src.n1_max() || target.n2_max() < src.n2_max()) {
        throw std::invalid_argument("embed target basis must contain the source basis");
    }
    std::vector<Eigen::Index> map(src.dimension());
    for (std::size_t k = 0; k < src.dimension(); ++k) {
        map[k] = static_cast<Eigen::Index>(target.index(src.state(k)));
    }
    const auto dim = static_cast<Eigen::Index>(target.dimension());
    Matrix m = Matrix::Zero(dim, dim);
    for (std::size_t i = 0; i < src.dimension(); ++i) {
        for (std::size_t j = 0; j < src.dimension(); ++j) {
            m(map[i], map[j]) = rho(i, j);
        }
    }
    return DensityMatrix(target, std::move(m));
}

std::pair<DensityMatrix, double> crop(const DensityMatrix &rho, const FockBasis &target) {
    const auto &src = rho.basis();
    if (target.n1_max() > src.n1_max() || target.n2_max() > src.n2_max()) {
        throw std::invalid_argument("crop target basis must lie inside the source basis");
    }
    std::vector<Eigen::Index> map(target.dimension());
    for (std::size_t k = 0; k < target.dimension(); ++k) {
        map[k] = static_cast<Eigen::Index>(src.index(target.state(k)));
    }
    const auto dim = static_cast<Eigen::Index>(target.dimension());
    Matrix m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            m(i, j) = rho.elements()(map[static_cast<std::size_t>(i)],
                                     map[static_cast<std::size_t>(j)]);
        }
    }
    const double kept = m.trace().real();
    const double dropped = std::max(0.0, 1.0 - kept);
    return {DensityMatrix::normalized(target, std::move(m)), dropped};
}

} // namespace phonon
