#include "phonon/channels.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <unsupported/Eigen/MatrixFunctions>

#include "phonon/error.hpp"

namespace phonon {

void HeraldModel::validate() const {
    if (!(p >= 0.0) || !std::isfinite(p)) {
        throw std::invalid_argument("herald p must be finite and >= 0");
    }
    if (!(dark >= 0.0) || !std::isfinite(dark)) {
        throw std::invalid_argument("herald dark weight must be finite and >= 0");
    }
    if (max_order < 1) {
        throw std::invalid_argument("herald max_order must be >= 1");
    }
}

DensityMatrix heralded_excitation(const DensityMatrix &rho, const HeraldModel &model) {
    model.validate();
    const auto &basis = rho.basis();
    if (basis.n1_max() < model.max_order) {
        std::ostringstream msg;
        msg << "herald max_order " << model.max_order << " needs n1_max >= " << model.max_order
            << " (basis has n1_max=" << basis.n1_max() << ")";
        throw std::invalid_argument(msg.str());
    }
    const Matrix raise = ladder_elements(Mode::one, basis).raising.cast<Complex>();
    Matrix out = model.dark * rho.elements();
    Matrix kraus = Matrix::Identity(rho.elements().rows(), rho.elements().cols());
    double weight = 1.0;
    for (int order = 1; order <= model.max_order; ++order) {
        kraus = raise * kraus;
        out += weight * (kraus * rho.elements() * kraus.adjoint());
        weight *= model.p;
    }
    if (!(out.trace().real() > 0.0)) {
        throw EngineError("herald branches carry zero weight for this input state");
    }
    return DensityMatrix::normalized(basis, std::move(out));
}

namespace {

double factorial(int n) { return std::tgamma(static_cast<double>(n) + 1.0); }

double binomial(int n, int k) {
    return std::round(factorial(n) / (factorial(k) * factorial(n - k)));
}

// Column (n1, n2) of exp(theta G): (c b1^dag - s b2^dag)^n1 (s b1^dag + c b2^dag)^n2 |00>
// / sqrt(n1! n2!), expanded binomially.
void fill_complete_sector(RealMatrix &s_mat, const FockBasis &basis, int total, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (int n1 = 0; n1 <= total; ++n1) {
        const int n2 = total - n1;
        const auto col = static_cast<Eigen::Index>(basis.index(n1, n2));
        const double norm_in = std::sqrt(factorial(n1) * factorial(n2));
        for (int i = 0; i <= n1; ++i) {
            for (int j = 0; j <= n2; ++j) {
                const int m1 = i + j;
                const int m2 = total - m1;
                const double coeff = binomial(n1, i) * binomial(n2, j) *
                                     std::pow(c, i + n2 - j) * std::pow(-s, n1 - i) *
                                     std::pow(s, j);
                const double norm_out = std::sqrt(factorial(m1) * factorial(m2));
                const auto row = static_cast<Eigen::Index>(basis.index(m1, m2));
                s_mat(row, col) += coeff * norm_out / norm_in;
            }
        }
    }
}

void fill_truncated_sector(RealMatrix &s_mat, const FockBasis &basis, int total, double theta) {
    const int n = basis.n1_max();
    const int lo = total - n;
    const int count = 2 * n - total + 1;
    RealMatrix gen = RealMatrix::Zero(count, count);
    for (int a = 0; a < count; ++a) {
        const int n1 = lo + a;
        const int n2 = total - n1;
        if (a + 1 < count) {
            // b1^dag b2 |n1, n2> = sqrt((n1 + 1) n2) |n1 + 1, n2 - 1>
            const double amp = std::sqrt(static_cast<double>((n1 + 1) * n2));
            gen(a + 1, a) += amp;
            gen(a, a + 1) -= amp;
        }
    }
    const RealMatrix block = (theta * gen).exp();
    for (int a = 0; a < count; ++a) {
        for (int b = 0; b < count; ++b) {
            const auto row = static_cast<Eigen::Index>(basis.index(lo + a, total - lo - a));
            const auto col = static_cast<Eigen::Index>(basis.index(lo + b, total - lo - b));
            s_mat(row, col) = block(a, b);
        }
    }
}

RealMatrix build_beam_splitter(double theta, const FockBasis &basis) {
    if (!basis.is_square()) {
        std::ostringstream msg;
        msg << "beam splitter needs n1_max == n2_max: it mixes states of equal total phonon "
               "number, and a rectangular truncation cuts those sectors unevenly (basis "
            << basis.n1_max() << "," << basis.n2_max() << ")";
        throw std::invalid_argument(msg.str());
    }
    const int n = basis.n1_max();
    const auto dim = static_cast<Eigen::Index>(basis.dimension());
    RealMatrix s_mat = RealMatrix::Zero(dim, dim);
    for (int total = 0; total <= 2 * n; ++total) {
        if (total <= n) {
            fill_complete_sector(s_mat, basis, total, theta);
        } else {
            fill_truncated_sector(s_mat, basis, total, theta);
        }
    }
    return s_mat;
}

class BeamSplitterCache {
public:
    const RealMatrix &get(double theta, const FockBasis &basis) {
        const Key key{basis.n1_max(), basis.n2_max(), theta};
        {
            std::shared_lock lock(mutex_);
            if (auto it = cache_.find(key); it != cache_.end()) {
                return *it->second;
            }
        }
        auto built = std::make_unique<RealMatrix>(build_beam_splitter(theta, basis));
        std::unique_lock lock(mutex_);
        auto [it, inserted] = cache_.try_emplace(key, std::move(built));
        return *it->second;
    }

private:
    using Key = std::tuple<int, int, double>;
    std::shared_mutex mutex_;
    std::map<Key, std::unique_ptr<RealMatrix>> cache_;
};

BeamSplitterCache &cache() {
    static BeamSplitterCache instance;
    return instance;
}

DensityMatrix apply_kraus(const DensityMatrix &rho, const RealMatrix &kraus) {
    const Matrix k = kraus.cast<Complex>();
    return DensityMatrix::normalized(rho.basis(), k * rho.elements() * k.adjoint());
}

void require_rate_ratio(double c, const char *name) {
    if (!(c >= 0.0 && c <= 1.0)) {
        std::ostringstream msg;
        msg << name << " = " << c << " is outside [0, 1]; the channel is a probabilistic mix of "
            << "identity and phonon transfer";
        throw std::invalid_argument(msg.str());
    }
}

} // namespace

const RealMatrix &beam_splitter_matrix(double theta, const FockBasis &basis) {
    return cache().get(theta, basis);
}

DensityMatrix apply_beam_splitter(const DensityMatrix &rho, double theta) {
    const RealMatrix &s = beam_splitter_matrix(theta, rho.basis());
    const Matrix sc = s.cast<Complex>();
    return DensityMatrix::normalized(rho.basis(), sc.transpose() * rho.elements() * sc);
}

RealMatrix cooling_matrix(double jc_over_j, const FockBasis &basis) {
    require_rate_ratio(jc_over_j, "jc_over_j");
    const auto l1 = ladder_elements(Mode::one, basis).lowering;
    const auto l2 = ladder_elements(Mode::two, basis).lowering;
    const auto dim = static_cast<Eigen::Index>(basis.dimension());
    return (1.0 - jc_over_j) * RealMatrix::Identity(dim, dim) + jc_over_j * (l1 + l2);
}

DensityMatrix cooling_channel(const DensityMatrix &rho, double jc_over_j) {
    if (jc_over_j == 0.0) {
        return rho;
    }
    return apply_kraus(rho, cooling_matrix(jc_over_j, rho.basis()));
}

DensityMatrix heating_channel(const DensityMatrix &rho, double jh_over_j) {
    if (jh_over_j == 0.0) {
        return rho;
    }
    require_rate_ratio(jh_over_j, "jh_over_j");
    return apply_kraus(rho, cooling_matrix(jh_over_j, rho.basis()).transpose());
}

} // namespace phonon
