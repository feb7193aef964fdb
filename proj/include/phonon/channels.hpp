#pragma once

#include "phonon/fock.hpp"

namespace phonon {

/// Heralded single-phonon preparation with multi-phonon and dark-count contamination.
struct HeraldModel {
    double p = 0.0;
    double dark = 0.0;
    int max_order = 3;

    bool operator==(const HeraldModel &) const = default;
    void validate() const;
};

/// normalize( sum_{k=1..max_order} p^(k-1) (b1^dag)^k rho (b1)^k + dark * rho ).
/// Raising operators carry their sqrt(n+1) factors; branches are mixed incoherently.
DensityMatrix heralded_excitation(const DensityMatrix &rho, const HeraldModel &model);

/// Real orthogonal beam-splitter matrix S(theta) = exp(theta (b1^dag b2 - b1 b2^dag)) on a
/// square basis, applied as rho' = S^T rho S. theta = pi/4 is the 50:50 splitter.
/// Number sectors that are complete in the basis use the closed binomial expansion; sectors
/// cut by the truncation use the exponential of the truncated generator.
/// Results are memoized per (basis, theta); lookups are safe from concurrent callers.
const RealMatrix &beam_splitter_matrix(double theta, const FockBasis &basis);

DensityMatrix apply_beam_splitter(const DensityMatrix &rho, double theta);

/// S_c = (1 - c) I + c (b1 + b2), the phonon-removal transform with c = Jc/J.
RealMatrix cooling_matrix(double jc_over_j, const FockBasis &basis);

/// rho' = normalize(S_c rho S_c^T). Removes phonons; the identity at c = 0.
DensityMatrix cooling_channel(const DensityMatrix &rho, double jc_over_j);

/// rho' = normalize(S_c^T rho S_c) with c = Jh/J. Adds phonons.
DensityMatrix heating_channel(const DensityMatrix &rho, double jh_over_j);

} // namespace phonon
