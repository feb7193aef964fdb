#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "phonon/error.hpp"
#include "phonon/protocol.hpp"

namespace phonon {

namespace {

struct Problem {
    const ReadoutTrace &trace;
    double dw;
    double lo;  // bounds on ln tau
    double hi;

    double cost(const Eigen::Vector2d &u, Eigen::VectorXd *res, Eigen::MatrixX2d *jac) const {
        const auto n = static_cast<Eigen::Index>(trace.size());
        const double tau_d = std::exp(u(0));
        const double tau_th = std::exp(u(1));
        const double eta = trace.eta;
        const double th = trace.n_env - 0.5;
        if (res) {
            res->resize(n);
        }
        if (jac) {
            jac->resize(n, 2);
        }
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t = trace.tau[static_cast<std::size_t>(i)];
            const double c = std::cos(dw * t);
            const double ed = std::exp(-t / tau_d);
            const double et = std::exp(-t / tau_th);
            const double model = eta * (0.5 - 0.5 * c * ed + th * (1.0 - et));
            const double r = model - trace.R[static_cast<std::size_t>(i)];
            sum += r * r;
            if (res) {
                (*res)(i) = r;
            }
            if (jac) {
                // d/d ln(tau) = tau d/d tau
                (*jac)(i, 0) = -0.5 * eta * c * ed * t / tau_d;
                (*jac)(i, 1) = -eta * th * et * t / tau_th;
            }
        }
        return sum;
    }
};

struct Attempt {
    Eigen::Vector2d u;
    double cost = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
};

Attempt levenberg_marquardt(const Problem &prob, Eigen::Vector2d u) {
    Attempt out;
    Eigen::VectorXd res;
    Eigen::MatrixX2d jac;
    double cost = prob.cost(u, &res, &jac);
    double lambda = 1e-3;
    constexpr int max_iter = 400;
    for (int it = 1; it <= max_iter; ++it) {
        out.iterations = it;
        const Eigen::Matrix2d jtj = jac.transpose() * jac;
        const Eigen::Vector2d grad = jac.transpose() * res;
        if (grad.norm() <= 1e-14 * (1.0 + cost)) {
            out.converged = true;
            break;
        }
        const double floor = 1e-12 * std::max(jtj.diagonal().maxCoeff(), 1e-300);
        bool improved = false;
        while (lambda < 1e16) {
            Eigen::Matrix2d a = jtj;
            for (int k = 0; k < 2; ++k) {
                a(k, k) += lambda * std::max(jtj(k, k), floor);
            }
            Eigen::Vector2d step = -a.ldlt().solve(grad);
            Eigen::Vector2d trial = (u + step).cwiseMax(prob.lo).cwiseMin(prob.hi);
            const double trial_cost = prob.cost(trial, nullptr, nullptr);
            if (trial_cost < cost) {
                const double drop = cost - trial_cost;
                const double moved = (trial - u).norm();
                u = trial;
                cost = prob.cost(u, &res, &jac);
                lambda = std::max(lambda / 3.0, 1e-12);
                improved = true;
                if (drop <= 1e-15 * cost + 1e-300 || moved < 1e-12) {
                    out.converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if (!improved) {
            // No descent direction left: at a (possibly bounded) minimum.
            out.converged = true;
            break;
        }
        if (out.converged) {
            break;
        }
    }
    out.u = u;
    out.cost = cost;
    return out;
}

} // namespace

DecayFit fit_decay(const ReadoutTrace &trace) {
    if (trace.size() < 4 || trace.R.size() != trace.size()) {
        throw FitError("fit needs at least 4 consistent trace samples");
    }
    if (!(trace.eta > 0.0)) {
        throw FitError("fit needs eta > 0");
    }
    const double window = trace.tau.back() - trace.tau.front();
    const double t_end = trace.tau.back();
    if (!(window > 0.0)) {
        throw FitError("trace window has zero length");
    }
    const Problem prob{trace, constants::two_pi * trace.beat_hz, std::log(window * 1e-6),
                       std::log(window * 1e8)};

    Attempt best;
    for (double sd : {0.1, 1.0, 10.0}) {
        for (double st : {0.1, 1.0, 10.0}) {
            const Eigen::Vector2d start(std::log(sd * window), std::log(st * window));
            Attempt a = levenberg_marquardt(prob, start);
            const bool better = (a.converged && !best.converged) ||
                                (a.converged == best.converged && a.cost < best.cost);
            if (better) {
                best = a;
            }
        }
    }

    DecayFit fit;
    fit.tau_d = std::exp(best.u(0));
    fit.tau_th = std::exp(best.u(1));
    fit.tau_d_lower_bound = fit.tau_d > t_end;
    fit.tau_th_lower_bound = fit.tau_th > t_end;
    fit.residual_norm = std::sqrt(best.cost);
    fit.rms_over_eta = std::sqrt(best.cost / static_cast<double>(trace.size())) / trace.eta;
    fit.converged = best.converged;
    fit.iterations = best.iterations;
    std::ostringstream msg;
    if (!fit.converged) {
        msg << "fit did not converge after " << fit.iterations << " iterations";
    } else {
        msg << "converged";
        if (fit.tau_d_lower_bound) {
            msg << "; tau_d exceeds the sampled window (lower bound)";
        }
        if (fit.tau_th_lower_bound) {
            msg << "; tau_th exceeds the sampled window (lower bound)";
        }
    }
    fit.message = msg.str();
    return fit;
}

} // namespace phonon
