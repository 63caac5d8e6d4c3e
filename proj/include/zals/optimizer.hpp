#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace zals {

// Objective to be MAXIMIZED. Evaluations may return -inf (or NaN) outside
// the feasible exploration region; the line search treats such points as
// rejections rather than errors.
using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;

enum class StopReason {
    gradient_tolerance,
    objective_change,
    max_iterations,
    line_search_failure
};

struct OptimOptions {
    double grad_tol = 1e-6;       // sup-norm of the FD gradient
    double rel_obj_tol = 1e-10;   // relative change of the objective
    int max_iterations = 500;
    int max_backtracks = 60;
    double armijo_c1 = 1e-4;
    double backtrack_factor = 0.5;
    bool compute_hessian = true;  // observed information at the optimum
    // Called after every accepted step with (iteration, x, f(x)).
    std::function<void(int, const Eigen::VectorXd&, double)> on_iterate;
};

struct OptimResult {
    Eigen::VectorXd argmax;
    double value = -std::numeric_limits<double>::infinity();
    double gradient_norm = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    bool converged = false;
    StopReason stop_reason = StopReason::max_iterations;
    // Hessian of the NEGATED objective at argmax (the observed information
    // when the objective is a log-likelihood); invert for the covariance.
    bool hessian_available = false;
    Eigen::MatrixXd neg_hessian;
};

// Central differences, step h_j = max(1e-7, 1e-7 |x_j|). Non-finite
// evaluations propagate so the caller sees the sentinel.
inline Eigen::VectorXd gradient_fd(const ObjectiveFn& f,
                                   const Eigen::VectorXd& x) {
    const auto k = x.size();
    Eigen::VectorXd g(k);
    Eigen::VectorXd xp = x;
    for (Eigen::Index j = 0; j < k; ++j) {
        const double h = std::max(1e-7, 1e-7 * std::abs(x[j]));
        const double old = x[j];
        xp[j] = old + h;
        const double fp = f(xp);
        xp[j] = old - h;
        const double fm = f(xp);
        xp[j] = old;
        g[j] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Central second differences; step eps^{1/4} scaled per coordinate. With
// symmetrize the result is (H + H^T)/2, otherwise every entry is returned
// as computed, which lets callers measure the raw asymmetry.
inline Eigen::MatrixXd hessian_fd(const ObjectiveFn& f,
                                  const Eigen::VectorXd& x,
                                  bool symmetrize = true) {
    const auto k = x.size();
    const double base = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
    Eigen::VectorXd h(k);
    for (Eigen::Index j = 0; j < k; ++j)
        h[j] = base * std::max(1.0, std::abs(x[j]));

    Eigen::MatrixXd H(k, k);
    const double f0 = f(x);
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            if (i == j) {
                xp[i] = x[i] + h[i];
                const double fp = f(xp);
                xp[i] = x[i] - h[i];
                const double fm = f(xp);
                xp[i] = x[i];
                H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
            } else {
                const double xi = x[i], xj = x[j];
                xp[i] = xi + h[i]; xp[j] = xj + h[j];
                const double fpp = f(xp);
                xp[j] = xj - h[j];
                const double fpm = f(xp);
                xp[i] = xi - h[i]; xp[j] = xj + h[j];
                const double fmp = f(xp);
                xp[j] = xj - h[j];
                const double fmm = f(xp);
                xp[i] = xi; xp[j] = xj;
                H(i, j) = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            }
        }
    }
    if (symmetrize) H = 0.5 * (H + H.transpose()).eval();
    return H;
}

// BFGS ascent with inverse-Hessian updates and a backtracking Armijo line
// search. The initial inverse Hessian is the identity scaled by
// 1/(1 + |grad|); updates with y's <= 1e-10 are skipped to preserve
// positive definiteness.
inline OptimResult maximize(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                            const OptimOptions& opts = {}) {
    const auto k = x0.size();
    OptimResult res;
    res.argmax = x0;

    double fx = f(x0);
    if (!std::isfinite(fx))
        throw std::invalid_argument("objective is not finite at the start point");
    Eigen::VectorXd x = x0;
    Eigen::VectorXd g = gradient_fd(f, x);

    Eigen::MatrixXd Hinv =
        Eigen::MatrixXd::Identity(k, k) / (1.0 + g.norm());
    bool scaled_once = false;

    const auto finish = [&](StopReason reason) {
        res.argmax = x;
        res.value = fx;
        res.gradient_norm = g.lpNorm<Eigen::Infinity>();
        res.stop_reason = reason;
        res.converged = reason == StopReason::gradient_tolerance ||
                        reason == StopReason::objective_change;
        if (opts.compute_hessian) {
            res.neg_hessian = -hessian_fd(f, x);
            res.hessian_available = res.neg_hessian.allFinite();
        }
        return res;
    };

    for (int it = 1; it <= opts.max_iterations; ++it) {
        if (g.lpNorm<Eigen::Infinity>() < opts.grad_tol)
            return finish(StopReason::gradient_tolerance);

        Eigen::VectorXd p = Hinv * g;  // ascent direction
        double slope = g.dot(p);
        if (!(slope > 0.0)) {
            // Curvature information went bad; restart from scaled identity.
            Hinv = Eigen::MatrixXd::Identity(k, k) / (1.0 + g.norm());
            p = Hinv * g;
            slope = g.dot(p);
        }

        double alpha = 1.0;
        double fnew = -std::numeric_limits<double>::infinity();
        Eigen::VectorXd xnew;
        bool accepted = false;
        for (int bt = 0; bt < opts.max_backtracks; ++bt) {
            xnew = x + alpha * p;
            fnew = f(xnew);
            if (std::isfinite(fnew) &&
                fnew >= fx + opts.armijo_c1 * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= opts.backtrack_factor;
        }
        if (!accepted) return finish(StopReason::line_search_failure);

        const Eigen::VectorXd gnew = gradient_fd(f, xnew);
        const Eigen::VectorXd s = xnew - x;
        const Eigen::VectorXd y = gnew - g;
        const double obj_change = std::abs(fnew - fx);
        const double obj_scale = std::abs(fx) + opts.rel_obj_tol;

        x = xnew;
        fx = fnew;
        g = gnew;
        res.iterations = it;
        if (opts.on_iterate) opts.on_iterate(it, x, fx);

        if (obj_change < opts.rel_obj_tol * obj_scale)
            return finish(StopReason::objective_change);

        // Inverse update in ascent form: curvature requires y's < 0 after
        // negation, i.e. s'y <= -eps for the minimization of -f. Working
        // with ymin = -y keeps the textbook formulas.
        const Eigen::VectorXd ymin = -y;
        const double ys = ymin.dot(s);
        if (ys > 1e-10) {
            if (!scaled_once) {
                // Rescale the base matrix to the curvature of the first
                // accepted pair before the first update (Nocedal & Wright
                // eq. 6.20); without it quadratics crawl.
                Hinv = (ys / ymin.squaredNorm()) *
                       Eigen::MatrixXd::Identity(k, k);
                scaled_once = true;
            }
            const double rho = 1.0 / ys;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
            const Eigen::MatrixXd V = I - rho * s * ymin.transpose();
            Hinv = (V * Hinv * V.transpose() + rho * s * s.transpose()).eval();
        }
    }
    return finish(StopReason::max_iterations);
}

}  // namespace zals
