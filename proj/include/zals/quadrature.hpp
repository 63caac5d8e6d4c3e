#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace zals {

// The generator kernels are smooth in the interior but two of them have
// endpoint kinks at z = 0 (power-exponential with xi in (0,1]) and the
// tails range from power-law to double-exponential decay, so the scheme is
// split: tanh-sinh on finite intervals (double-exponential convergence even
// with endpoint singularities) and adaptive Gauss-Kronrod on half-infinite
// ones. Both paths throw when the certified error misses abs_tol.

template <class F>
double integrate_finite(F&& f, double a, double b, double abs_tol = 1e-10) {
    if (a == b) return 0.0;
    static thread_local boost::math::quadrature::tanh_sinh<double> ts;
    double rel_err = std::numeric_limits<double>::quiet_NaN();
    double l1 = std::numeric_limits<double>::quiet_NaN();
    std::size_t levels = 0;
    const double value =
        ts.integrate(std::forward<F>(f), a, b, 1e-12, &rel_err, &l1, &levels);
    if (!std::isfinite(value) || !(rel_err * std::max(l1, 1.0) <= abs_tol)) {
        throw std::runtime_error(
            "quadrature failed to reach the requested tolerance");
    }
    return value;
}

template <class F>
double integrate_half_line(F&& f, double a, double abs_tol = 1e-10) {
    using rule = boost::math::quadrature::gauss_kronrod<double, 15>;
    double err = std::numeric_limits<double>::quiet_NaN();
    const double value = rule::integrate(
        std::forward<F>(f), a, std::numeric_limits<double>::infinity(),
        /*max_depth=*/20, /*rel_tol=*/1e-12, &err);
    if (!std::isfinite(value) || !(err <= abs_tol)) {
        throw std::runtime_error(
            "quadrature failed to reach the requested tolerance");
    }
    return value;
}

template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-10) {
    if (std::isinf(b)) return integrate_half_line(std::forward<F>(f), a, abs_tol);
    return integrate_finite(std::forward<F>(f), a, b, abs_tol);
}

}  // namespace zals
