#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "quadrature.hpp"
#include "rng.hpp"

namespace zals {

// The four density-generator kernels of the log-symmetric family. Each
// choice of g turns eta * g(w^2) into a symmetric density on the real line;
// the distribution of log T is a location-scale version of that law.
enum class GeneratorFamily {
    log_normal,
    log_student_t,        // extra parameter xi > 0 (degrees of freedom)
    log_power_exponential,  // extra parameter xi in (-1, 1]
    extended_birnbaum_saunders  // extra parameter xi > 0 (shape)
};

struct GeneratorKind {
    GeneratorFamily family = GeneratorFamily::log_normal;
    double xi = 0.0;  // ignored for log_normal

    static GeneratorKind log_normal() { return {GeneratorFamily::log_normal, 0.0}; }

    static GeneratorKind log_student_t(double xi) {
        GeneratorKind k{GeneratorFamily::log_student_t, xi};
        k.validate();
        return k;
    }

    static GeneratorKind log_power_exponential(double xi) {
        GeneratorKind k{GeneratorFamily::log_power_exponential, xi};
        k.validate();
        return k;
    }

    static GeneratorKind extended_birnbaum_saunders(double xi) {
        GeneratorKind k{GeneratorFamily::extended_birnbaum_saunders, xi};
        k.validate();
        return k;
    }

    bool has_xi() const { return family != GeneratorFamily::log_normal; }

    void validate() const {
        switch (family) {
            case GeneratorFamily::log_normal:
                return;
            case GeneratorFamily::log_student_t:
                if (!(xi > 0.0) || !std::isfinite(xi))
                    throw std::invalid_argument(
                        "log-Student-t generator requires xi > 0");
                return;
            case GeneratorFamily::log_power_exponential:
                if (!(xi > -1.0) || !(xi <= 1.0) || !std::isfinite(xi))
                    throw std::invalid_argument(
                        "log-power-exponential generator requires xi in (-1, 1]");
                return;
            case GeneratorFamily::extended_birnbaum_saunders:
                if (!(xi > 0.0) || !std::isfinite(xi))
                    throw std::invalid_argument(
                        "extended Birnbaum-Saunders generator requires xi > 0");
                return;
        }
        throw std::invalid_argument("unknown generator family");
    }

    std::string name() const {
        switch (family) {
            case GeneratorFamily::log_normal: return "lognormal";
            case GeneratorFamily::log_student_t: return "logt";
            case GeneratorFamily::log_power_exponential: return "logpe";
            case GeneratorFamily::extended_birnbaum_saunders: return "ebs";
        }
        return "?";
    }
};

namespace detail {

inline constexpr double ln2 = 0.6931471805599453094;
inline constexpr double inv_sqrt_2pi = 0.3989422804014326779;

// log(cosh(x)) for x >= 0 without overflowing cosh.
inline double log_cosh(double x) {
    return x + std::log1p(std::exp(-2.0 * x)) - ln2;
}

}  // namespace detail

// Unnormalized kernel g(u), evaluated at u = w^2.
inline double log_kernel(const GeneratorKind& kind, double u);

inline double kernel(const GeneratorKind& kind, double u) {
    kind.validate();
    if (!(u >= 0.0))
        throw std::invalid_argument("kernel argument must satisfy u >= 0");
    if (std::isinf(u)) return 0.0;
    switch (kind.family) {
        case GeneratorFamily::log_normal:
            return std::exp(-0.5 * u);
        case GeneratorFamily::log_student_t:
            return std::pow(1.0 + u / kind.xi, -0.5 * (kind.xi + 1.0));
        case GeneratorFamily::log_power_exponential:
            return std::exp(-0.5 * std::pow(u, 1.0 / (1.0 + kind.xi)));
        case GeneratorFamily::extended_birnbaum_saunders: {
            const double x = std::sqrt(u);
            if (x > 20.0) return std::exp(log_kernel(kind, u));
            const double s = std::sinh(x);
            return std::cosh(x) *
                   std::exp(-(2.0 / (kind.xi * kind.xi)) * s * s);
        }
    }
    throw std::invalid_argument("unknown generator family");
}

// log g(u), stable for large u. The Birnbaum-Saunders branch keeps the
// sinh^2 term in exponent form so nothing overflows before the value itself
// leaves the double range.
inline double log_kernel(const GeneratorKind& kind, double u) {
    kind.validate();
    if (!(u >= 0.0))
        throw std::invalid_argument("log_kernel argument must satisfy u >= 0");
    if (std::isinf(u)) return -std::numeric_limits<double>::infinity();
    switch (kind.family) {
        case GeneratorFamily::log_normal:
            return -0.5 * u;
        case GeneratorFamily::log_student_t:
            return -0.5 * (kind.xi + 1.0) * std::log1p(u / kind.xi);
        case GeneratorFamily::log_power_exponential:
            return -0.5 * std::pow(u, 1.0 / (1.0 + kind.xi));
        case GeneratorFamily::extended_birnbaum_saunders: {
            const double x = std::sqrt(u);
            const double lc = detail::log_cosh(x);
            if (x < 20.0) {
                const double s = std::sinh(x);
                return lc - (2.0 / (kind.xi * kind.xi)) * s * s;
            }
            // sinh^2(x) = e^{2x}/4 to machine precision here; fold 2/xi^2
            // into the exponent. exp may overflow to inf, in which case the
            // true value lies below -DBL_MAX and -inf is the honest answer.
            const double log_term =
                2.0 * x - detail::ln2 - 2.0 * std::log(kind.xi);
            return lc - std::exp(log_term);
        }
    }
    throw std::invalid_argument("unknown generator family");
}

// Standardized symmetric law on the log scale: density eta * g(w^2), CDF G,
// quantile G^{-1}, and inverse-transform sampling. The normalizing constant
// eta is closed form for the normal and Student-t kernels and computed once
// by quadrature for the other two, then cached in the object.
class Generator {
  public:
    explicit Generator(GeneratorKind kind) : kind_(kind) {
        kind_.validate();
        normalizer_ = compute_normalizer();
        log_normalizer_ = std::log(normalizer_);
    }

    const GeneratorKind& kind() const { return kind_; }
    double normalizer() const { return normalizer_; }
    double log_normalizer() const { return log_normalizer_; }

    // Density of the standardized symmetric variable.
    double density(double w) const {
        return normalizer_ * kernel(kind_, w * w);
    }

    double log_density(double w) const {
        return log_normalizer_ + log_kernel(kind_, w * w);
    }

    // G(w) = eta * int_{-inf}^{w} g(z^2) dz.
    double cdf(double w) const {
        if (std::isnan(w)) throw std::invalid_argument("cdf of NaN");
        switch (kind_.family) {
            case GeneratorFamily::log_normal:
                return 0.5 * std::erfc(-w * 0.7071067811865475244);
            case GeneratorFamily::log_student_t: {
                const boost::math::students_t_distribution<double> st(kind_.xi);
                return boost::math::cdf(st, w);
            }
            default:
                return cdf_numeric(w);
        }
    }

    // G^{-1}(p) for p in (0,1); exactly 0 at p = 0.5 and antisymmetric in p
    // by construction.
    double quantile(double p) const {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("quantile level must lie in (0,1)");
        if (p == 0.5) return 0.0;
        switch (kind_.family) {
            case GeneratorFamily::log_normal: {
                const boost::math::normal_distribution<double> n01;
                return boost::math::quantile(n01, p);
            }
            case GeneratorFamily::log_student_t: {
                const boost::math::students_t_distribution<double> st(kind_.xi);
                return boost::math::quantile(st, p);
            }
            default:
                return p < 0.5 ? -quantile_numeric(1.0 - p)
                               : quantile_numeric(p);
        }
    }

    // Draw with law G via the inverse transform, one uniform per variate.
    double sample(Rng& rng) const { return quantile(rng.uniform()); }

  private:
    GeneratorKind kind_;
    double normalizer_ = 0.0;
    double log_normalizer_ = 0.0;

    double compute_normalizer() const {
        switch (kind_.family) {
            case GeneratorFamily::log_normal:
                return detail::inv_sqrt_2pi;
            case GeneratorFamily::log_student_t: {
                const double xi = kind_.xi;
                return std::exp(std::lgamma(0.5 * (xi + 1.0)) -
                                std::lgamma(0.5 * xi) -
                                0.5 * std::log(xi * M_PI));
            }
            default: {
                const GeneratorKind k = kind_;
                const double half = integrate(
                    [k](double z) { return kernel(k, z * z); }, 0.0,
                    std::numeric_limits<double>::infinity(), 1e-11);
                return 1.0 / (2.0 * half);
            }
        }
    }

    double cdf_numeric(double w) const {
        if (w == 0.0) return 0.5;
        const GeneratorKind k = kind_;
        const double mass = normalizer_ *
                            integrate([k](double z) { return kernel(k, z * z); },
                                      0.0, std::abs(w), 1e-11);
        const double p = w > 0.0 ? 0.5 + mass : 0.5 - mass;
        return std::clamp(p, 0.0, 1.0);
    }

    // Bracketed Newton/bisection hybrid on the CDF scale, p > 0.5.
    double quantile_numeric(double p) const {
        double lo = 0.0;
        double hi = 1.0;
        while (cdf(hi) < p) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e12)
                throw std::runtime_error("quantile bracket expansion failed");
        }
        double x = 0.5 * (lo + hi);
        for (int it = 0; it < 200; ++it) {
            const double resid = cdf(x) - p;
            if (std::abs(resid) <= 1e-11) return x;
            if (resid > 0.0)
                hi = x;
            else
                lo = x;
            const double dens = density(x);
            double next = dens > 0.0 ? x - resid / dens : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - x) < 1e-15 * (1.0 + std::abs(x)))
                return next;
            x = next;
        }
        throw std::runtime_error("quantile iteration did not converge");
    }
};

}  // namespace zals
