#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include "generators.hpp"
#include "rng.hpp"

namespace zals {

// Positive continuous distribution whose scale parameter is, by
// construction, the q_level-quantile: T = Q * eps^{sqrt(phi)} with eps the
// standardized log-symmetric variable. Internally the classical scale
// lambda = Q * exp(-sqrt(phi) * z_p) is kept in log form, where
// z_p = G^{-1}(q_level).
class QuantileLS {
  public:
    QuantileLS(double q_level, double scale_q, double phi, Generator gen)
        : QuantileLS(q_level, scale_q, phi, std::move(gen), std::nullopt) {}

    // Fast path for callers that already hold z_p for (gen, q_level); the
    // per-row likelihood loop constructs thousands of these.
    QuantileLS(double q_level, double scale_q, double phi, Generator gen,
               double z_p)
        : QuantileLS(q_level, scale_q, phi, std::move(gen),
                     std::optional<double>(z_p)) {}

    double q_level() const { return q_level_; }
    double scale_q() const { return scale_q_; }
    double phi() const { return phi_; }
    double z_p() const { return z_p_; }
    double log_lambda() const { return log_lambda_; }
    const Generator& generator() const { return gen_; }

    double pdf(double t) const {
        require_positive(t);
        const double w = standardized(t);
        return gen_.density(w) / (sqrt_phi_ * t);
    }

    double log_pdf(double t) const {
        require_positive(t);
        const double w = standardized(t);
        return gen_.log_density(w) - 0.5 * std::log(phi_) - std::log(t);
    }

    double cdf(double t) const {
        require_positive(t);
        return gen_.cdf(standardized(t));
    }

    double quantile(double p) const {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("quantile level must lie in (0,1)");
        return std::exp(log_lambda_ + sqrt_phi_ * gen_.quantile(p));
    }

    double sample(Rng& rng) const {
        return std::exp(log_lambda_ + sqrt_phi_ * gen_.sample(rng));
    }

  private:
    QuantileLS(double q_level, double scale_q, double phi, Generator gen,
               std::optional<double> z_p)
        : q_level_(q_level),
          scale_q_(scale_q),
          phi_(phi),
          gen_(std::move(gen)) {
        if (!(q_level > 0.0 && q_level < 1.0))
            throw std::invalid_argument("q_level must lie in (0,1)");
        if (!(scale_q > 0.0) || !std::isfinite(scale_q))
            throw std::invalid_argument("quantile scale Q must be positive");
        if (!(phi > 0.0) || !std::isfinite(phi))
            throw std::invalid_argument("dispersion phi must be positive");
        sqrt_phi_ = std::sqrt(phi_);
        z_p_ = z_p ? *z_p : gen_.quantile(q_level_);
        log_lambda_ = std::log(scale_q_) - sqrt_phi_ * z_p_;
    }

    static void require_positive(double t) {
        if (!(t > 0.0))
            throw std::invalid_argument("argument must be positive");
    }

    double standardized(double t) const {
        return (std::log(t) - log_lambda_) / sqrt_phi_;
    }

    double q_level_;
    double scale_q_;
    double phi_;
    double sqrt_phi_ = 0.0;
    double z_p_ = 0.0;
    double log_lambda_ = 0.0;
    Generator gen_;
};

// Zero-adjusted mixture: point mass pi at zero, weight 1-pi on a QuantileLS
// law. pi is kept strictly interior to (0,1); the logit link never reaches
// the boundary and l1 would lose its finite logs there.
class Zals {
  public:
    Zals(double pi, QuantileLS positive)
        : pi_(pi), positive_(std::move(positive)) {
        if (!(pi > 0.0 && pi < 1.0))
            throw std::invalid_argument("zero-mass weight pi must lie in (0,1)");
    }

    double pi() const { return pi_; }
    const QuantileLS& positive_part() const { return positive_; }

    // Probability mass pi at z = 0, density (1-pi) f_T(z) for z > 0. The two
    // branches live on different measures; the likelihood multiplies them
    // directly.
    double density_or_mass(double z) const {
        if (!(z >= 0.0))
            throw std::invalid_argument("argument must be nonnegative");
        if (z == 0.0) return pi_;
        return (1.0 - pi_) * positive_.pdf(z);
    }

    double cdf(double z) const {
        if (!(z >= 0.0))
            throw std::invalid_argument("argument must be nonnegative");
        if (z == 0.0) return pi_;
        return pi_ + (1.0 - pi_) * positive_.cdf(z);
    }

    double quantile(double p) const {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("quantile level must lie in (0,1)");
        if (p <= pi_) return 0.0;
        return positive_.quantile((p - pi_) / (1.0 - pi_));
    }

    // Inverse transform through the mixture quantile; one uniform per draw.
    double sample(Rng& rng) const { return quantile(rng.uniform()); }

  private:
    double pi_;
    QuantileLS positive_;
};

}  // namespace zals
