#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "distributions.hpp"
#include "optimizer.hpp"
#include "parallel.hpp"

namespace zals {

// ---------------------------------------------------------------------------
// Links
// ---------------------------------------------------------------------------

// Logistic function, sign-split so it neither overflows nor underflows to
// exactly 0/1 for |x| up to ~745.
inline double logistic(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(logistic(x)), finite for the whole double range.
inline double log_logistic(double x) {
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

inline double logit(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("logit argument must lie in (0,1)");
    return std::log(p) - std::log1p(-p);
}

inline double dot_checked(const Eigen::RowVectorXd& row,
                          const Eigen::VectorXd& coef, const char* what) {
    if (row.size() != coef.size())
        throw std::invalid_argument(std::string("dimension mismatch in ") + what);
    return row.dot(coef);
}

inline double link_quantile(const Eigen::RowVectorXd& x_row,
                            const Eigen::VectorXd& beta) {
    return std::exp(dot_checked(x_row, beta, "quantile link"));
}

inline double link_dispersion(const Eigen::RowVectorXd& w_row,
                              const Eigen::VectorXd& kappa) {
    return std::exp(dot_checked(w_row, kappa, "dispersion link"));
}

inline double link_zero_prob(const Eigen::RowVectorXd& v_row,
                             const Eigen::VectorXd& eta) {
    return logistic(dot_checked(v_row, eta, "zero-probability link"));
}

// ---------------------------------------------------------------------------
// Model specification
// ---------------------------------------------------------------------------

// Data plus structure for one fit: the generator, the modeled quantile
// level, the three design matrices (intercept column first) and the
// nonnegative response. Construction validates shapes, the response sign
// and full column rank of every design matrix.
class ModelSpec {
  public:
    ModelSpec(GeneratorKind kind, double q_level, Eigen::MatrixXd X,
              Eigen::MatrixXd W, Eigen::MatrixXd V, Eigen::VectorXd z)
        : kind_(kind),
          q_level_(q_level),
          X_(std::move(X)),
          W_(std::move(W)),
          V_(std::move(V)),
          z_(std::move(z)),
          gen_(kind) {
        validate();
        finish_setup();
    }

    const GeneratorKind& kind() const { return kind_; }
    double q_level() const { return q_level_; }
    const Eigen::MatrixXd& X() const { return X_; }
    const Eigen::MatrixXd& W() const { return W_; }
    const Eigen::MatrixXd& V() const { return V_; }
    const Eigen::VectorXd& z() const { return z_; }
    const Generator& generator() const { return gen_; }
    double z_p() const { return z_p_; }

    Eigen::Index n() const { return z_.size(); }
    Eigen::Index n_zero() const { return n_zero_; }
    Eigen::Index n_positive() const { return n() - n_zero_; }
    bool is_zero(Eigen::Index i) const { return z_[i] == 0.0; }
    double log_z(Eigen::Index i) const { return log_z_[i]; }

    // Same data and generator at another quantile level; used by the
    // q-sweep. Skips re-validation, only z_p changes.
    ModelSpec with_q_level(double q_level) const {
        ModelSpec copy(*this);
        if (!(q_level > 0.0 && q_level < 1.0))
            throw std::invalid_argument("q_level must lie in (0,1)");
        copy.q_level_ = q_level;
        copy.z_p_ = copy.gen_.quantile(q_level);
        return copy;
    }

  private:
    void validate() const {
        if (!(q_level_ > 0.0 && q_level_ < 1.0))
            throw std::invalid_argument("q_level must lie in (0,1)");
        const Eigen::Index n = z_.size();
        if (n == 0) throw std::invalid_argument("empty response");
        if (X_.rows() != n || W_.rows() != n || V_.rows() != n)
            throw std::invalid_argument(
                "design matrices and response must have the same number of rows");
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!std::isfinite(z_[i]))
                throw std::invalid_argument("response is not finite at row " +
                                            std::to_string(i + 1));
            if (z_[i] < 0.0)
                throw std::invalid_argument(
                    "response must be nonnegative (row " + std::to_string(i + 1) +
                    ")");
        }
        check_rank(X_, "quantile");
        check_rank(W_, "dispersion");
        check_rank(V_, "zero-probability");
    }

    static void check_rank(const Eigen::MatrixXd& m, const char* which) {
        if (m.cols() == 0)
            throw std::invalid_argument(std::string(which) +
                                        " design matrix has no columns");
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
        if (qr.rank() < m.cols())
            throw std::invalid_argument(std::string(which) +
                                        " design matrix is rank deficient");
    }

    void finish_setup() {
        n_zero_ = 0;
        log_z_.resize(z_.size());
        for (Eigen::Index i = 0; i < z_.size(); ++i) {
            if (z_[i] == 0.0) {
                ++n_zero_;
                log_z_[i] = std::numeric_limits<double>::quiet_NaN();
            } else {
                log_z_[i] = std::log(z_[i]);
            }
        }
        z_p_ = gen_.quantile(q_level_);
    }

    GeneratorKind kind_;
    double q_level_;
    Eigen::MatrixXd X_, W_, V_;
    Eigen::VectorXd z_;
    Generator gen_;
    Eigen::VectorXd log_z_;
    Eigen::Index n_zero_ = 0;
    double z_p_ = 0.0;
};

struct Coefficients {
    Eigen::VectorXd beta;   // quantile block
    Eigen::VectorXd kappa;  // dispersion block
    Eigen::VectorXd eta;    // zero-probability block
};

// ---------------------------------------------------------------------------
// Log-likelihood, factorized
// ---------------------------------------------------------------------------

// l1: Bernoulli log-likelihood of the zero indicator under the logit link.
// Identical to a standalone logistic regression with response 1{z_i = 0}.
inline double loglik_zero_part(const ModelSpec& spec,
                               const Eigen::VectorXd& eta) {
    if (eta.size() != spec.V().cols())
        throw std::invalid_argument("eta has the wrong dimension");
    const Eigen::VectorXd lp = spec.V() * eta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < spec.n(); ++i)
        ll += spec.is_zero(i) ? log_logistic(lp[i]) : log_logistic(-lp[i]);
    return ll;
}

// l2: sum of the positive-part log-densities over rows with z_i > 0, with
// per-row Q_i = exp(x_i beta) and phi_i = exp(w_i kappa). Zero rows
// contribute nothing. Non-finite evaluations collapse to -inf, which the
// line search treats as a rejected point.
inline double loglik_positive_part(const ModelSpec& spec,
                                   const Eigen::VectorXd& beta,
                                   const Eigen::VectorXd& kappa) {
    if (beta.size() != spec.X().cols())
        throw std::invalid_argument("beta has the wrong dimension");
    if (kappa.size() != spec.W().cols())
        throw std::invalid_argument("kappa has the wrong dimension");
    const Eigen::VectorXd lq = spec.X() * beta;
    const Eigen::VectorXd lphi = spec.W() * kappa;
    const Generator& gen = spec.generator();
    const double z_p = spec.z_p();

    double ll = 0.0;
    for (Eigen::Index i = 0; i < spec.n(); ++i) {
        if (spec.is_zero(i)) continue;
        const double sqrt_phi = std::exp(0.5 * lphi[i]);
        const double w = (spec.log_z(i) - lq[i]) / sqrt_phi + z_p;
        ll += gen.log_normalizer() + log_kernel(gen.kind(), w * w) -
              0.5 * lphi[i] - spec.log_z(i);
    }
    if (!std::isfinite(ll)) return -std::numeric_limits<double>::infinity();
    return ll;
}

// ---------------------------------------------------------------------------
// Starting values
// ---------------------------------------------------------------------------

// eta: zero vector with the intercept at logit of the clipped zero
// fraction. beta/kappa: least squares of log z on X over the positive rows;
// the residual variance seeds the dispersion intercept and the beta
// intercept is moved from the location scale to the quantile scale by
// + sqrt(phi0) * z_p.
inline Coefficients initial_values(const ModelSpec& spec) {
    Coefficients c;
    const double n = static_cast<double>(spec.n());

    c.eta = Eigen::VectorXd::Zero(spec.V().cols());
    const double frac =
        std::clamp(static_cast<double>(spec.n_zero()) / n, 1.0 / n, 1.0 - 1.0 / n);
    c.eta[0] = logit(frac);

    const Eigen::Index n_pos = spec.n_positive();
    if (n_pos < spec.X().cols())
        throw std::invalid_argument(
            "fewer positive observations than quantile design columns");

    Eigen::MatrixXd Xp(n_pos, spec.X().cols());
    Eigen::VectorXd y(n_pos);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < spec.n(); ++i) {
        if (spec.is_zero(i)) continue;
        Xp.row(r) = spec.X().row(i);
        y[r] = spec.log_z(i);
        ++r;
    }
    c.beta = Xp.colPivHouseholderQr().solve(y);
    const double ss = (y - Xp * c.beta).squaredNorm();
    const double phi0 = std::max(ss / static_cast<double>(n_pos), 1e-8);

    c.kappa = Eigen::VectorXd::Zero(spec.W().cols());
    c.kappa[0] = std::log(phi0);
    c.beta[0] += std::sqrt(phi0) * spec.z_p();
    return c;
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

struct FitOptions {
    OptimOptions optim;
};

struct FittedModel {
    std::shared_ptr<const ModelSpec> spec;

    Eigen::VectorXd beta, kappa, eta;
    Eigen::VectorXd se_beta, se_kappa, se_eta;

    bool zero_block_fitted = false;
    bool continuous_block_fitted = false;
    bool zero_converged = false;
    bool continuous_converged = false;
    bool zero_se_available = false;
    bool continuous_se_available = false;

    double loglik_zero = 0.0;
    double loglik_positive = 0.0;
    double loglik_total = 0.0;
    int n_params = 0;
    double aic = std::numeric_limits<double>::quiet_NaN();
    double bic = std::numeric_limits<double>::quiet_NaN();

    // True when every block that was fitted converged.
    bool converged() const {
        return (!zero_block_fitted || zero_converged) &&
               (!continuous_block_fitted || continuous_converged);
    }
};

namespace detail {

// Standard errors from the observed information of one likelihood factor;
// the factorization makes the full information block diagonal, so each
// block is inverted on its own.
inline bool block_se(const Eigen::MatrixXd& neg_hessian, Eigen::VectorXd& se) {
    const Eigen::Index k = neg_hessian.rows();
    se = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
    if (!neg_hessian.allFinite()) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(neg_hessian);
    if (llt.info() != Eigen::Success) return false;
    const Eigen::MatrixXd cov =
        llt.solve(Eigen::MatrixXd::Identity(k, k));
    for (Eigen::Index j = 0; j < k; ++j) {
        if (!(cov(j, j) > 0.0) || !std::isfinite(cov(j, j))) return false;
    }
    se = cov.diagonal().cwiseSqrt();
    return true;
}

}  // namespace detail

// Maximum likelihood for the zero-adjusted quantile regression. The two
// likelihood factors share no parameters, so they are maximized separately:
// eta against l1, (beta, kappa) jointly against l2. Degenerate responses
// follow the documented collapse: without zeros the zero block is skipped;
// without positives only the zero block is fitted.
inline FittedModel fit(const ModelSpec& spec, const FitOptions& opts = {}) {
    FittedModel out;
    out.spec = std::make_shared<const ModelSpec>(spec);
    const ModelSpec& s = *out.spec;

    const bool fit_zero = s.n_zero() > 0;
    const bool fit_continuous = s.n_positive() > 0;

    Eigen::VectorXd eta0 = Eigen::VectorXd::Zero(s.V().cols());
    {
        const double n = static_cast<double>(s.n());
        const double frac = std::clamp(
            static_cast<double>(s.n_zero()) / n, 1.0 / n, 1.0 - 1.0 / n);
        eta0[0] = logit(frac);
    }

    if (fit_zero) {
        const ObjectiveFn l1 = [&s](const Eigen::VectorXd& eta) {
            return loglik_zero_part(s, eta);
        };
        const OptimResult r = maximize(l1, eta0, opts.optim);
        out.zero_block_fitted = true;
        out.eta = r.argmax;
        out.zero_converged = r.converged;
        out.loglik_zero = r.value;
        if (r.hessian_available)
            out.zero_se_available = detail::block_se(r.neg_hessian, out.se_eta);
        else
            out.se_eta = Eigen::VectorXd::Constant(
                s.V().cols(), std::numeric_limits<double>::quiet_NaN());
        out.n_params += static_cast<int>(s.V().cols());
    }

    if (fit_continuous) {
        const Coefficients init = initial_values(s);
        const Eigen::Index kb = s.X().cols();
        const Eigen::Index kk = s.W().cols();
        Eigen::VectorXd theta0(kb + kk);
        theta0 << init.beta, init.kappa;

        const ObjectiveFn l2 = [&s, kb, kk](const Eigen::VectorXd& theta) {
            return loglik_positive_part(s, theta.head(kb), theta.tail(kk));
        };
        const OptimResult r = maximize(l2, theta0, opts.optim);
        out.continuous_block_fitted = true;
        out.beta = r.argmax.head(kb);
        out.kappa = r.argmax.tail(kk);
        out.continuous_converged = r.converged;
        out.loglik_positive = r.value;
        Eigen::VectorXd se_joint;
        if (r.hessian_available &&
            detail::block_se(r.neg_hessian, se_joint)) {
            out.continuous_se_available = true;
            out.se_beta = se_joint.head(kb);
            out.se_kappa = se_joint.tail(kk);
        } else {
            out.se_beta = Eigen::VectorXd::Constant(
                kb, std::numeric_limits<double>::quiet_NaN());
            out.se_kappa = Eigen::VectorXd::Constant(
                kk, std::numeric_limits<double>::quiet_NaN());
        }
        out.n_params += static_cast<int>(kb + kk);
    }

    out.loglik_total = out.loglik_zero + out.loglik_positive;
    out.aic = -2.0 * out.loglik_total + 2.0 * out.n_params;
    out.bic = -2.0 * out.loglik_total +
              out.n_params * std::log(static_cast<double>(s.n()));
    return out;
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

// Randomized quantile residuals: the probability-integral transform of the
// fitted mixture, randomized over [0, pi_i) at the atom, mapped through the
// standard normal quantile. Approximately N(0,1) under a correct model.
inline Eigen::VectorXd randomized_quantile_residuals(const FittedModel& fit,
                                                     Rng& rng) {
    const ModelSpec& s = *fit.spec;
    const boost::math::normal_distribution<double> n01;

    Eigen::VectorXd lp_pi, lq, lphi;
    if (fit.zero_block_fitted) lp_pi = s.V() * fit.eta;
    if (fit.continuous_block_fitted) {
        lq = s.X() * fit.beta;
        lphi = s.W() * fit.kappa;
    }

    Eigen::VectorXd r(s.n());
    for (Eigen::Index i = 0; i < s.n(); ++i) {
        const double pi = fit.zero_block_fitted ? logistic(lp_pi[i]) : 0.0;
        double u;
        if (s.is_zero(i)) {
            u = pi * rng.uniform();
        } else {
            const QuantileLS d(s.q_level(), std::exp(lq[i]),
                               std::exp(lphi[i]), s.generator(), s.z_p());
            u = pi + (1.0 - pi) * d.cdf(s.z()[i]);
        }
        u = std::clamp(u, 1e-12, 1.0 - 1e-12);
        r[i] = boost::math::quantile(n01, u);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Quantile sweep
// ---------------------------------------------------------------------------

struct SweepEntry {
    double q_level = 0.0;
    bool ok = false;          // fit ran and every fitted block converged
    std::string error;        // set when the fit threw
    FittedModel model;
};

struct SweepResult {
    std::vector<SweepEntry> entries;
    double mean_aic = std::numeric_limits<double>::quiet_NaN();
    double mean_bic = std::numeric_limits<double>::quiet_NaN();
    int n_excluded = 0;  // grid points missing from the averages
};

// Fits the same specification at every level of the grid. Grid points run
// in parallel (each fit owns its optimizer state); failures are recorded
// and excluded from the AIC/BIC averages.
inline SweepResult fit_sweep(const ModelSpec& base,
                             const std::vector<double>& q_grid,
                             const FitOptions& opts = {}) {
    if (q_grid.empty()) throw std::invalid_argument("empty quantile grid");
    for (std::size_t i = 0; i < q_grid.size(); ++i) {
        if (!(q_grid[i] > 0.0 && q_grid[i] < 1.0))
            throw std::invalid_argument("grid levels must lie in (0,1)");
        if (i > 0 && !(q_grid[i] > q_grid[i - 1]))
            throw std::invalid_argument("grid must be strictly increasing");
    }

    SweepResult out;
    out.entries.resize(q_grid.size());
    parallel_for(q_grid.size(), [&](std::size_t i) {
        SweepEntry& e = out.entries[i];
        e.q_level = q_grid[i];
        try {
            e.model = fit(base.with_q_level(q_grid[i]), opts);
            e.ok = e.model.converged();
        } catch (const std::exception& ex) {
            e.ok = false;
            e.error = ex.what();
        }
    });

    double sum_aic = 0.0, sum_bic = 0.0;
    int used = 0;
    for (const SweepEntry& e : out.entries) {
        if (e.ok && std::isfinite(e.model.aic)) {
            sum_aic += e.model.aic;
            sum_bic += e.model.bic;
            ++used;
        }
    }
    out.n_excluded = static_cast<int>(out.entries.size()) - used;
    if (used > 0) {
        out.mean_aic = sum_aic / used;
        out.mean_bic = sum_bic / used;
    }
    return out;
}

}  // namespace zals
