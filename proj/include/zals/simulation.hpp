#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "csv.hpp"
#include "parallel.hpp"
#include "regression.hpp"
#include "rng.hpp"

namespace zals {

// Monte Carlo study of the estimator: generate from the three-predictor
// model, fit, and tabulate bias and MSE per coefficient across quantile
// levels and sample sizes. Defaults follow the reference design of three
// uniform covariate pairs and the coefficient triples below.
struct SimDesign {
    GeneratorKind kind = GeneratorKind::log_normal();
    std::vector<double> q_levels{0.10, 0.50, 0.90};
    std::array<double, 3> true_beta{0.5, 0.7, 1.0};
    std::array<double, 3> true_kappa{0.5, 0.8, 1.0};
    std::array<double, 3> true_eta{0.5, 0.3, 0.5};
    std::vector<int> sample_sizes{50, 100, 200, 300, 400, 500};
    int nrep = 200;
    std::uint64_t seed = 1;
    bool keep_replicates = false;  // retain per-replicate estimates

    void validate() const {
        kind.validate();
        if (q_levels.empty()) throw std::invalid_argument("empty q_levels");
        for (double q : q_levels)
            if (!(q > 0.0 && q < 1.0))
                throw std::invalid_argument("q levels must lie in (0,1)");
        if (sample_sizes.empty())
            throw std::invalid_argument("empty sample_sizes");
        for (int n : sample_sizes)
            if (n < 10)
                throw std::invalid_argument("sample sizes must be >= 10");
        if (nrep < 1) throw std::invalid_argument("nrep must be >= 1");
    }
};

inline constexpr int sim_n_params = 9;

inline const std::array<const char*, sim_n_params>& sim_parameter_names() {
    static const std::array<const char*, sim_n_params> names{
        "beta0", "beta1", "beta2", "kappa0", "kappa1",
        "kappa2", "eta0",  "eta1",  "eta2"};
    return names;
}

struct ReplicateRecord {
    bool ok = false;
    std::array<double, sim_n_params> estimate{};
};

struct MonteCarloCell {
    double q_level = 0.0;
    int n = 0;
    std::array<double, sim_n_params> bias{};
    std::array<double, sim_n_params> mse{};
    int n_failed = 0;
    bool unreliable = false;  // more than 20% of replicates failed
    std::vector<ReplicateRecord> replicates;  // only when keep_replicates
};

struct MonteCarloReport {
    SimDesign design;
    std::vector<MonteCarloCell> cells;  // q-major, then sample-size order
};

// One synthetic dataset: covariate columns x1, x2, w1, w2, v1, v2 drawn iid
// Uniform(0,1) (intercepts prepended), response drawn from the zero-adjusted
// law at the per-row linked parameters. Draw order is fixed: the six
// covariates row by row, then the responses, so a given stream always yields
// the same dataset.
inline ModelSpec generate_dataset(const SimDesign& design, double q_level,
                                  int n, Rng& rng) {
    design.validate();
    Eigen::MatrixXd X(n, 3), W(n, 3), V(n, 3);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = W(i, 0) = V(i, 0) = 1.0;
        X(i, 1) = rng.uniform();
        X(i, 2) = rng.uniform();
        W(i, 1) = rng.uniform();
        W(i, 2) = rng.uniform();
        V(i, 1) = rng.uniform();
        V(i, 2) = rng.uniform();
    }

    const Eigen::Vector3d beta(design.true_beta[0], design.true_beta[1],
                               design.true_beta[2]);
    const Eigen::Vector3d kappa(design.true_kappa[0], design.true_kappa[1],
                                design.true_kappa[2]);
    const Eigen::Vector3d eta(design.true_eta[0], design.true_eta[1],
                              design.true_eta[2]);

    const Generator gen(design.kind);
    const double z_p = gen.quantile(q_level);

    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) {
        const double pi = logistic(V.row(i).dot(eta));
        const QuantileLS positive(q_level, std::exp(X.row(i).dot(beta)),
                                  std::exp(W.row(i).dot(kappa)), gen, z_p);
        z[i] = Zals(pi, positive).sample(rng);
    }
    return ModelSpec(design.kind, q_level, std::move(X), std::move(W),
                     std::move(V), std::move(z));
}

// Estimates (beta, kappa, eta) for one replicate, or nullopt when the fit
// fails. The default fitter runs the regression module; tests inject mocks.
using SimFitter =
    std::function<std::optional<std::array<double, sim_n_params>>(
        const ModelSpec&)>;

inline SimFitter default_sim_fitter(const FitOptions& opts = {}) {
    return [opts](const ModelSpec& spec)
               -> std::optional<std::array<double, sim_n_params>> {
        const FittedModel m = fit(spec, opts);
        if (!m.converged() || !m.zero_block_fitted ||
            !m.continuous_block_fitted)
            return std::nullopt;
        std::array<double, sim_n_params> est{};
        for (int j = 0; j < 3; ++j) {
            est[j] = m.beta[j];
            est[3 + j] = m.kappa[j];
            est[6 + j] = m.eta[j];
        }
        return est;
    };
}

// Full study. Replicates are independent; each derives its own stream from
// (seed, q index, n index, replicate index), so the report is identical
// whether cells run serially or across threads. Failed replicates are
// excluded from the averages and counted; a cell with more than 20% failures
// is flagged unreliable.
inline MonteCarloReport run_study(const SimDesign& design,
                                  SimFitter fitter = {}) {
    design.validate();
    if (!fitter) fitter = default_sim_fitter();

    const std::array<double, sim_n_params> truth{
        design.true_beta[0],  design.true_beta[1],  design.true_beta[2],
        design.true_kappa[0], design.true_kappa[1], design.true_kappa[2],
        design.true_eta[0],   design.true_eta[1],   design.true_eta[2]};

    MonteCarloReport report;
    report.design = design;
    const std::size_t n_cells =
        design.q_levels.size() * design.sample_sizes.size();
    report.cells.resize(n_cells);

    const std::size_t reps = static_cast<std::size_t>(design.nrep);
    std::vector<ReplicateRecord> records(n_cells * reps);

    parallel_for(n_cells * reps, [&](std::size_t idx) {
        const std::size_t cell = idx / reps;
        const std::size_t rep = idx % reps;
        const std::size_t qi = cell / design.sample_sizes.size();
        const std::size_t ni = cell % design.sample_sizes.size();

        Rng rng = Rng::derive(design.seed, qi, ni, rep);
        ReplicateRecord& rec = records[idx];
        try {
            const ModelSpec data =
                generate_dataset(design, design.q_levels[qi],
                                 design.sample_sizes[ni], rng);
            if (auto est = fitter(data)) {
                rec.ok = true;
                rec.estimate = *est;
            }
        } catch (const std::exception&) {
            rec.ok = false;
        }
    });

    for (std::size_t cell = 0; cell < n_cells; ++cell) {
        const std::size_t qi = cell / design.sample_sizes.size();
        const std::size_t ni = cell % design.sample_sizes.size();
        MonteCarloCell& out = report.cells[cell];
        out.q_level = design.q_levels[qi];
        out.n = design.sample_sizes[ni];

        int ok_count = 0;
        std::array<double, sim_n_params> sum_err{}, sum_sq{};
        for (std::size_t rep = 0; rep < reps; ++rep) {
            const ReplicateRecord& rec = records[cell * reps + rep];
            if (!rec.ok) continue;
            ++ok_count;
            for (int j = 0; j < sim_n_params; ++j) {
                const double err = rec.estimate[j] - truth[j];
                sum_err[j] += err;
                sum_sq[j] += err * err;
            }
        }
        out.n_failed = static_cast<int>(reps) - ok_count;
        out.unreliable = out.n_failed * 5 > design.nrep;  // > 20%
        for (int j = 0; j < sim_n_params; ++j) {
            out.bias[j] = ok_count > 0 ? sum_err[j] / ok_count : 0.0;
            out.mse[j] = ok_count > 0 ? sum_sq[j] / ok_count : 0.0;
        }
        if (design.keep_replicates) {
            out.replicates.assign(records.begin() + cell * reps,
                                  records.begin() + (cell + 1) * reps);
        }
    }
    return report;
}

// Plot-ready long format, one row per (cell, parameter).
inline void write_report_csv(const MonteCarloReport& report,
                             std::ostream& out) {
    CsvWriter w(out);
    w.header({"generator", "q", "n", "parameter", "true_value", "bias", "mse",
              "n_failed"});
    const std::array<double, sim_n_params> truth{
        report.design.true_beta[0],  report.design.true_beta[1],
        report.design.true_beta[2],  report.design.true_kappa[0],
        report.design.true_kappa[1], report.design.true_kappa[2],
        report.design.true_eta[0],   report.design.true_eta[1],
        report.design.true_eta[2]};
    for (const MonteCarloCell& cell : report.cells) {
        for (int j = 0; j < sim_n_params; ++j) {
            w.row({report.design.kind.name(), CsvWriter::format(cell.q_level),
                   std::to_string(cell.n), sim_parameter_names()[j],
                   CsvWriter::format(truth[j]), CsvWriter::format(cell.bias[j]),
                   CsvWriter::format(cell.mse[j]),
                   std::to_string(cell.n_failed)});
        }
    }
}

}  // namespace zals
