// zals: fit, sweep, simulate and diagnose zero-adjusted log-symmetric
// quantile regression models from the command line.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zals/artifact.hpp"
#include "zals/csv.hpp"
#include "zals/regression.hpp"
#include "zals/simulation.hpp"
#include "zals/version.hpp"

namespace {

constexpr double normal_975 = 1.959964;  // Wald 95% half-width factor

constexpr int exit_ok = 0;
constexpr int exit_diagnostic = 1;
constexpr int exit_not_converged = 3;

struct Overrides {
    std::optional<double> q;
    std::optional<std::string> generator;
    std::optional<double> xi;
    std::optional<std::string> q_grid;
    std::optional<std::uint64_t> seed;
};

zals::FitConfig load_config(const std::string& path, const Overrides& ov) {
    zals::FitConfig config = zals::FitConfig::from_file(path);
    if (ov.generator) config.generator = *ov.generator;
    if (ov.xi) {
        config.xi = *ov.xi;
        config.xi_grid.clear();
    }
    if (ov.q) {
        config.q = *ov.q;
        config.q_grid.clear();
    }
    if (ov.q_grid) config.q_grid = zals::parse_q_grid(*ov.q_grid);
    if (ov.seed) config.seed = *ov.seed;
    return config;
}

void print_block(std::ostream& out, const std::string& title,
                 const zals::BlockTable& block) {
    out << title << "\n";
    if (!block.fitted) {
        out << "  (not fitted for this response)\n";
        return;
    }
    out << "  " << std::left << std::setw(16) << "parameter" << std::right
        << std::setw(12) << "estimate" << std::setw(12) << "se"
        << std::setw(10) << "z" << std::setw(12) << "p" << "\n";
    for (const auto& c : block.coefficients) {
        out << "  " << std::left << std::setw(16) << c.name << std::right
            << std::fixed << std::setprecision(4) << std::setw(12)
            << c.estimate;
        if (std::isnan(c.se)) {
            out << std::setw(12) << "--" << std::setw(10) << "--"
                << std::setw(12) << "--";
        } else {
            out << std::setw(12) << c.se << std::setprecision(2)
                << std::setw(10) << c.z << std::scientific
                << std::setprecision(2) << std::setw(12) << c.p;
        }
        out << std::defaultfloat << std::setprecision(6) << "\n";
    }
    if (!block.converged) out << "  WARNING: block did not converge\n";
}

void print_artifact(std::ostream& out, const zals::ModelArtifact& a) {
    out << "model: generator=" << a.config.generator;
    if (!std::isnan(a.config.xi)) out << " xi=" << a.config.xi;
    out << " q=" << a.config.q << "  n=" << a.n << " (" << a.n_zero
        << " zeros)\n\n";
    print_block(out, "Participation (zero probability, logit link):",
                a.zero_block);
    out << "\n";
    print_block(out, "Intensity: quantile block (log link):",
                a.quantile_block);
    out << "\n";
    print_block(out, "Intensity: dispersion block (log link):",
                a.dispersion_block);
    out << "\nloglik: zero " << std::setprecision(10) << a.loglik_zero
        << " + positive " << a.loglik_positive << " = " << a.loglik << "\n"
        << "params: " << a.n_params << "  AIC: " << a.aic
        << "  BIC: " << a.bic << "\n";
}

// Single fit honoring an optional xi grid (selected by minimum AIC).
zals::ModelArtifact fit_csv(const zals::CsvTable& table,
                            const zals::FitConfig& config, double q_level,
                            std::ostream& log) {
    std::vector<double> xis;
    if (!config.xi_grid.empty() &&
        config.generator != "lognormal")
        xis = config.xi_grid;
    else
        xis = {config.xi};

    std::optional<zals::ModelArtifact> best;
    for (double xi : xis) {
        zals::FitConfig attempt = config;
        attempt.xi = xi;
        attempt.xi_grid.clear();
        const zals::ModelSpec spec = zals::build_spec(table, attempt, q_level);
        const zals::FittedModel m = zals::fit(spec, config.fit_options);
        zals::ModelArtifact a = zals::make_artifact(m, attempt, q_level);
        if (xis.size() > 1)
            log << "  xi=" << xi << "  AIC=" << std::setprecision(10) << a.aic
                << (m.converged() ? "" : "  (not converged)") << "\n";
        if (!best || (a.converged && !best->converged) ||
            (a.converged == best->converged && a.aic < best->aic))
            best = std::move(a);
    }
    if (xis.size() > 1)
        log << "selected xi=" << best->config.xi << " by minimum AIC\n";
    return *best;
}

int cmd_fit(const std::string& data_path, const std::string& config_path,
            const std::string& out_path, const Overrides& ov) {
    const zals::FitConfig config = load_config(config_path, ov);
    const zals::CsvTable table = zals::CsvTable::read_file(data_path);
    const zals::ModelArtifact artifact =
        fit_csv(table, config, config.q, std::cout);
    print_artifact(std::cout, artifact);
    if (!out_path.empty()) {
        artifact.write_file(out_path);
        std::cout << "\nwrote " << out_path << "\n";
    }
    return artifact.converged ? exit_ok : exit_not_converged;
}

int cmd_sweep(const std::string& data_path, const std::string& config_path,
              const std::string& out_path, const Overrides& ov) {
    zals::FitConfig config = load_config(config_path, ov);
    if (config.q_grid.empty())
        throw zals::ConfigError("sweep needs a q grid (--q-grid or config q_grid)");
    const zals::CsvTable table = zals::CsvTable::read_file(data_path);

    // an xi grid is resolved once, at the middle of the sweep
    if (!config.xi_grid.empty() && config.generator != "lognormal") {
        const double mid = config.q_grid[config.q_grid.size() / 2];
        std::cout << "selecting xi at q=" << mid << "\n";
        const zals::ModelArtifact probe = fit_csv(table, config, mid, std::cout);
        config.xi = probe.config.xi;
        config.xi_grid.clear();
    }

    const zals::ModelSpec base = zals::build_spec(table, config, config.q_grid.front());
    const zals::SweepResult sweep =
        zals::fit_sweep(base, config.q_grid, config.fit_options);

    int converged_fits = 0;
    std::ofstream out(out_path);
    if (!out) throw zals::ConfigError("cannot write '" + out_path + "'");
    zals::CsvWriter w(out);
    w.header({"q", "block", "parameter", "estimate", "lo95", "hi95"});
    const auto emit = [&w](double q, const char* block,
                           const std::vector<std::string>& names,
                           const Eigen::VectorXd& est,
                           const Eigen::VectorXd& se, bool se_ok) {
        for (Eigen::Index j = 0; j < est.size(); ++j) {
            const double half =
                se_ok && se[j] > 0.0
                    ? normal_975 * se[j]
                    : std::numeric_limits<double>::quiet_NaN();
            w.row({zals::CsvWriter::format(q), block,
                   names[static_cast<std::size_t>(j)],
                   zals::CsvWriter::format(est[j]),
                   zals::CsvWriter::format(est[j] - half),
                   zals::CsvWriter::format(est[j] + half)});
        }
    };
    for (const zals::SweepEntry& e : sweep.entries) {
        if (!e.ok) continue;
        const zals::FittedModel& m = e.model;
        if (m.zero_block_fitted)
            emit(e.q_level, "zero",
                 zals::detail::block_names(config.zero_covariates), m.eta,
                 m.se_eta, m.zero_se_available);
        if (m.continuous_block_fitted) {
            emit(e.q_level, "quantile",
                 zals::detail::block_names(config.quantile_covariates), m.beta,
                 m.se_beta, m.continuous_se_available);
            emit(e.q_level, "dispersion",
                 zals::detail::block_names(config.dispersion_covariates),
                 m.kappa, m.se_kappa, m.continuous_se_available);
        }
        ++converged_fits;
    }
    if (converged_fits == 0)
        throw zals::ConfigError("every grid point failed to fit");

    std::cout << "sweep: " << sweep.entries.size() << " quantile levels, "
              << sweep.n_excluded << " excluded\n"
              << std::setprecision(10) << "mean AIC " << sweep.mean_aic
              << "  mean BIC " << sweep.mean_bic << "\n"
              << "wrote " << out_path << "\n";
    return sweep.n_excluded == 0 ? exit_ok : exit_not_converged;
}

zals::SimDesign design_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw zals::ConfigError("cannot open design '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw zals::ConfigError("design '" + path + "': " + e.what());
    }
    zals::SimDesign d;
    double xi = std::numeric_limits<double>::quiet_NaN();
    if (j.contains("xi") && !j["xi"].is_null()) xi = j["xi"].get<double>();
    if (j.contains("generator"))
        d.kind = zals::generator_from_name(j["generator"].get<std::string>(), xi);
    if (j.contains("q_levels"))
        d.q_levels = j["q_levels"].get<std::vector<double>>();
    const auto triple = [&j](const char* key, std::array<double, 3>& out) {
        if (!j.contains(key)) return;
        const auto v = j[key].get<std::vector<double>>();
        if (v.size() != 3)
            throw zals::ConfigError(std::string(key) + " must have 3 entries");
        std::copy(v.begin(), v.end(), out.begin());
    };
    triple("beta", d.true_beta);
    triple("kappa", d.true_kappa);
    triple("eta", d.true_eta);
    if (j.contains("sample_sizes"))
        d.sample_sizes = j["sample_sizes"].get<std::vector<int>>();
    if (j.contains("nrep")) d.nrep = j["nrep"].get<int>();
    if (j.contains("seed")) d.seed = j["seed"].get<std::uint64_t>();
    d.validate();
    return d;
}

void dump_datasets(const zals::SimDesign& design, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t qi = 0; qi < design.q_levels.size(); ++qi) {
        for (std::size_t ni = 0; ni < design.sample_sizes.size(); ++ni) {
            for (int rep = 0; rep < design.nrep; ++rep) {
                zals::Rng rng = zals::Rng::derive(design.seed, qi, ni,
                                                  static_cast<std::uint64_t>(rep));
                const zals::ModelSpec data = zals::generate_dataset(
                    design, design.q_levels[qi], design.sample_sizes[ni], rng);
                std::ostringstream name;
                name << dir << "/data_q" << design.q_levels[qi] << "_n"
                     << design.sample_sizes[ni] << "_rep" << rep << ".csv";
                std::ofstream out(name.str());
                if (!out)
                    throw zals::ConfigError("cannot write '" + name.str() + "'");
                zals::CsvWriter w(out);
                w.header({"z", "x1", "x2", "w1", "w2", "v1", "v2"});
                for (Eigen::Index i = 0; i < data.n(); ++i) {
                    w.row({zals::CsvWriter::format(data.z()[i]),
                           zals::CsvWriter::format(data.X()(i, 1)),
                           zals::CsvWriter::format(data.X()(i, 2)),
                           zals::CsvWriter::format(data.W()(i, 1)),
                           zals::CsvWriter::format(data.W()(i, 2)),
                           zals::CsvWriter::format(data.V()(i, 1)),
                           zals::CsvWriter::format(data.V()(i, 2))});
                }
            }
        }
    }
}

int cmd_simulate(const std::string& design_path, const std::string& out_path,
                 const std::string& dump_dir) {
    const zals::SimDesign design = design_from_file(design_path);
    const zals::MonteCarloReport report = zals::run_study(design);
    std::ofstream out(out_path);
    if (!out) throw zals::ConfigError("cannot write '" + out_path + "'");
    zals::write_report_csv(report, out);
    int unreliable = 0;
    for (const auto& cell : report.cells) unreliable += cell.unreliable ? 1 : 0;
    std::cout << "simulated " << report.cells.size() << " cells x "
              << design.nrep << " replicates";
    if (unreliable > 0)
        std::cout << "  (" << unreliable << " cells unreliable: >20% failures)";
    std::cout << "\nwrote " << out_path << "\n";
    if (!dump_dir.empty()) {
        dump_datasets(design, dump_dir);
        std::cout << "dumped datasets under " << dump_dir << "\n";
    }
    return exit_ok;
}

int cmd_residuals(const std::string& model_path, const std::string& data_path,
                  std::uint64_t seed, const std::string& out_path) {
    const zals::ModelArtifact artifact = zals::ModelArtifact::read_file(model_path);
    const zals::CsvTable table = zals::CsvTable::read_file(data_path);
    const zals::FittedModel m = zals::rehydrate(artifact, table);
    zals::Rng rng(seed);
    const Eigen::VectorXd r = zals::randomized_quantile_residuals(m, rng);

    // normal plotting positions by residual rank
    const Eigen::Index n = r.size();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&r](Eigen::Index a, Eigen::Index b) { return r[a] < r[b]; });
    std::vector<Eigen::Index> rank(n);
    for (Eigen::Index i = 0; i < n; ++i) rank[order[i]] = i + 1;
    const boost::math::normal_distribution<double> n01;

    std::ofstream out(out_path);
    if (!out) throw zals::ConfigError("cannot write '" + out_path + "'");
    zals::CsvWriter w(out);
    w.header({"index", "residual", "theoretical"});
    for (Eigen::Index i = 0; i < n; ++i) {
        const double pos = (static_cast<double>(rank[i]) - 0.5) / n;
        w.row({std::to_string(i + 1), zals::CsvWriter::format(r[i]),
               zals::CsvWriter::format(boost::math::quantile(n01, pos))});
    }
    std::cout << "wrote " << out_path << " (" << n << " residuals)\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"zero-adjusted log-symmetric quantile regression"};
    app.set_version_flag("--version", zals::version_string);
    app.require_subcommand(1);

    std::string data_path, config_path, out_path, design_path, model_path,
        dump_dir;
    Overrides ov;
    double q_flag = 0.0, xi_flag = 0.0;
    std::string gen_flag, qgrid_flag;
    std::uint64_t seed_flag = 0;

    auto* fit = app.add_subcommand("fit", "fit one model at a quantile level");
    fit->add_option("--data", data_path, "input CSV")->required();
    fit->add_option("--config", config_path, "model config (JSON)")->required();
    fit->add_option("--out", out_path, "model artifact to write (JSON)");
    fit->add_option("--q", q_flag, "quantile level override");
    fit->add_option("--gen", gen_flag, "generator override");
    fit->add_option("--xi", xi_flag, "generator extra parameter override");

    auto* sweep = app.add_subcommand("sweep", "fit across a quantile grid");
    sweep->add_option("--data", data_path, "input CSV")->required();
    sweep->add_option("--config", config_path, "model config (JSON)")->required();
    sweep->add_option("--out", out_path, "per-q estimates CSV")->required();
    sweep->add_option("--q-grid", qgrid_flag, "grid as start:stop:step");
    sweep->add_option("--gen", gen_flag, "generator override");
    sweep->add_option("--xi", xi_flag, "generator extra parameter override");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo bias/MSE study");
    simulate->add_option("--design", design_path, "design (JSON)")->required();
    simulate->add_option("--out", out_path, "report CSV")->required();
    simulate->add_option("--dump-data", dump_dir,
                         "also write every generated dataset here");

    auto* residuals = app.add_subcommand(
        "residuals", "randomized quantile residuals of a fitted model");
    residuals->add_option("--model", model_path, "model artifact")->required();
    residuals->add_option("--data", data_path, "input CSV")->required();
    residuals->add_option("--seed", seed_flag, "randomization seed");
    residuals->add_option("--out", out_path, "residual CSV")->required();

    CLI11_PARSE(app, argc, argv);

    if (fit->count("--q")) ov.q = q_flag;
    if (!gen_flag.empty()) ov.generator = gen_flag;
    if (fit->count("--xi") || sweep->count("--xi")) ov.xi = xi_flag;
    if (!qgrid_flag.empty()) ov.q_grid = qgrid_flag;

    try {
        if (*fit) return cmd_fit(data_path, config_path, out_path, ov);
        if (*sweep) return cmd_sweep(data_path, config_path, out_path, ov);
        if (*simulate) return cmd_simulate(design_path, out_path, dump_dir);
        if (*residuals)
            return cmd_residuals(model_path, data_path, seed_flag, out_path);
    } catch (const std::exception& e) {
        std::cerr << "zals: " << e.what() << "\n";
        return exit_diagnostic;
    }
    return exit_diagnostic;
}
