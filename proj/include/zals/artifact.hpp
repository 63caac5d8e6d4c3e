#pragma once

#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <boost/math/distributions/normal.hpp>

#include "csv.hpp"
#include "regression.hpp"
#include "version.hpp"

namespace zals {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline GeneratorKind generator_from_name(const std::string& name, double xi) {
    if (name == "lognormal" || name == "zalno")
        return GeneratorKind::log_normal();
    if (name == "logt" || name == "student" || name == "zalt")
        return GeneratorKind::log_student_t(xi);
    if (name == "logpe" || name == "powerexp" || name == "zalpe")
        return GeneratorKind::log_power_exponential(xi);
    if (name == "ebs" || name == "zaebs")
        return GeneratorKind::extended_birnbaum_saunders(xi);
    throw ConfigError("unknown generator '" + name +
                      "' (expected lognormal, logt, logpe or ebs)");
}

// "a:b:step" or a plain number; used by --q-grid and config q_grid strings.
inline std::vector<double> parse_q_grid(const std::string& text) {
    std::vector<double> grid;
    const auto c1 = text.find(':');
    if (c1 == std::string::npos) {
        grid.push_back(std::stod(text));
        return grid;
    }
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos)
        throw ConfigError("quantile grid must be start:stop:step");
    const double start = std::stod(text.substr(0, c1));
    const double stop = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    const double step = std::stod(text.substr(c2 + 1));
    if (!(step > 0.0) || !(stop >= start))
        throw ConfigError("ill-formed quantile grid '" + text + "'");
    for (int i = 0;; ++i) {
        const double q = start + i * step;
        if (q > stop + 1e-12) break;
        grid.push_back(q);
    }
    return grid;
}

// Declarative model configuration: response and covariate column names for
// the three linear predictors, the generator (with xi or a xi grid), the
// quantile level (or grid), and optional ingestion/optimizer knobs.
struct FitConfig {
    std::string response;
    std::vector<std::string> quantile_covariates;
    std::vector<std::string> dispersion_covariates;
    std::vector<std::string> zero_covariates;
    std::string generator = "lognormal";
    double xi = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> xi_grid;
    double q = 0.5;
    std::vector<double> q_grid;
    double zero_threshold = 0.0;
    std::uint64_t seed = 1;
    FitOptions fit_options;

    static FitConfig from_json(const nlohmann::json& j) {
        FitConfig c;
        if (!j.contains("response") || !j["response"].is_string())
            throw ConfigError("config needs a string field 'response'");
        c.response = j["response"].get<std::string>();
        const auto names = [&j](const char* key) {
            std::vector<std::string> out;
            if (j.contains(key)) out = j[key].get<std::vector<std::string>>();
            return out;
        };
        c.quantile_covariates = names("quantile_covariates");
        c.dispersion_covariates = names("dispersion_covariates");
        c.zero_covariates = names("zero_covariates");
        if (j.contains("generator"))
            c.generator = j["generator"].get<std::string>();
        if (j.contains("xi") && !j["xi"].is_null())
            c.xi = j["xi"].get<double>();
        if (j.contains("xi_grid"))
            c.xi_grid = j["xi_grid"].get<std::vector<double>>();
        if (j.contains("q")) c.q = j["q"].get<double>();
        if (j.contains("q_grid")) {
            if (j["q_grid"].is_string())
                c.q_grid = parse_q_grid(j["q_grid"].get<std::string>());
            else
                c.q_grid = j["q_grid"].get<std::vector<double>>();
        }
        if (j.contains("zero_threshold"))
            c.zero_threshold = j["zero_threshold"].get<double>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("optimizer")) {
            const auto& o = j["optimizer"];
            if (o.contains("max_iterations"))
                c.fit_options.optim.max_iterations =
                    o["max_iterations"].get<int>();
            if (o.contains("gradient_tolerance"))
                c.fit_options.optim.grad_tol =
                    o["gradient_tolerance"].get<double>();
            if (o.contains("objective_tolerance"))
                c.fit_options.optim.rel_obj_tol =
                    o["objective_tolerance"].get<double>();
        }
        return c;
    }

    static FitConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config '" + path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config '" + path + "': " + e.what());
        }
        return from_json(j);
    }

    GeneratorKind kind() const { return generator_from_name(generator, xi); }
};

// Assembles the model spec from an ingested CSV table. The zero threshold
// coerces |z| < eps to an exact zero before the indicator is formed.
inline ModelSpec build_spec(const CsvTable& table, const FitConfig& config,
                            double q_level) {
    const std::vector<double> raw = table.numeric_column(config.response);
    Eigen::VectorXd z(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        z[i] = (config.zero_threshold > 0.0 &&
                std::abs(raw[i]) < config.zero_threshold)
                   ? 0.0
                   : raw[i];
    }
    const auto design = [&table](const std::vector<std::string>& cols) {
        Eigen::MatrixXd m(table.n_rows(), cols.size() + 1);
        m.col(0).setOnes();
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const std::vector<double> v = table.numeric_column(cols[c]);
            for (std::size_t r = 0; r < v.size(); ++r) m(r, c + 1) = v[r];
        }
        return m;
    };
    return ModelSpec(config.kind(), q_level, design(config.quantile_covariates),
                     design(config.dispersion_covariates),
                     design(config.zero_covariates), z);
}

// ---------------------------------------------------------------------------
// Persisted fit artifact
// ---------------------------------------------------------------------------

struct CoefficientEntry {
    std::string name;
    double estimate = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    double z = std::numeric_limits<double>::quiet_NaN();
    double p = std::numeric_limits<double>::quiet_NaN();
};

struct BlockTable {
    bool fitted = false;
    bool converged = false;
    bool se_available = false;
    std::vector<CoefficientEntry> coefficients;
};

struct ModelArtifact {
    int schema_version = 1;
    std::string software_version = version_string;
    std::string timestamp;

    FitConfig config;  // echo of the model configuration (single q, xi)
    Eigen::Index n = 0;
    Eigen::Index n_zero = 0;

    BlockTable zero_block;
    BlockTable quantile_block;
    BlockTable dispersion_block;
    double loglik_zero = 0.0;
    double loglik_positive = 0.0;
    double loglik = 0.0;
    int n_params = 0;
    double aic = std::numeric_limits<double>::quiet_NaN();
    double bic = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;

    nlohmann::json to_json() const;
    static ModelArtifact from_json(const nlohmann::json& j);
    void write_file(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw ConfigError("cannot write '" + path + "'");
        out << to_json().dump(2) << "\n";
    }
    static ModelArtifact read_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open model artifact '" + path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("artifact '" + path + "': " + e.what());
        }
        return from_json(j);
    }
};

namespace detail {

inline std::string iso8601_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

// NaN is not representable in JSON; encode it as null.
inline nlohmann::json num(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

inline double num_from(const nlohmann::json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

inline nlohmann::json block_to_json(const BlockTable& b) {
    nlohmann::json coefs = nlohmann::json::array();
    for (const auto& c : b.coefficients) {
        coefs.push_back({{"name", c.name},
                         {"estimate", num(c.estimate)},
                         {"se", num(c.se)},
                         {"z", num(c.z)},
                         {"p", num(c.p)}});
    }
    return {{"fitted", b.fitted},
            {"converged", b.converged},
            {"se_available", b.se_available},
            {"coefficients", coefs}};
}

inline BlockTable block_from_json(const nlohmann::json& j) {
    BlockTable b;
    b.fitted = j["fitted"].get<bool>();
    b.converged = j["converged"].get<bool>();
    b.se_available = j["se_available"].get<bool>();
    for (const auto& c : j["coefficients"]) {
        CoefficientEntry e;
        e.name = c["name"].get<std::string>();
        e.estimate = num_from(c["estimate"]);
        e.se = num_from(c["se"]);
        e.z = num_from(c["z"]);
        e.p = num_from(c["p"]);
        b.coefficients.push_back(std::move(e));
    }
    return b;
}

// Wald table for one block: z statistics and two-sided normal p-values.
inline BlockTable make_block(bool fitted, bool converged, bool se_available,
                             const std::vector<std::string>& names,
                             const Eigen::VectorXd& est,
                             const Eigen::VectorXd& se) {
    BlockTable b;
    b.fitted = fitted;
    b.converged = converged;
    b.se_available = se_available;
    if (!fitted) return b;
    const boost::math::normal_distribution<double> n01;
    for (Eigen::Index j = 0; j < est.size(); ++j) {
        CoefficientEntry e;
        e.name = names[static_cast<std::size_t>(j)];
        e.estimate = est[j];
        if (se_available && se[j] > 0.0) {
            e.se = se[j];
            e.z = est[j] / se[j];
            e.p = 2.0 * boost::math::cdf(n01, -std::abs(e.z));
        }
        b.coefficients.push_back(std::move(e));
    }
    return b;
}

inline std::vector<std::string> block_names(
    const std::vector<std::string>& covariates) {
    std::vector<std::string> names{"(intercept)"};
    names.insert(names.end(), covariates.begin(), covariates.end());
    return names;
}

}  // namespace detail

inline nlohmann::json ModelArtifact::to_json() const {
    nlohmann::json jconfig{
        {"response", config.response},
        {"quantile_covariates", config.quantile_covariates},
        {"dispersion_covariates", config.dispersion_covariates},
        {"zero_covariates", config.zero_covariates},
        {"generator", config.generator},
        {"xi", detail::num(config.xi)},
        {"q", config.q},
        {"zero_threshold", config.zero_threshold},
        {"seed", config.seed}};
    return {{"schema_version", schema_version},
            {"software_version", software_version},
            {"timestamp", timestamp},
            {"config", jconfig},
            {"data", {{"n", n}, {"n_zero", n_zero}}},
            {"fit",
             {{"converged", converged},
              {"zero_block", detail::block_to_json(zero_block)},
              {"quantile_block", detail::block_to_json(quantile_block)},
              {"dispersion_block", detail::block_to_json(dispersion_block)},
              {"loglik_zero", detail::num(loglik_zero)},
              {"loglik_positive", detail::num(loglik_positive)},
              {"loglik", detail::num(loglik)},
              {"n_params", n_params},
              {"aic", detail::num(aic)},
              {"bic", detail::num(bic)}}}};
}

inline ModelArtifact ModelArtifact::from_json(const nlohmann::json& j) {
    ModelArtifact a;
    a.schema_version = j["schema_version"].get<int>();
    if (a.schema_version != 1)
        throw ConfigError("unsupported artifact schema_version " +
                          std::to_string(a.schema_version));
    a.software_version = j["software_version"].get<std::string>();
    a.timestamp = j["timestamp"].get<std::string>();
    a.config = FitConfig::from_json(j["config"]);
    a.n = j["data"]["n"].get<Eigen::Index>();
    a.n_zero = j["data"]["n_zero"].get<Eigen::Index>();
    const auto& f = j["fit"];
    a.converged = f["converged"].get<bool>();
    a.zero_block = detail::block_from_json(f["zero_block"]);
    a.quantile_block = detail::block_from_json(f["quantile_block"]);
    a.dispersion_block = detail::block_from_json(f["dispersion_block"]);
    a.loglik_zero = detail::num_from(f["loglik_zero"]);
    a.loglik_positive = detail::num_from(f["loglik_positive"]);
    a.loglik = detail::num_from(f["loglik"]);
    a.n_params = f["n_params"].get<int>();
    a.aic = detail::num_from(f["aic"]);
    a.bic = detail::num_from(f["bic"]);
    return a;
}

// Collects a fitted model into the persistable artifact form.
inline ModelArtifact make_artifact(const FittedModel& m, const FitConfig& base,
                                   double q_level) {
    ModelArtifact a;
    a.timestamp = detail::iso8601_utc_now();
    a.config = base;
    a.config.q = q_level;
    a.config.q_grid.clear();
    a.config.xi_grid.clear();
    a.n = m.spec->n();
    a.n_zero = m.spec->n_zero();
    a.zero_block = detail::make_block(
        m.zero_block_fitted, m.zero_converged, m.zero_se_available,
        detail::block_names(base.zero_covariates), m.eta, m.se_eta);
    a.quantile_block = detail::make_block(
        m.continuous_block_fitted, m.continuous_converged,
        m.continuous_se_available, detail::block_names(base.quantile_covariates),
        m.beta, m.se_beta);
    a.dispersion_block = detail::make_block(
        m.continuous_block_fitted, m.continuous_converged,
        m.continuous_se_available,
        detail::block_names(base.dispersion_covariates), m.kappa, m.se_kappa);
    a.loglik_zero = m.loglik_zero;
    a.loglik_positive = m.loglik_positive;
    a.loglik = m.loglik_total;
    a.n_params = m.n_params;
    a.aic = m.aic;
    a.bic = m.bic;
    a.converged = m.converged();
    return a;
}

// Rebuilds the fitted per-row parameters for the residuals command: a
// FittedModel carrying the artifact's coefficients over freshly ingested
// data.
inline FittedModel rehydrate(const ModelArtifact& a, const CsvTable& table) {
    const ModelSpec spec = build_spec(table, a.config, a.config.q);
    FittedModel m;
    m.spec = std::make_shared<const ModelSpec>(spec);
    const auto estimates = [](const BlockTable& b) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(b.coefficients.size()));
        for (std::size_t j = 0; j < b.coefficients.size(); ++j)
            v[static_cast<Eigen::Index>(j)] = b.coefficients[j].estimate;
        return v;
    };
    m.zero_block_fitted = a.zero_block.fitted;
    m.continuous_block_fitted = a.quantile_block.fitted;
    if (a.zero_block.fitted) m.eta = estimates(a.zero_block);
    if (a.quantile_block.fitted) {
        m.beta = estimates(a.quantile_block);
        m.kappa = estimates(a.dispersion_block);
    }
    if (m.zero_block_fitted &&
        m.eta.size() != m.spec->V().cols())
        throw ConfigError("artifact does not match the data columns");
    if (m.continuous_block_fitted &&
        (m.beta.size() != m.spec->X().cols() ||
         m.kappa.size() != m.spec->W().cols()))
        throw ConfigError("artifact does not match the data columns");
    return m;
}

}  // namespace zals
