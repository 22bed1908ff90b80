#pragma once

// Maximum-likelihood fitting for the three model families used in the
// analysis: NB2 negative binomial with fixed dispersion (log link), logistic
// regression and ordinary least squares, with Wald inference.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "atyp/features.hpp"

namespace atyp {

enum class Family { NegativeBinomial, Logistic, Ols };

const char* family_name(Family f);
Family family_from_name(const std::string& name);

enum class Information { Observed, Expected };

struct FitOptions {
    double rel_tol = 1e-10;   // relative log-likelihood change
    double grad_tol = 1e-8;   // scaled by (1 + |beta|)
    int max_iter = 100;
    Information information = Information::Observed;
};

struct ModelSpec {
    Family family = Family::NegativeBinomial;
    double alpha = 1.0;                   // NB dispersion, fixed
    std::vector<std::string> covariates;  // empty: every table column
    FitOptions options;
};

struct RankDeficientError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// MLE sits on the boundary of the parameter space (e.g. all-zero counts).
struct BoundaryError : ConvergenceError {
    using ConvergenceError::ConvergenceError;
};
struct SeparationError : ConvergenceError {
    using ConvergenceError::ConvergenceError;
};
struct InvalidOutcomeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct Coefficient {
    std::string name;
    double coef = 0.0;
    double std_err = 0.0;
    double stat = 0.0;  // z, or t for OLS
    double p_value = 1.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct FitResult {
    Family family = Family::NegativeBinomial;
    std::string outcome;
    double alpha = 0.0;
    std::string stat_name = "z";
    std::vector<Coefficient> coefficients;
    double log_likelihood = 0.0;
    double deviance = 0.0;
    double pearson_chi2 = 0.0;
    std::size_t n_obs = 0;
    std::size_t df_model = 0;
    std::size_t df_residuals = 0;
    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;
    std::vector<double> loglik_trace;  // after each accepted step, starting point first
    Information information = Information::Observed;

    std::optional<double> null_log_likelihood;  // logistic
    std::optional<double> pseudo_r2;            // logistic (McFadden)
    std::optional<double> r_squared;            // OLS
    std::optional<double> f_statistic;          // OLS

    const Coefficient& at(const std::string& name) const;
    Eigen::VectorXd beta() const;
};

struct EffectSize {
    double coef = 0.0;
    double percent = 0.0;
};

// Percent change in the expected outcome for a unit change of a log-link
// covariate: (exp(coef) - 1) * 100.
EffectSize effect_pct(double coef);

struct Design {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<std::string> names;
};

Design make_design(const FeatureTable& table, const std::vector<std::string>& covariates = {});

// Throws RankDeficientError naming the offending columns.
void require_full_rank(const Design& d);

// Log-likelihoods and their analytic derivatives in beta.
double negbin_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, const Eigen::VectorXd& beta);
Eigen::VectorXd negbin_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                             const Eigen::VectorXd& beta);
Eigen::MatrixXd negbin_hessian(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                               const Eigen::VectorXd& beta, Information info = Information::Observed);

double logistic_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta);
Eigen::VectorXd logistic_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta);

// Gaussian log-likelihood at fixed unit variance, up to a constant: -RSS/2.
double ols_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta);
Eigen::VectorXd ols_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta);

FitResult fit_negbin(const Design& d, double alpha, const FitOptions& opts = {});
FitResult fit_logistic(const Design& d, const FitOptions& opts = {});
FitResult fit_ols(const Design& d);

FitResult fit_negbin(const FeatureTable& table, const ModelSpec& spec);
FitResult fit_logistic(const FeatureTable& table, const ModelSpec& spec);
FitResult fit_ols(const FeatureTable& table, const ModelSpec& spec);
FitResult fit_model(const FeatureTable& table, const ModelSpec& spec);

std::string fit_to_csv(const FitResult& fit);
nlohmann::ordered_json fit_to_json(const FitResult& fit);

}  // namespace atyp
