#include "atyp/glm.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "atyp/textio.hpp"

namespace atyp {

namespace {

constexpr double kZ975 = 1.959963984540054;
constexpr double kMaxEta = 700.0;
// |eta| beyond this gives fitted probabilities within ~1e-13 of 0 or 1.
constexpr double kSeparationEta = 30.0;
constexpr int kMaxHalvings = 60;
constexpr double kNoise = 1e-13;

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double normal_two_sided_p(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta) {
    return (x * beta).cwiseMin(kMaxEta);
}

// Part of the NB2 log-likelihood that depends on beta.
double negbin_kernel(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, const Eigen::VectorXd& beta) {
    const double r = 1.0 / alpha;
    const Eigen::VectorXd eta = linear_predictor(x, beta);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double mu = std::exp(eta[i]);
        const double log_r_mu = std::log(r + mu);
        ll += -r * std::log1p(mu / r) + y[i] * (eta[i] - log_r_mu);
    }
    return ll;
}

double negbin_constant(const Eigen::VectorXd& y, double alpha) {
    const double r = 1.0 / alpha;
    double c = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) c += std::lgamma(y[i] + r) - std::lgamma(r) - std::lgamma(y[i] + 1.0);
    return c;
}

bool has_intercept(const Design& d) {
    for (Eigen::Index j = 0; j < d.x.cols(); ++j)
        if ((d.x.col(j).array() == 1.0).all()) return true;
    return false;
}

void fill_inference(FitResult& fit, const Design& d, const Eigen::VectorXd& beta, const Eigen::MatrixXd& cov,
                    bool t_based) {
    const double df = static_cast<double>(fit.df_residuals);
    double crit = kZ975;
    std::optional<boost::math::students_t> tdist;
    if (t_based) {
        tdist.emplace(df);
        crit = boost::math::quantile(*tdist, 0.975);
    }
    fit.coefficients.clear();
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        Coefficient c;
        c.name = d.names[static_cast<std::size_t>(j)];
        c.coef = beta[j];
        c.std_err = std::sqrt(std::max(cov(j, j), 0.0));
        c.stat = c.std_err > 0 ? c.coef / c.std_err : 0.0;
        if (t_based) {
            c.p_value = c.std_err > 0 ? 2.0 * boost::math::cdf(boost::math::complement(*tdist, std::fabs(c.stat))) : 1.0;
        } else {
            c.p_value = normal_two_sided_p(c.stat);
        }
        c.ci_low = c.coef - crit * c.std_err;
        c.ci_high = c.coef + crit * c.std_err;
        fit.coefficients.push_back(c);
    }
}

void set_dims(FitResult& fit, const Design& d) {
    fit.n_obs = static_cast<std::size_t>(d.x.rows());
    const auto p = static_cast<std::size_t>(d.x.cols());
    fit.df_model = has_intercept(d) ? p - 1 : p;
    fit.df_residuals = fit.n_obs - p;
}

Eigen::MatrixXd inverse_information(const Eigen::MatrixXd& neg_hessian) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_hessian);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw ConvergenceError("information matrix is not positive definite at the solution");
    return ldlt.solve(Eigen::MatrixXd::Identity(neg_hessian.rows(), neg_hessian.cols()));
}

template <class LogLik, class Score, class NegHessian, class Check>
void newton(FitResult& fit, Eigen::VectorXd& beta, const FitOptions& opts, LogLik&& loglik, Score&& score,
            NegHessian&& neg_hessian, Check&& check_iterate) {
    double ll = loglik(beta);
    fit.loglik_trace = {ll};
    fit.converged = false;
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        const Eigen::VectorXd g = score(beta);
        const Eigen::MatrixXd h = neg_hessian(beta);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        if (ldlt.info() != Eigen::Success) throw ConvergenceError("Newton system could not be factorized");
        const Eigen::VectorXd step = ldlt.solve(g);

        double scale = 1.0;
        Eigen::VectorXd next = beta + step;
        double ll_next = loglik(next);
        // Once the predicted gain is below the rounding noise of the summed
        // likelihood, the comparison is meaningless: take the full step.
        const double predicted = 0.5 * g.dot(step);
        const bool terminal = std::isfinite(ll_next) && predicted >= 0.0 && predicted < kNoise * (1.0 + std::fabs(ll));
        int halvings = 0;
        while (!terminal && !(ll_next >= ll) && halvings < kMaxHalvings) {
            scale *= 0.5;
            next = beta + scale * step;
            ll_next = loglik(next);
            ++halvings;
        }
        fit.iterations = iter;
        if (!terminal && !(ll_next >= ll)) {
            // No ascent possible along the Newton direction: we are at the
            // optimum up to rounding, or stuck.
            fit.gradient_norm = g.norm();
            fit.converged = fit.gradient_norm <= opts.grad_tol * (1.0 + beta.norm());
            return;
        }
        const double change = std::fabs(ll_next - ll) / (std::fabs(ll_next) + 1e-300);
        beta = next;
        ll = ll_next;
        fit.loglik_trace.push_back(ll);
        check_iterate(beta);
        const double gnorm = score(beta).norm();
        fit.gradient_norm = gnorm;
        if (change < opts.rel_tol && gnorm <= opts.grad_tol * (1.0 + beta.norm())) {
            fit.converged = true;
            return;
        }
    }
}

}  // namespace

const char* family_name(Family f) {
    switch (f) {
        case Family::NegativeBinomial: return "negbin";
        case Family::Logistic: return "logistic";
        case Family::Ols: return "ols";
    }
    return "?";
}

Family family_from_name(const std::string& name) {
    if (name == "negbin" || name == "nb") return Family::NegativeBinomial;
    if (name == "logistic" || name == "logit") return Family::Logistic;
    if (name == "ols") return Family::Ols;
    throw std::invalid_argument("unknown model family \"" + name + "\"");
}

const Coefficient& FitResult::at(const std::string& name) const {
    for (const auto& c : coefficients)
        if (c.name == name) return c;
    throw std::out_of_range("fit has no coefficient \"" + name + "\"");
}

Eigen::VectorXd FitResult::beta() const {
    Eigen::VectorXd b(static_cast<Eigen::Index>(coefficients.size()));
    for (std::size_t i = 0; i < coefficients.size(); ++i) b[static_cast<Eigen::Index>(i)] = coefficients[i].coef;
    return b;
}

EffectSize effect_pct(double coef) { return {coef, std::expm1(coef) * 100.0}; }

Design make_design(const FeatureTable& table, const std::vector<std::string>& covariates) {
    const std::vector<std::string>& names = covariates.empty() ? table.column_names : covariates;
    Design d;
    d.names = names;
    const auto n = static_cast<Eigen::Index>(table.rows());
    d.x.resize(n, static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto& c = table.column(names[j]);
        for (Eigen::Index i = 0; i < n; ++i) d.x(i, static_cast<Eigen::Index>(j)) = c[static_cast<std::size_t>(i)];
    }
    d.y = Eigen::Map<const Eigen::VectorXd>(table.outcome.data(), n);
    return d;
}

void require_full_rank(const Design& d) {
    const Eigen::Index p = d.x.cols();
    if (d.x.rows() < p)
        throw RankDeficientError("design has " + std::to_string(d.x.rows()) + " rows for " + std::to_string(p) +
                                 " columns");
    Eigen::MatrixXd scaled = d.x;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double norm = scaled.col(j).norm();
        if (norm == 0.0) throw RankDeficientError("design column \"" + d.names[static_cast<std::size_t>(j)] + "\" is all zero");
        scaled.col(j) /= norm;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
        std::string cols;
        const auto perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < p; ++k) {
            if (!cols.empty()) cols += ", ";
            cols += d.names[static_cast<std::size_t>(perm[k])];
        }
        throw RankDeficientError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                                 std::to_string(p) + "); dependent columns: " + cols);
    }
}

double negbin_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, const Eigen::VectorXd& beta) {
    return negbin_kernel(x, y, alpha, beta) + negbin_constant(y, alpha);
}

Eigen::VectorXd negbin_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                             const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = linear_predictor(x, beta);
    Eigen::VectorXd w(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double mu = std::exp(eta[i]);
        w[i] = (y[i] - mu) / (1.0 + alpha * mu);
    }
    return x.transpose() * w;
}

Eigen::MatrixXd negbin_hessian(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                               const Eigen::VectorXd& beta, Information info) {
    const Eigen::VectorXd eta = linear_predictor(x, beta);
    Eigen::VectorXd w(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double mu = std::exp(eta[i]);
        const double denom = 1.0 + alpha * mu;
        w[i] = info == Information::Observed ? mu * (1.0 + alpha * y[i]) / (denom * denom) : mu / denom;
    }
    return -(x.transpose() * w.asDiagonal() * x);
}

double logistic_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = x * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) ll += y[i] * eta[i] - softplus(eta[i]);
    return ll;
}

Eigen::VectorXd logistic_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd r(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) r[i] = y[i] - sigmoid(eta[i]);
    return x.transpose() * r;
}

double ols_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
    return -0.5 * (y - x * beta).squaredNorm();
}

Eigen::VectorXd ols_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
    return x.transpose() * (y - x * beta);
}

FitResult fit_negbin(const Design& d, double alpha, const FitOptions& opts) {
    if (!(alpha > 0.0)) throw std::invalid_argument("negative binomial dispersion must be positive");
    for (Eigen::Index i = 0; i < d.y.size(); ++i) {
        if (d.y[i] < 0.0 || d.y[i] != std::floor(d.y[i]))
            throw InvalidOutcomeError("negative binomial outcome must be a nonnegative integer count");
    }
    require_full_rank(d);
    if (d.y.size() == 0 || d.y.sum() == 0.0)
        throw BoundaryError("all outcomes are zero: the mean tends to 0 and no finite MLE exists");

    FitResult fit;
    fit.family = Family::NegativeBinomial;
    fit.alpha = alpha;
    fit.information = opts.information;
    set_dims(fit, d);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d.x.cols());
    for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
        if ((d.x.col(j).array() == 1.0).all()) {
            beta[j] = std::log(d.y.mean() + 0.1);
            break;
        }
    }
    newton(
        fit, beta, opts, [&](const Eigen::VectorXd& b) { return negbin_kernel(d.x, d.y, alpha, b); },
        [&](const Eigen::VectorXd& b) { return negbin_score(d.x, d.y, alpha, b); },
        [&](const Eigen::VectorXd& b) { return Eigen::MatrixXd(-negbin_hessian(d.x, d.y, alpha, b)); },
        [](const Eigen::VectorXd&) {});
    if (!fit.converged)
        throw ConvergenceError("negative binomial fit did not converge in " + std::to_string(fit.iterations) +
                               " iterations (gradient norm " + format_double(fit.gradient_norm) + ")");

    const double constant = negbin_constant(d.y, alpha);
    for (auto& v : fit.loglik_trace) v += constant;
    fit.log_likelihood = fit.loglik_trace.back();

    const Eigen::MatrixXd cov = inverse_information(-negbin_hessian(d.x, d.y, alpha, beta, opts.information));
    fill_inference(fit, d, beta, cov, false);

    const double r = 1.0 / alpha;
    const Eigen::VectorXd eta = linear_predictor(d.x, beta);
    for (Eigen::Index i = 0; i < d.y.size(); ++i) {
        const double mu = std::exp(eta[i]);
        const double y = d.y[i];
        double dev = -(y + r) * std::log1p((y - mu) / (mu + r));
        if (y > 0) dev += y * std::log(y / mu);
        fit.deviance += 2.0 * dev;
        fit.pearson_chi2 += (y - mu) * (y - mu) / (mu + alpha * mu * mu);
    }
    return fit;
}

FitResult fit_logistic(const Design& d, const FitOptions& opts) {
    for (Eigen::Index i = 0; i < d.y.size(); ++i)
        if (d.y[i] != 0.0 && d.y[i] != 1.0) throw InvalidOutcomeError("logistic outcome must be 0 or 1");
    require_full_rank(d);
    const double ybar = d.y.size() ? d.y.mean() : 0.0;
    if (ybar == 0.0 || ybar == 1.0) throw SeparationError("logistic outcome is constant; no finite MLE exists");

    FitResult fit;
    fit.family = Family::Logistic;
    fit.information = Information::Observed;
    set_dims(fit, d);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d.x.cols());
    bool intercept = false;
    for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
        if ((d.x.col(j).array() == 1.0).all()) {
            const double m = std::clamp(ybar, 0.01, 0.99);
            beta[j] = std::log(m / (1.0 - m));
            intercept = true;
            break;
        }
    }
    auto neg_hessian = [&](const Eigen::VectorXd& b) {
        const Eigen::VectorXd eta = d.x * b;
        Eigen::VectorXd w(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            const double p = sigmoid(eta[i]);
            w[i] = p * (1.0 - p);
        }
        return Eigen::MatrixXd(d.x.transpose() * w.asDiagonal() * d.x);
    };
    auto check_separation = [&](const Eigen::VectorXd& b) {
        if ((d.x * b).cwiseAbs().maxCoeff() > kSeparationEta)
            throw SeparationError("logistic fit diverges: fitted probabilities reach 0 or 1 (complete or "
                                  "quasi-complete separation)");
    };
    try {
        newton(
            fit, beta, opts, [&](const Eigen::VectorXd& b) { return logistic_loglik(d.x, d.y, b); },
            [&](const Eigen::VectorXd& b) { return logistic_score(d.x, d.y, b); }, neg_hessian, check_separation);
    } catch (const SeparationError&) {
        throw;
    } catch (const ConvergenceError& e) {
        throw SeparationError(std::string("logistic fit failed, likely separation: ") + e.what());
    }
    if (!fit.converged)
        throw SeparationError("logistic fit did not converge in " + std::to_string(fit.iterations) +
                              " iterations; coefficients diverging (separation)");

    fit.log_likelihood = fit.loglik_trace.back();
    fill_inference(fit, d, beta, inverse_information(neg_hessian(beta)), false);

    const Eigen::VectorXd eta = d.x * beta;
    for (Eigen::Index i = 0; i < d.y.size(); ++i) {
        const double p = sigmoid(eta[i]);
        fit.pearson_chi2 += (d.y[i] - p) * (d.y[i] - p) / (p * (1.0 - p));
    }
    fit.deviance = -2.0 * fit.log_likelihood;
    if (intercept) {
        const double n = static_cast<double>(d.y.size());
        fit.null_log_likelihood = n * (ybar * std::log(ybar) + (1.0 - ybar) * std::log1p(-ybar));
        fit.pseudo_r2 = 1.0 - fit.log_likelihood / *fit.null_log_likelihood;
    }
    return fit;
}

FitResult fit_ols(const Design& d) {
    require_full_rank(d);
    const Eigen::Index n = d.x.rows();
    const Eigen::Index p = d.x.cols();
    if (n <= p) throw RankDeficientError("OLS needs more rows than columns");

    FitResult fit;
    fit.family = Family::Ols;
    fit.stat_name = "t";
    set_dims(fit, d);

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(d.x);
    const Eigen::VectorXd beta = qr.solve(d.y);
    const Eigen::VectorXd resid = d.y - d.x * beta;
    const double rss = resid.squaredNorm();
    const double sigma2 = rss / static_cast<double>(n - p);

    const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd cov = sigma2 * rinv * rinv.transpose();
    fill_inference(fit, d, beta, cov, true);

    const bool intercept = has_intercept(d);
    const double tss = intercept ? (d.y.array() - d.y.mean()).square().sum() : d.y.squaredNorm();
    fit.r_squared = tss > 0 ? 1.0 - rss / tss : 1.0;
    if (fit.df_model > 0) {
        fit.f_statistic = rss > 0 ? ((tss - rss) / static_cast<double>(fit.df_model)) / sigma2
                                  : std::numeric_limits<double>::infinity();
    }
    const double nd = static_cast<double>(n);
    fit.log_likelihood = -0.5 * nd * (std::log(2.0 * M_PI) + std::log(rss / nd) + 1.0);
    fit.deviance = rss;
    fit.pearson_chi2 = rss;
    fit.converged = true;
    fit.iterations = 1;
    fit.gradient_norm = ols_gradient(d.x, d.y, beta).norm();
    fit.loglik_trace = {fit.log_likelihood};
    return fit;
}

FitResult fit_negbin(const FeatureTable& table, const ModelSpec& spec) {
    auto fit = fit_negbin(make_design(table, spec.covariates), spec.alpha, spec.options);
    fit.outcome = table.outcome_name;
    return fit;
}

FitResult fit_logistic(const FeatureTable& table, const ModelSpec& spec) {
    auto fit = fit_logistic(make_design(table, spec.covariates), spec.options);
    fit.outcome = table.outcome_name;
    return fit;
}

FitResult fit_ols(const FeatureTable& table, const ModelSpec& spec) {
    auto fit = fit_ols(make_design(table, spec.covariates));
    fit.outcome = table.outcome_name;
    return fit;
}

FitResult fit_model(const FeatureTable& table, const ModelSpec& spec) {
    switch (spec.family) {
        case Family::NegativeBinomial: return fit_negbin(table, spec);
        case Family::Logistic: return fit_logistic(table, spec);
        case Family::Ols: return fit_ols(table, spec);
    }
    throw std::invalid_argument("unknown family");
}

std::string fit_to_csv(const FitResult& fit) {
    std::string out = csv_row({"variable", "coef", "std err", fit.stat_name, "P>|" + fit.stat_name + "|", "ci_low",
                               "ci_high"});
    for (const auto& c : fit.coefficients) {
        out += csv_row({c.name, format_double(c.coef), format_double(c.std_err), format_double(c.stat),
                        format_double(c.p_value), format_double(c.ci_low), format_double(c.ci_high)});
    }
    out += "\n";
    out += csv_row({"family", family_name(fit.family)});
    out += csv_row({"dep_variable", fit.outcome});
    out += csv_row({"n_obs", std::to_string(fit.n_obs)});
    out += csv_row({"df_model", std::to_string(fit.df_model)});
    out += csv_row({"df_residuals", std::to_string(fit.df_residuals)});
    out += csv_row({"log_likelihood", format_double(fit.log_likelihood)});
    out += csv_row({"deviance", format_double(fit.deviance)});
    out += csv_row({"pearson_chi2", format_double(fit.pearson_chi2)});
    if (fit.family == Family::NegativeBinomial) out += csv_row({"dispersion", format_double(fit.alpha)});
    if (fit.pseudo_r2) out += csv_row({"pseudo_r2", format_double(*fit.pseudo_r2)});
    if (fit.r_squared) out += csv_row({"r_squared", format_double(*fit.r_squared)});
    if (fit.f_statistic) out += csv_row({"f_statistic", format_double(*fit.f_statistic)});
    out += csv_row({"converged", fit.converged ? "true" : "false"});
    out += csv_row({"iterations", std::to_string(fit.iterations)});
    return out;
}

nlohmann::ordered_json fit_to_json(const FitResult& fit) {
    nlohmann::ordered_json j;
    j["family"] = family_name(fit.family);
    j["dep_variable"] = fit.outcome;
    j["coefficients"] = nlohmann::ordered_json::array();
    for (const auto& c : fit.coefficients) {
        nlohmann::ordered_json row;
        row["variable"] = c.name;
        row["coef"] = c.coef;
        row["std_err"] = c.std_err;
        row[fit.stat_name] = c.stat;
        row["p_value"] = c.p_value;
        row["ci_low"] = c.ci_low;
        row["ci_high"] = c.ci_high;
        j["coefficients"].push_back(row);
    }
    auto& f = j["footer"];
    f["n_obs"] = fit.n_obs;
    f["df_model"] = fit.df_model;
    f["df_residuals"] = fit.df_residuals;
    f["log_likelihood"] = fit.log_likelihood;
    f["deviance"] = fit.deviance;
    f["pearson_chi2"] = fit.pearson_chi2;
    if (fit.family == Family::NegativeBinomial) f["dispersion"] = fit.alpha;
    if (fit.pseudo_r2) f["pseudo_r2"] = *fit.pseudo_r2;
    if (fit.r_squared) f["r_squared"] = *fit.r_squared;
    if (fit.f_statistic) f["f_statistic"] = *fit.f_statistic;
    f["converged"] = fit.converged;
    f["iterations"] = fit.iterations;
    f["standard_errors"] = fit.family == Family::Ols ? "classical"
                           : fit.information == Information::Observed ? "observed information"
                                                                       : "expected information";
    return j;
}

}  // namespace atyp
