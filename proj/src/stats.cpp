#include "atyp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace atyp {

double student_t_two_sided_p(double t, double df) {
    if (std::isnan(t)) return 1.0;
    if (std::isinf(t)) return 0.0;
    boost::math::students_t dist(df);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

namespace {

TestResult t_from_values(std::span<const double> d, double mu0, const char* name) {
    const std::size_t n = d.size();
    if (n < 2) throw std::invalid_argument(std::string(name) + " needs at least 2 observations");
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    TestResult r;
    r.test = name;
    r.n = n;
    const double diff = mean - mu0;
    if (sd == 0.0) {
        // Constant sample: no evidence when it sits on mu0, certainty otherwise.
        r.statistic = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
        r.p_value = diff == 0.0 ? 1.0 : 0.0;
        return r;
    }
    r.statistic = diff / (sd / std::sqrt(static_cast<double>(n)));
    r.p_value = student_t_two_sided_p(r.statistic, static_cast<double>(n - 1));
    return r;
}

}  // namespace

TestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("paired t-test: samples differ in length");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return t_from_values(d, 0.0, "paired_t");
}

TestResult one_sample_t_test(std::span<const double> x, double mu0) { return t_from_values(x, mu0, "one_sample_t"); }

double binomial_half_cdf(std::size_t n, std::size_t upto) {
    const double nd = static_cast<double>(n);
    const double log_half_n = -nd * std::log(2.0);
    double total = 0.0;
    for (std::size_t k = 0; k <= std::min(upto, n); ++k) {
        const double kd = static_cast<double>(k);
        total += std::exp(std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) + log_half_n);
    }
    return std::min(total, 1.0);
}

TestResult sign_test(std::size_t positive, std::size_t negative) {
    TestResult r;
    r.test = "sign";
    r.n = positive + negative;
    r.statistic = static_cast<double>(positive);
    if (r.n == 0) {
        r.p_value = 1.0;
        return r;
    }
    r.p_value = std::min(1.0, 2.0 * binomial_half_cdf(r.n, std::min(positive, negative)));
    return r;
}

}  // namespace atyp
