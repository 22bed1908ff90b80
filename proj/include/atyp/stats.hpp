#pragma once

// Classical tests used by the matching robustness checks.

#include <cstddef>
#include <span>
#include <string>

namespace atyp {

struct TestResult {
    std::string test;
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    std::size_t excluded = 0;
};

// Two-sided Student-t test of mean(a - b) = 0 with n - 1 df.
TestResult paired_t_test(std::span<const double> a, std::span<const double> b);
// Two-sided Student-t test of mean(x) = mu0 with n - 1 df.
TestResult one_sample_t_test(std::span<const double> x, double mu0);
// Exact two-sided binomial sign test; ties are not counted. statistic is the
// number of positive signs.
TestResult sign_test(std::size_t positive, std::size_t negative);

double student_t_two_sided_p(double t, double df);
// P(X <= upto) for X ~ Binomial(n, 1/2).
double binomial_half_cdf(std::size_t n, std::size_t upto);

}  // namespace atyp
