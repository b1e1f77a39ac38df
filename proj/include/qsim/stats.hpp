#pragma once

#include <cstddef>
#include <vector>

namespace qsim::stats {

// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

// Survival of a chi-square statistic with `dof` degrees of freedom.
double chi_square_pvalue(double statistic, double dof);

// Chi-square goodness-of-fit p-value for observed counts against expected
// counts (same length, expected > 0).
double chi_square_gof(const std::vector<double>& observed,
                      const std::vector<double>& expected);

// Asymptotic p-value of the one-sample Kolmogorov-Smirnov statistic D for n
// samples.
double ks_pvalue(double d, std::size_t n);

// KS test of `samples` against the Exp(1) CDF. Returns {D, p}.
struct KsResult {
  double statistic;
  double pvalue;
};
KsResult ks_test_exp1(std::vector<double> samples);

}  // namespace qsim::stats
