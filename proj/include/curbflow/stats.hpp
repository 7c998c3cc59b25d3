#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>

namespace curbflow::stats {

struct OlsFit {
    Eigen::VectorXd coef;    // intercept first when fitted with one
    Eigen::VectorXd std_err; // homoskedastic
    Eigen::VectorXd t_stat;
    Eigen::VectorXd p_value; // two-sided, Student t with `dof` degrees of freedom
    Eigen::MatrixXd covariance;
    Eigen::VectorXd residuals;
    double rss = 0.0;
    double dof = 0.0;
    std::size_t n = 0;
};

// Ordinary least squares of y on the columns of x (plus a leading intercept
// column when `intercept`). Throws SingularDesign when the design is rank
// deficient and InputError when n <= number of coefficients.
OlsFit ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool intercept);

// Two-sided p-value of a t statistic.
double two_sided_p(double t_stat, double dof);

double pearson(std::span<const double> a, std::span<const double> b);

// splitmix64 finaliser, used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

} // namespace curbflow::stats
