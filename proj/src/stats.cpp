#include "curbflow/stats.hpp"

#include "curbflow/errors.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace curbflow::stats {

OlsFit ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool intercept) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols() + (intercept ? 1 : 0);
    if (n != y.size()) throw InputError("OLS: row count mismatch");
    if (n <= p) {
        throw InputError("OLS needs more rows (" + std::to_string(n) + ") than coefficients (" + std::to_string(p) + ")");
    }
    Eigen::MatrixXd design(n, p);
    if (intercept) {
        design.col(0).setOnes();
        design.rightCols(x.cols()) = x;
    } else {
        design = x;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
        throw SingularDesign("OLS design is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                             std::to_string(p) + ")");
    }

    OlsFit fit;
    fit.n = static_cast<std::size_t>(n);
    fit.coef = qr.solve(y);
    fit.residuals = y - design * fit.coef;
    fit.rss = fit.residuals.squaredNorm();
    fit.dof = static_cast<double>(n - p);
    const double sigma2 = fit.rss / fit.dof;

    // (X'X)^-1 from the R factor: X P = Q R  =>  (X'X)^-1 = P R^-1 R^-T P'.
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd inner = r_inv * r_inv.transpose();
    const auto perm = qr.colsPermutation();
    fit.covariance = sigma2 * (perm * inner * perm.transpose());

    fit.std_err = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    fit.t_stat.resize(p);
    fit.p_value.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        if (fit.std_err(j) > 0.0) {
            fit.t_stat(j) = fit.coef(j) / fit.std_err(j);
            fit.p_value(j) = two_sided_p(fit.t_stat(j), fit.dof);
        } else {
            fit.t_stat(j) = fit.coef(j) == 0.0 ? 0.0 : std::copysign(INFINITY, fit.coef(j));
            fit.p_value(j) = fit.coef(j) == 0.0 ? 1.0 : 0.0;
        }
    }
    return fit;
}

double two_sided_p(double t_stat, double dof) {
    if (!std::isfinite(t_stat)) return 0.0;
    if (!(dof > 0.0)) throw InputError("t distribution needs positive degrees of freedom");
    const boost::math::students_t dist(dof);
    const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t_stat)));
    return std::clamp(p, 0.0, 1.0);
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InputError("correlation needs equal-length inputs");
    if (a.size() < 3) throw InputError("correlation needs at least 3 pairs");
    const double n = static_cast<double>(a.size());
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw NumericalError("correlation undefined: zero variance");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace curbflow::stats
