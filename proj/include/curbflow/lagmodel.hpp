#pragma once

#include "curbflow/data_model.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <map>
#include <optional>

namespace curbflow {

// OLS of y_v^t on d_v^t, d_v^{t-1}, ..., d_v^{t-I} plus an intercept.
struct LagFit {
    std::size_t lags = 0;
    Eigen::VectorXd coef; // index k is the coefficient on d^{t-k}
    Eigen::VectorXd std_err;
    Eigen::VectorXd p_value;
    double intercept = 0.0;
    double intercept_std_err = 0.0;
    double intercept_p_value = 1.0;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd design; // without the intercept column; kept for diagnostics
    std::size_t n = 0;

    // Lag whose coefficient is smallest (most negative).
    std::size_t most_negative_lag() const;
};

// Pools every (v, t) row where speed at t and PUDO at t..t-I are present.
// With `region` set, only that region's rows are used.
LagFit fit_distributed_lag(const SpeedPanel& speed, const PudoPanel& pudo, std::size_t lags,
                           std::optional<RegionId> region = std::nullopt);

std::map<RegionId, LagFit> fit_distributed_lag_per_region(const SpeedPanel& speed, const PudoPanel& pudo,
                                                          std::size_t lags);

// `lag,coef,std_err,p_value`, one row per lag then an `intercept` row.
void write_lag_csv(std::ostream& out, const LagFit& fit);

} // namespace curbflow
