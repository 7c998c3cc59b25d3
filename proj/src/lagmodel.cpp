#include "curbflow/lagmodel.hpp"

#include "curbflow/csv.hpp"
#include "curbflow/errors.hpp"
#include "curbflow/stats.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace curbflow {

std::size_t LagFit::most_negative_lag() const {
    Eigen::Index k = 0;
    coef.minCoeff(&k);
    return static_cast<std::size_t>(k);
}

LagFit fit_distributed_lag(const SpeedPanel& speed, const PudoPanel& pudo, std::size_t lags,
                           std::optional<RegionId> region) {
    if (!(speed.values.grid() == pudo.values.grid())) throw InputError("speed and PUDO panels use different grids");
    const std::size_t count = speed.values.interval_count();
    const std::size_t width = lags + 1;

    std::vector<double> xs;
    std::vector<double> ys;
    for (RegionId v : speed.values.regions()) {
        if (region && v != *region) continue;
        if (!pudo.values.contains(v)) continue;
        const std::size_t rs = speed.values.index_of(v);
        const std::size_t rp = pudo.values.index_of(v);
        for (std::size_t t = lags; t < count; ++t) {
            if (!speed.values.has(rs, t)) continue;
            bool ok = true;
            for (std::size_t k = 0; k <= lags && ok; ++k) ok = pudo.values.has(rp, t - k);
            if (!ok) continue;
            ys.push_back(speed.values.at(rs, t));
            for (std::size_t k = 0; k <= lags; ++k) xs.push_back(pudo.values.at(rp, t - k));
        }
    }
    if (region && !speed.values.contains(*region)) {
        throw InputError("region " + std::to_string(*region) + " not in speed panel");
    }
    const std::size_t n = ys.size();
    if (n <= lags + 2) {
        throw InputError("distributed lag needs more than " + std::to_string(lags + 2) + " complete rows, got " +
                         std::to_string(n));
    }

    LagFit fit;
    fit.lags = lags;
    fit.n = n;
    fit.design = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        xs.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(n));
    const auto o = stats::ols(fit.design, y, true);
    const auto w = static_cast<Eigen::Index>(width);
    fit.intercept = o.coef(0);
    fit.intercept_std_err = o.std_err(0);
    fit.intercept_p_value = o.p_value(0);
    fit.coef = o.coef.tail(w);
    fit.std_err = o.std_err.tail(w);
    fit.p_value = o.p_value.tail(w);
    fit.residuals = o.residuals;
    return fit;
}

std::map<RegionId, LagFit> fit_distributed_lag_per_region(const SpeedPanel& speed, const PudoPanel& pudo,
                                                          std::size_t lags) {
    std::map<RegionId, LagFit> out;
    for (RegionId v : speed.values.regions()) {
        if (pudo.values.contains(v)) out.emplace(v, fit_distributed_lag(speed, pudo, lags, v));
    }
    return out;
}

void write_lag_csv(std::ostream& out, const LagFit& fit) {
    out << "lag,coef,std_err,p_value\n";
    for (std::size_t k = 0; k <= fit.lags; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        out << k << ',' << csv::format_double(fit.coef(i)) << ',' << csv::format_double(fit.std_err(i)) << ','
            << csv::format_double(fit.p_value(i)) << '\n';
    }
    out << "intercept," << csv::format_double(fit.intercept) << ',' << csv::format_double(fit.intercept_std_err) << ','
        << csv::format_double(fit.intercept_p_value) << '\n';
}

} // namespace curbflow
