#include "curbflow/dsml.hpp"

#include "curbflow/errors.hpp"
#include "curbflow/log.hpp"
#include "curbflow/parallel.hpp"
#include "curbflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace curbflow {

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
    return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& v, std::span<const std::size_t> idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
    return out;
}

std::vector<std::size_t> shuffled(std::span<const std::size_t> rows, std::uint64_t seed) {
    std::vector<std::size_t> out(rows.begin(), rows.end());
    std::mt19937_64 rng(seed);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

// Picks a candidate on `val` and returns the model fit on `train`. Under
// strict nested CV the choice is made on an inner 80/20 split of `train`, so
// `val` never influences it.
Selection choose(std::span<const RegressorSpec> candidates, const FeatureMatrix& fm, std::span<const std::size_t> train,
                 std::span<const std::size_t> val, bool strict, std::uint64_t seed) {
    if (candidates.empty()) throw InputError("no candidate learners configured");
    const Eigen::MatrixXd tx = take_rows(fm.x, train);
    const Eigen::VectorXd ty = take(fm.y, train);
    if (!strict) {
        return select_and_fit(candidates, tx, ty, take_rows(fm.x, val), take(fm.y, val), fm.layout, seed);
    }

    const auto order = shuffled(train, stats::mix_seed(seed, 7));
    const std::size_t inner = std::max<std::size_t>(2, (order.size() * 4) / 5);
    if (inner + 1 > order.size()) throw InputError("training half too small for nested validation");
    const std::span<const std::size_t> in_train(order.data(), inner);
    const std::span<const std::size_t> in_val(order.data() + inner, order.size() - inner);
    const Selection inner_pick = select_and_fit(candidates, take_rows(fm.x, in_train), take(fm.y, in_train),
                                                take_rows(fm.x, in_val), take(fm.y, in_val), fm.layout, seed);
    Selection out;
    out.index = inner_pick.index;
    out.spec = inner_pick.spec;
    out.model = fit(out.spec, tx, ty, fm.layout, seed);
    out.validation_mse = mean_squared_error(take(fm.y, val), out.model.predict(take_rows(fm.x, val), fm.layout));
    return out;
}

FoldResiduals residuals_on(const RegionDataset& data, std::size_t fold, std::span<const std::size_t> held_out,
                           std::vector<std::size_t> train_y, std::vector<std::size_t> train_d,
                           const DsmlConfig& config, std::uint64_t seed) {
    const Selection sy = choose(config.candidates_y, data.speed_features, train_y, held_out, config.strict_nested_cv,
                                stats::mix_seed(seed, 2));
    const Selection sd = choose(config.candidates_d, data.pudo_features, train_d, held_out, config.strict_nested_cv,
                                stats::mix_seed(seed, 3));

    const Eigen::VectorXd y_hat = sy.model.predict(take_rows(data.speed_features.x, held_out), data.speed_features.layout);
    const Eigen::VectorXd d_hat = sd.model.predict(take_rows(data.pudo_features.x, held_out), data.pudo_features.layout);

    FoldResiduals out;
    out.record.fold = fold;
    out.record.held_out.assign(held_out.begin(), held_out.end());
    out.record.train_y = std::move(train_y);
    out.record.train_d = std::move(train_d);
    out.record.chosen_y = sy.spec;
    out.record.chosen_d = sd.spec;
    out.record.val_mse_y = sy.validation_mse;
    out.record.val_mse_d = sd.validation_mse;

    out.pairs.reserve(held_out.size());
    for (std::size_t i = 0; i < held_out.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(held_out[i]);
        const auto k = static_cast<Eigen::Index>(i);
        ResidualPair p;
        p.region = data.region;
        p.row = held_out[i];
        p.t = data.speed_features.intervals[held_out[i]];
        p.fold = fold;
        p.eps_hat = data.speed_features.y(r) - y_hat(k);
        p.xi_hat = data.pudo_features.y(r) - d_hat(k);
        out.pairs.push_back(std::move(p));
    }
    return out;
}

std::vector<double> zscore(std::vector<double> v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / n);
    for (double& x : v) x = sd > 0.0 ? (x - mean) / sd : 0.0;
    return v;
}

std::string condition_name(const ConditionSpec& c, const ControlPanel* controls) {
    auto control = [&] {
        if (!controls || c.control_index >= controls->arity()) {
            throw InputError("CATE condition refers to control " + std::to_string(c.control_index) +
                             " but only " + std::to_string(controls ? controls->arity() : 0) + " exist");
        }
        return controls->names[c.control_index];
    };
    switch (c.term) {
    case ConditionTerm::constant: return "const";
    case ConditionTerm::own_speed_z: return "own_speed_z";
    case ConditionTerm::neighbor_speed_z: return "neighbor_speed_z";
    case ConditionTerm::control: return control();
    case ConditionTerm::control_z: return control() + "_z";
    }
    return "?";
}

// Condition vectors for every dataset row; z-scores use the region's own rows.
std::vector<std::vector<double>> condition_rows(const RegionDataset& data, std::span<const ConditionSpec> spec,
                                                const ControlPanel* controls) {
    const std::size_t n = data.rows();
    std::vector<std::vector<double>> columns;
    for (const auto& c : spec) {
        condition_name(c, controls);
        std::vector<double> col(n);
        switch (c.term) {
        case ConditionTerm::constant: std::fill(col.begin(), col.end(), 1.0); break;
        case ConditionTerm::own_speed_z:
            for (std::size_t i = 0; i < n; ++i) col[i] = data.speed_features.y(static_cast<Eigen::Index>(i));
            col = zscore(std::move(col));
            break;
        case ConditionTerm::neighbor_speed_z:
            for (std::size_t i = 0; i < n; ++i) {
                col[i] = data.neighbor_speed_now[i];
                if (std::isnan(col[i])) {
                    throw InputError("region " + std::to_string(data.region) + ": neighbor speed missing at t=" +
                                     std::to_string(data.speed_features.intervals[i]));
                }
            }
            col = zscore(std::move(col));
            break;
        case ConditionTerm::control:
        case ConditionTerm::control_z: {
            const std::size_t ri = controls->values.index_of(data.region);
            for (std::size_t i = 0; i < n; ++i) {
                col[i] = controls->values.at(ri, data.speed_features.intervals[i], c.control_index);
            }
            if (c.term == ConditionTerm::control_z) col = zscore(std::move(col));
            break;
        }
        }
        columns.push_back(std::move(col));
    }
    std::vector<std::vector<double>> rows(n, std::vector<double>(spec.size()));
    for (std::size_t j = 0; j < spec.size(); ++j) {
        for (std::size_t i = 0; i < n; ++i) rows[i][j] = columns[j][i];
    }
    return rows;
}

std::size_t minimum_rows(const DsmlConfig& config) {
    if (config.min_rows > 0) return config.min_rows;
    return 2 * std::max<std::size_t>(config.folds, 2) * (2 + config.lags);
}

} // namespace

std::vector<std::vector<std::size_t>> split_folds(std::size_t rows, std::size_t b, std::uint64_t seed) {
    if (b < 2) throw InputError("cross-fitting needs at least 2 folds, got " + std::to_string(b));
    if (rows < 2 * b) {
        throw InputError("too few rows (" + std::to_string(rows) + ") for " + std::to_string(b) + " folds");
    }
    std::vector<std::size_t> idx(rows);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::vector<std::size_t>> folds(b);
    for (std::size_t i = 0; i < rows; ++i) folds[i % b].push_back(idx[i]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

std::vector<ConditionSpec> default_cate_conditions(std::size_t control_arity) {
    std::vector<ConditionSpec> out{{ConditionTerm::constant, 0},
                                   {ConditionTerm::own_speed_z, 0},
                                   {ConditionTerm::neighbor_speed_z, 0}};
    if (control_arity > 0) out.push_back({ConditionTerm::control, 0});
    return out;
}

FoldResiduals fit_fold_residuals(const RegionDataset& data, std::size_t fold, std::span<const std::size_t> held_out,
                                 std::span<const std::size_t> complement, const DsmlConfig& config,
                                 std::uint64_t seed) {
    if (held_out.empty()) throw InputError("fold " + std::to_string(fold) + " has no rows");
    const auto order = shuffled(complement, stats::mix_seed(seed, 1));
    const std::size_t half = (order.size() + 1) / 2;
    if (half == 0 || half == order.size()) {
        throw InputError("fold " + std::to_string(fold) + ": complement too small to split into two halves");
    }
    std::vector<std::size_t> first(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
    std::vector<std::size_t> second(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    return residuals_on(data, fold, held_out, std::move(first), std::move(second), config, seed);
}

EffectEstimate estimate_theta(std::span<const ResidualPair> pairs, bool intercept) {
    const std::size_t n = pairs.size();
    if (n < 3) throw InputError("Model Z needs at least 3 residual pairs, got " + std::to_string(n));
    EffectEstimate est;
    est.region = pairs.front().region;
    est.n = n;

    if (intercept) {
        Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 1);
        Eigen::VectorXd y(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            x(static_cast<Eigen::Index>(i), 0) = pairs[i].xi_hat;
            y(static_cast<Eigen::Index>(i)) = pairs[i].eps_hat;
        }
        const auto f = stats::ols(x, y, true);
        est.intercept = f.coef(0);
        est.theta_hat = f.coef(1);
        est.std_err = f.std_err(1);
        est.t_stat = f.t_stat(1);
        est.p_value = f.p_value(1);
        return est;
    }

    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& p : pairs) {
        sxx += p.xi_hat * p.xi_hat;
        sxy += p.xi_hat * p.eps_hat;
    }
    if (!(sxx > 0.0)) throw NumericalError("slope undefined: every PUDO residual is zero");
    est.theta_hat = sxy / sxx;
    double rss = 0.0;
    for (const auto& p : pairs) {
        const double r = p.eps_hat - est.theta_hat * p.xi_hat;
        rss += r * r;
    }
    const double dof = static_cast<double>(n - 1);
    est.std_err = std::sqrt(rss / dof / sxx);
    if (est.std_err > 0.0) {
        est.t_stat = est.theta_hat / est.std_err;
        est.p_value = stats::two_sided_p(est.t_stat, dof);
    } else {
        est.t_stat = est.theta_hat == 0.0 ? 0.0 : std::copysign(INFINITY, est.theta_hat);
        est.p_value = est.theta_hat == 0.0 ? 1.0 : 0.0;
    }
    return est;
}

CateEstimate estimate_cate(std::span<const ResidualPair> pairs, std::vector<std::string> condition_names) {
    if (pairs.empty()) throw InputError("CATE needs residual pairs");
    const std::size_t q = pairs.front().conditions.size();
    if (q == 0) throw InputError("CATE needs a non-empty condition vector");
    if (!condition_names.empty() && condition_names.size() != q) {
        throw InputError("CATE condition names do not match condition arity");
    }
    const auto n = static_cast<Eigen::Index>(pairs.size());
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(q));
    Eigen::VectorXd y(n);
    bool any_xi = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = pairs[static_cast<std::size_t>(i)];
        if (p.conditions.size() != q) throw InputError("CATE condition arity differs between rows");
        for (std::size_t j = 0; j < q; ++j) x(i, static_cast<Eigen::Index>(j)) = p.conditions[j] * p.xi_hat;
        y(i) = p.eps_hat;
        any_xi = any_xi || p.xi_hat != 0.0;
    }
    if (!any_xi) throw NumericalError("CATE undefined: every PUDO residual is zero");
    const auto f = stats::ols(x, y, false);

    CateEstimate out;
    out.region = pairs.front().region;
    out.condition_names = std::move(condition_names);
    out.beta = f.coef;
    out.beta_std_err = f.std_err;
    out.theta_series.reserve(pairs.size());
    for (const auto& p : pairs) {
        double theta = 0.0;
        for (std::size_t j = 0; j < q; ++j) theta += p.conditions[j] * out.beta(static_cast<Eigen::Index>(j));
        out.theta_series.emplace_back(p.t, theta);
    }
    return out;
}

RegionDsml run_dsml_region(const RegionDataset& data, const DsmlConfig& config, const ControlPanel* controls) {
    const std::uint64_t seed = stats::mix_seed(config.seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(data.region)));
    const std::size_t n = data.rows();
    RegionDsml out;

    if (config.mode == CrossFitMode::full_sample) {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        auto fr = residuals_on(data, 0, all, all, all, config, seed);
        out.folds.push_back(std::move(fr.record));
        out.residuals = std::move(fr.pairs);
    } else {
        const auto folds = split_folds(n, config.folds, seed);
        for (std::size_t i = 0; i < folds.size(); ++i) {
            std::vector<std::size_t> complement;
            complement.reserve(n - folds[i].size());
            for (std::size_t j = 0; j < folds.size(); ++j) {
                if (j != i) complement.insert(complement.end(), folds[j].begin(), folds[j].end());
            }
            std::sort(complement.begin(), complement.end());
            auto fr = fit_fold_residuals(data, i, folds[i], complement, config, stats::mix_seed(seed, 100 + i));
            out.folds.push_back(std::move(fr.record));
            out.residuals.insert(out.residuals.end(), std::make_move_iterator(fr.pairs.begin()),
                                 std::make_move_iterator(fr.pairs.end()));
        }
        std::sort(out.residuals.begin(), out.residuals.end(),
                  [](const ResidualPair& a, const ResidualPair& b) { return a.t < b.t; });
    }

    out.estimate = estimate_theta(out.residuals, config.intercept);
    out.estimate.region = data.region;
    out.estimate.day_class = config.day_class;

    if (config.cate) {
        const auto spec = config.cate_conditions.empty()
                              ? default_cate_conditions(controls ? controls->arity() : 0)
                              : config.cate_conditions;
        const auto rows = condition_rows(data, spec, controls);
        for (auto& p : out.residuals) p.conditions = rows[p.row];
        std::vector<std::string> names;
        for (const auto& c : spec) names.push_back(condition_name(c, controls));
        out.cate = estimate_cate(out.residuals, std::move(names));
    }
    return out;
}

std::map<RegionId, EffectEstimate> DsmlResult::estimates() const {
    std::map<RegionId, EffectEstimate> out;
    for (const auto& [v, r] : regions) out.emplace(v, r.estimate);
    return out;
}

DsmlResult run_dsml(const SpeedPanel& speed, const PudoPanel& pudo, const ControlPanel* controls,
                    const RegionGraph& graph, const DsmlConfig& config) {
    const auto& ids = graph.regions();
    std::vector<std::optional<RegionDsml>> done(ids.size());
    std::vector<std::string> reasons(ids.size());
    const std::size_t min_rows = minimum_rows(config);
    log::info("dsml: ", ids.size(), " regions, I=", config.lags, " b=", config.folds, " seed=", config.seed);

    parallel_for(ids.size(), config.jobs, [&](std::size_t i) {
        const RegionId v = ids[i];
        if (!speed.values.contains(v) || !pudo.values.contains(v)) {
            reasons[i] = "no panel data";
            return;
        }
        try {
            const RegionDataset data = build_region_dataset(speed, pudo, controls, graph, v, config.lags);
            if (data.rows() < min_rows) {
                reasons[i] = "insufficient rows (" + std::to_string(data.rows()) + " < " + std::to_string(min_rows) + ")";
                return;
            }
            done[i] = run_dsml_region(data, config, controls);
        } catch (const InputError& e) {
            reasons[i] = e.what();
        } catch (const NumericalError& e) {
            reasons[i] = e.what();
        }
    });

    DsmlResult result;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (done[i]) {
            result.regions.emplace(ids[i], std::move(*done[i]));
        } else {
            log::warn("region ", ids[i], " skipped: ", reasons[i]);
            result.skipped.emplace(ids[i], reasons[i]);
        }
    }
    return result;
}

} // namespace curbflow
