#pragma once

#include "curbflow/data_model.hpp"
#include "curbflow/ingest.hpp"
#include "curbflow/learners.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace curbflow {

// Held-out residuals for one (region, interval). `fold` is the index of the
// held-out fold the pair was produced on; `row` is its position in the
// region dataset.
struct ResidualPair {
    RegionId region = 0;
    std::size_t t = 0;
    std::size_t row = 0;
    std::size_t fold = 0;
    double eps_hat = 0.0; // speed residual (mph)
    double xi_hat = 0.0;  // NoPUDO residual (count)
    std::vector<double> conditions; // CATE condition vector X_t, empty when unused
};

struct EffectEstimate {
    RegionId region = 0;
    double theta_hat = 0.0; // mph per PUDO
    double std_err = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    DayClass day_class = DayClass::weekday;
    double intercept = 0.0; // only non-zero in intercept mode
};

struct CateEstimate {
    RegionId region = 0;
    std::vector<std::string> condition_names;
    Eigen::VectorXd beta;
    Eigen::VectorXd beta_std_err;
    std::vector<std::pair<std::size_t, double>> theta_series; // (t, X_t . beta)
};

// Partition of row positions [0, rows) into b folds of near-equal size
// (sizes differ by at most one, larger folds first). Deterministic per seed.
std::vector<std::vector<std::size_t>> split_folds(std::size_t rows, std::size_t b, std::uint64_t seed);

// Which part of the data each nuisance model sees.
enum class CrossFitMode {
    cross_fit,   // Algorithm as published: b folds, complement halves for Y and D
    full_sample, // no splitting; both models fit and evaluated on every row (tests only)
};

// Components of the CATE condition vector.
enum class ConditionTerm { constant, own_speed_z, neighbor_speed_z, control, control_z };

struct ConditionSpec {
    ConditionTerm term = ConditionTerm::constant;
    std::size_t control_index = 0; // for control / control_z
};

// [1, z(y_v^t), z(mean neighbor speed at t), first control]; the last entry
// is omitted when there are no controls.
std::vector<ConditionSpec> default_cate_conditions(std::size_t control_arity);

struct DsmlConfig {
    std::size_t lags = 10;
    std::size_t folds = 5;
    std::vector<RegressorSpec> candidates_y = default_tree_grid();
    std::vector<RegressorSpec> candidates_d = default_tree_grid();
    DayClass day_class = DayClass::weekday;
    std::uint64_t seed = 20240101;
    bool strict_nested_cv = false;
    bool intercept = false;
    bool cate = false;
    std::vector<ConditionSpec> cate_conditions; // empty -> default_cate_conditions
    CrossFitMode mode = CrossFitMode::cross_fit;
    std::size_t jobs = 1;
    std::size_t min_rows = 0; // 0 -> 2 * folds * (2 + lags)
};

// Per-fold record of what was trained on which rows, kept for provenance
// checks.
struct FoldRecord {
    std::size_t fold = 0;
    std::vector<std::size_t> held_out;
    std::vector<std::size_t> train_y;
    std::vector<std::size_t> train_d;
    RegressorSpec chosen_y;
    RegressorSpec chosen_d;
    double val_mse_y = 0.0;
    double val_mse_d = 0.0;
};

struct FoldResiduals {
    FoldRecord record;
    std::vector<ResidualPair> pairs;
};

// Trains Model Y on the first half of `complement` and Model D on the second
// half (split at random from `seed`), selects each among its candidates by MSE
// on `held_out`, and returns residuals on `held_out` only.
FoldResiduals fit_fold_residuals(const RegionDataset& data, std::size_t fold, std::span<const std::size_t> held_out,
                                 std::span<const std::size_t> complement, const DsmlConfig& config,
                                 std::uint64_t seed);

// Model Z: through-origin OLS of eps_hat on xi_hat (or with intercept when
// requested), with a Student-t p-value on n-1 (n-2 with intercept) degrees of
// freedom.
EffectEstimate estimate_theta(std::span<const ResidualPair> pairs, bool intercept = false);

// OLS of eps_hat on the products X_t * xi_hat, no intercept.
CateEstimate estimate_cate(std::span<const ResidualPair> pairs, std::vector<std::string> condition_names = {});

struct RegionDsml {
    EffectEstimate estimate;
    std::vector<ResidualPair> residuals; // merged across folds, sorted by t
    std::vector<FoldRecord> folds;
    std::optional<CateEstimate> cate;
};

struct DsmlResult {
    std::map<RegionId, RegionDsml> regions;
    std::map<RegionId, std::string> skipped; // region -> reason

    std::map<RegionId, EffectEstimate> estimates() const;
};

// Runs the estimator independently for every region of `graph` that has
// panel data. Regions without enough usable rows are reported in `skipped`.
DsmlResult run_dsml(const SpeedPanel& speed, const PudoPanel& pudo, const ControlPanel* controls,
                    const RegionGraph& graph, const DsmlConfig& config);

// Single-region entry point used by run_dsml.
RegionDsml run_dsml_region(const RegionDataset& data, const DsmlConfig& config, const ControlPanel* controls);

} // namespace curbflow
