#pragma once

#include "curbflow/ingest.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace curbflow {

enum class LearnerFamily { tree_ensemble, ridge_linear };

std::string_view to_string(LearnerFamily f);
LearnerFamily parse_learner_family(std::string_view text);

// Family plus hyperparameters. Tree fields apply to tree_ensemble (gradient
// boosted least-squares trees); ridge_lambda applies to ridge_linear.
struct RegressorSpec {
    LearnerFamily family = LearnerFamily::ridge_linear;
    int n_trees = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    int min_samples_leaf = 5;
    double ridge_lambda = 0.0;

    void validate() const;
    std::string label() const;

    static RegressorSpec ridge(double lambda);
    static RegressorSpec trees(int n_trees, int max_depth, double learning_rate, int min_samples_leaf = 5);

    friend bool operator==(const RegressorSpec&, const RegressorSpec&) = default;
};

// Default candidate grids: boosted trees over shrinkage {0.05, 0.1} x trees
// {50, 200} at depth 3, and ridge over a small penalty ladder.
std::vector<RegressorSpec> default_tree_grid();
std::vector<RegressorSpec> default_ridge_grid();

struct Selection;

namespace detail {
struct RidgeState;
struct TreeEnsembleState;
} // namespace detail

// Immutable fitted model. Predictions are only accepted for the layout the
// model was trained on.
class FittedRegressor {
public:
    FittedRegressor();
    ~FittedRegressor();
    FittedRegressor(const FittedRegressor&);
    FittedRegressor& operator=(const FittedRegressor&);
    FittedRegressor(FittedRegressor&&) noexcept;
    FittedRegressor& operator=(FittedRegressor&&) noexcept;

    const RegressorSpec& spec() const { return spec_; }
    const FeatureLayout& layout() const { return layout_; }
    double training_mse() const { return training_mse_; }

    Eigen::VectorXd predict(const Eigen::MatrixXd& x, const FeatureLayout& layout) const;
    Eigen::VectorXd predict(const FeatureMatrix& fm) const { return predict(fm.x, fm.layout); }

    // Predictions using only the first `n_trees` boosting stages. Ridge models
    // ignore the argument.
    Eigen::VectorXd predict_staged(const Eigen::MatrixXd& x, const FeatureLayout& layout, int n_trees) const;

    // Ridge only: coefficients on the original feature scale and intercept.
    const Eigen::VectorXd& coefficients() const;
    double intercept() const;

    // Versioned text format; see README for the layout.
    void save(std::ostream& out) const;
    static FittedRegressor load(std::istream& in);

    friend FittedRegressor fit(const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const FeatureLayout& layout, std::uint64_t seed);
    friend Selection select_and_fit(std::span<const RegressorSpec> candidates, const Eigen::MatrixXd& train_x,
                                    const Eigen::VectorXd& train_y, const Eigen::MatrixXd& val_x,
                                    const Eigen::VectorXd& val_y, const FeatureLayout& layout, std::uint64_t seed);

private:
    void check_layout(const Eigen::MatrixXd& x, const FeatureLayout& layout) const;

    RegressorSpec spec_;
    FeatureLayout layout_;
    double training_mse_ = 0.0;
    std::unique_ptr<detail::RidgeState> ridge_;
    std::unique_ptr<detail::TreeEnsembleState> trees_;
};

// Requires at least two rows. Ridge with lambda = 0 on a rank-deficient design
// throws SingularDesign. Deterministic for a fixed (spec, data, seed).
FittedRegressor fit(const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    const FeatureLayout& layout, std::uint64_t seed);

inline FittedRegressor fit(const RegressorSpec& spec, const FeatureMatrix& fm, std::uint64_t seed) {
    return fit(spec, fm.x, fm.y, fm.layout, seed);
}

inline Eigen::VectorXd predict(const FittedRegressor& model, const FeatureMatrix& fm) { return model.predict(fm); }

double mean_squared_error(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred);

struct Selection {
    std::size_t index = 0; // position in the candidate list
    RegressorSpec spec;
    FittedRegressor model;
    double validation_mse = 0.0;
};

// Fits every candidate on (train_x, train_y) and keeps the one with the lowest
// validation MSE; ties go to the earlier candidate. Tree candidates that
// differ only in tree count share one boosting run.
Selection select_and_fit(std::span<const RegressorSpec> candidates, const Eigen::MatrixXd& train_x,
                         const Eigen::VectorXd& train_y, const Eigen::MatrixXd& val_x, const Eigen::VectorXd& val_y,
                         const FeatureLayout& layout, std::uint64_t seed);

RegressorSpec select_model(std::span<const RegressorSpec> candidates, const FeatureMatrix& train,
                           const FeatureMatrix& val, std::uint64_t seed);

} // namespace curbflow
