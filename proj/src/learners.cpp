#include "curbflow/learners.hpp"

#include "curbflow/csv.hpp"
#include "curbflow/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

namespace curbflow {

std::string_view to_string(LearnerFamily f) { return f == LearnerFamily::ridge_linear ? "ridge_linear" : "tree_ensemble"; }

LearnerFamily parse_learner_family(std::string_view text) {
    if (text == "ridge_linear" || text == "ridge") return LearnerFamily::ridge_linear;
    if (text == "tree_ensemble" || text == "trees" || text == "gbrt") return LearnerFamily::tree_ensemble;
    throw InputError("unknown learner family '" + std::string(text) + "'");
}

void RegressorSpec::validate() const {
    if (family == LearnerFamily::ridge_linear) {
        if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda)) throw InputError("ridge penalty must be >= 0");
        return;
    }
    if (n_trees < 1) throw InputError("tree count must be positive");
    if (max_depth < 1 || max_depth > 12) throw InputError("tree depth must be in [1, 12]");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw InputError("learning rate must be in (0, 1]");
    if (min_samples_leaf < 1) throw InputError("min_samples_leaf must be positive");
}

std::string RegressorSpec::label() const {
    std::ostringstream os;
    if (family == LearnerFamily::ridge_linear) {
        os << "ridge(lambda=" << ridge_lambda << ")";
    } else {
        os << "gbrt(trees=" << n_trees << ",depth=" << max_depth << ",lr=" << learning_rate
           << ",min_leaf=" << min_samples_leaf << ")";
    }
    return os.str();
}

RegressorSpec RegressorSpec::ridge(double lambda) {
    RegressorSpec s;
    s.family = LearnerFamily::ridge_linear;
    s.ridge_lambda = lambda;
    return s;
}

RegressorSpec RegressorSpec::trees(int n_trees, int max_depth, double learning_rate, int min_samples_leaf) {
    RegressorSpec s;
    s.family = LearnerFamily::tree_ensemble;
    s.n_trees = n_trees;
    s.max_depth = max_depth;
    s.learning_rate = learning_rate;
    s.min_samples_leaf = min_samples_leaf;
    return s;
}

std::vector<RegressorSpec> default_tree_grid() {
    std::vector<RegressorSpec> grid;
    for (double lr : {0.05, 0.1}) {
        for (int n : {50, 200}) grid.push_back(RegressorSpec::trees(n, 3, lr));
    }
    return grid;
}

std::vector<RegressorSpec> default_ridge_grid() {
    return {RegressorSpec::ridge(0.0), RegressorSpec::ridge(1.0), RegressorSpec::ridge(100.0)};
}

namespace detail {

struct RidgeState {
    Eigen::VectorXd coef; // original feature scale
    double intercept = 0.0;
};

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct TreeEnsembleState {
    double base = 0.0;
    std::vector<std::vector<TreeNode>> trees;

    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row, std::size_t n_trees) const {
        double out = base;
        const std::size_t limit = std::min(n_trees, trees.size());
        for (std::size_t k = 0; k < limit; ++k) {
            const auto& nodes = trees[k];
            int cur = 0;
            while (nodes[static_cast<std::size_t>(cur)].feature >= 0) {
                const auto& n = nodes[static_cast<std::size_t>(cur)];
                cur = row(n.feature) <= n.threshold ? n.left : n.right;
            }
            out += nodes[static_cast<std::size_t>(cur)].value;
        }
        return out;
    }
};

} // namespace detail

namespace {

// ------------------------------------------------------------------ ridge

detail::RidgeState fit_ridge(double lambda, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    const double y_mean = y.mean();
    const Eigen::RowVectorXd mean = x.colwise().mean();

    // z-score with training statistics; zero-variance columns carry no
    // information and get coefficient zero.
    std::vector<Eigen::Index> active;
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double var = (x.col(j).array() - mean(j)).square().sum() / static_cast<double>(n);
        const double sd = std::sqrt(var);
        if (sd > 1e-12 * std::max(1.0, std::abs(mean(j)))) {
            scale(j) = sd;
            active.push_back(j);
        }
    }

    detail::RidgeState state;
    state.coef = Eigen::VectorXd::Zero(p);
    if (!active.empty()) {
        const auto q = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd z(n, q);
        for (Eigen::Index k = 0; k < q; ++k) {
            const Eigen::Index j = active[static_cast<std::size_t>(k)];
            z.col(k) = (x.col(j).array() - mean(j)) / scale(j);
        }
        const Eigen::VectorXd yc = y.array() - y_mean;
        Eigen::VectorXd beta;
        if (lambda == 0.0) {
            if (n <= q) throw SingularDesign("least-squares design has fewer rows than columns");
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
            qr.setThreshold(1e-10);
            if (qr.rank() < q) {
                throw SingularDesign("singular design: rank " + std::to_string(qr.rank()) + " < " +
                                     std::to_string(q) + " columns with ridge penalty 0");
            }
            beta = qr.solve(yc);
        } else {
            Eigen::MatrixXd gram = z.transpose() * z;
            gram.diagonal().array() += lambda;
            beta = gram.ldlt().solve(z.transpose() * yc);
        }
        for (Eigen::Index k = 0; k < q; ++k) {
            const Eigen::Index j = active[static_cast<std::size_t>(k)];
            state.coef(j) = beta(k) / scale(j);
        }
    }
    state.intercept = y_mean - mean.dot(state.coef);
    return state;
}

// ----------------------------------------------------- gradient boosting

constexpr int kMaxBins = 64;

struct BinnedData {
    std::vector<std::vector<double>> cuts;   // per feature, ascending thresholds
    std::vector<std::vector<std::uint8_t>> bins; // per feature, per row
};

BinnedData bin_features(const Eigen::MatrixXd& x) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto p = static_cast<std::size_t>(x.cols());
    BinnedData out;
    out.cuts.resize(p);
    out.bins.resize(p);
    std::vector<double> sorted(n);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i < n; ++i) sorted[i] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> uniq(sorted);
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        auto& cuts = out.cuts[j];
        if (uniq.size() <= static_cast<std::size_t>(kMaxBins)) {
            for (std::size_t k = 0; k + 1 < uniq.size(); ++k) cuts.push_back(0.5 * (uniq[k] + uniq[k + 1]));
        } else {
            for (int k = 1; k < kMaxBins; ++k) {
                const std::size_t pos = static_cast<std::size_t>(k) * n / kMaxBins;
                const double lo = sorted[pos - 1];
                const double hi = sorted[pos];
                const double cut = lo < hi ? 0.5 * (lo + hi) : lo;
                if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
            }
            if (!cuts.empty() && cuts.back() >= uniq.back()) cuts.pop_back();
        }
        auto& b = out.bins[j];
        b.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            b[i] = static_cast<std::uint8_t>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
        }
    }
    return out;
}

class TreeBuilder {
public:
    TreeBuilder(const BinnedData& data, const std::vector<double>& grad, int max_depth, int min_leaf, double lr)
        : data_(data), grad_(grad), max_depth_(max_depth), min_leaf_(min_leaf), lr_(lr) {}

    std::vector<detail::TreeNode> build(std::vector<std::uint32_t>& rows, std::vector<double>& update) {
        nodes_.clear();
        update_ = &update;
        grow(rows, 0, rows.size(), 0);
        return std::move(nodes_);
    }

private:
    int grow(std::vector<std::uint32_t>& rows, std::size_t begin, std::size_t end, int depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        const std::size_t count = end - begin;
        double sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) sum += grad_[rows[i]];

        auto make_leaf = [&] {
            const double value = lr_ * sum / static_cast<double>(count);
            nodes_[static_cast<std::size_t>(id)].value = value;
            for (std::size_t i = begin; i < end; ++i) (*update_)[rows[i]] = value;
            return id;
        };

        if (depth >= max_depth_ || count < 2 * static_cast<std::size_t>(min_leaf_)) return make_leaf();

        const double parent_score = sum * sum / static_cast<double>(count);
        double best_gain = 1e-12 * std::max(1.0, std::abs(parent_score));
        int best_feature = -1;
        int best_bin = -1;

        const std::size_t p = data_.bins.size();
        for (std::size_t j = 0; j < p; ++j) {
            const auto& cuts = data_.cuts[j];
            if (cuts.empty()) continue;
            const std::size_t nb = cuts.size() + 1;
            hist_sum_.assign(nb, 0.0);
            hist_cnt_.assign(nb, 0);
            const auto& b = data_.bins[j];
            for (std::size_t i = begin; i < end; ++i) {
                const std::uint32_t r = rows[i];
                hist_sum_[b[r]] += grad_[r];
                ++hist_cnt_[b[r]];
            }
            double left_sum = 0.0;
            std::size_t left_cnt = 0;
            for (std::size_t k = 0; k + 1 < nb; ++k) {
                left_sum += hist_sum_[k];
                left_cnt += hist_cnt_[k];
                const std::size_t right_cnt = count - left_cnt;
                if (left_cnt < static_cast<std::size_t>(min_leaf_)) continue;
                if (right_cnt < static_cast<std::size_t>(min_leaf_)) break;
                const double right_sum = sum - left_sum;
                const double gain = left_sum * left_sum / static_cast<double>(left_cnt) +
                                    right_sum * right_sum / static_cast<double>(right_cnt) - parent_score;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(j);
                    best_bin = static_cast<int>(k);
                }
            }
        }
        if (best_feature < 0) return make_leaf();

        const auto& b = data_.bins[static_cast<std::size_t>(best_feature)];
        auto mid_it = std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                            rows.begin() + static_cast<std::ptrdiff_t>(end),
                                            [&](std::uint32_t r) { return b[r] <= best_bin; });
        const auto mid = static_cast<std::size_t>(mid_it - rows.begin());

        nodes_[static_cast<std::size_t>(id)].feature = best_feature;
        nodes_[static_cast<std::size_t>(id)].threshold =
            data_.cuts[static_cast<std::size_t>(best_feature)][static_cast<std::size_t>(best_bin)];
        const int left = grow(rows, begin, mid, depth + 1);
        const int right = grow(rows, mid, end, depth + 1);
        nodes_[static_cast<std::size_t>(id)].left = left;
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    const BinnedData& data_;
    const std::vector<double>& grad_;
    int max_depth_;
    int min_leaf_;
    double lr_;
    std::vector<detail::TreeNode> nodes_;
    std::vector<double>* update_ = nullptr;
    std::vector<double> hist_sum_;
    std::vector<std::size_t> hist_cnt_;
};

// Callback receives (stage, ensemble) after each tree so callers can score
// staged predictions without refitting.
template <typename OnStage>
detail::TreeEnsembleState fit_boosting(const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       OnStage&& on_stage) {
    const auto n = static_cast<std::size_t>(x.rows());
    detail::TreeEnsembleState state;
    state.base = y.mean();
    const BinnedData data = bin_features(x);
    std::vector<double> pred(n, state.base);
    std::vector<double> grad(n);
    std::vector<double> update(n);
    std::vector<std::uint32_t> rows(n);
    TreeBuilder builder(data, grad, spec.max_depth, spec.min_samples_leaf, spec.learning_rate);
    for (int k = 0; k < spec.n_trees; ++k) {
        for (std::size_t i = 0; i < n; ++i) grad[i] = y(static_cast<Eigen::Index>(i)) - pred[i];
        std::iota(rows.begin(), rows.end(), 0U);
        state.trees.push_back(builder.build(rows, update));
        for (std::size_t i = 0; i < n; ++i) pred[i] += update[i];
        on_stage(k + 1, state);
    }
    return state;
}

void check_training_input(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const FeatureLayout& layout) {
    if (x.rows() < 2) throw InputError("fit needs at least 2 rows, got " + std::to_string(x.rows()));
    if (x.rows() != y.size()) throw InputError("feature/target row count mismatch");
    if (static_cast<std::size_t>(x.cols()) != layout.arity()) throw InputError("feature arity does not match layout");
    if (!x.allFinite() || !y.allFinite()) throw InputError("training data contains non-finite values");
}

} // namespace

// ------------------------------------------------------- FittedRegressor

FittedRegressor::FittedRegressor() = default;
FittedRegressor::~FittedRegressor() = default;
FittedRegressor::FittedRegressor(FittedRegressor&&) noexcept = default;
FittedRegressor& FittedRegressor::operator=(FittedRegressor&&) noexcept = default;

FittedRegressor::FittedRegressor(const FittedRegressor& other)
    : spec_(other.spec_), layout_(other.layout_), training_mse_(other.training_mse_) {
    if (other.ridge_) ridge_ = std::make_unique<detail::RidgeState>(*other.ridge_);
    if (other.trees_) trees_ = std::make_unique<detail::TreeEnsembleState>(*other.trees_);
}

FittedRegressor& FittedRegressor::operator=(const FittedRegressor& other) {
    if (this != &other) {
        FittedRegressor copy(other);
        *this = std::move(copy);
    }
    return *this;
}

void FittedRegressor::check_layout(const Eigen::MatrixXd& x, const FeatureLayout& layout) const {
    if (!(layout == layout_) || static_cast<std::size_t>(x.cols()) != layout_.arity()) {
        throw InputError("feature layout mismatch: model trained on " + std::to_string(layout_.arity()) +
                         " columns, got " + std::to_string(x.cols()));
    }
}

Eigen::VectorXd FittedRegressor::predict(const Eigen::MatrixXd& x, const FeatureLayout& layout) const {
    return predict_staged(x, layout, spec_.n_trees);
}

Eigen::VectorXd FittedRegressor::predict_staged(const Eigen::MatrixXd& x, const FeatureLayout& layout,
                                                int n_trees) const {
    check_layout(x, layout);
    if (ridge_) {
        return (x * ridge_->coef).array() + ridge_->intercept;
    }
    if (!trees_) throw InputError("predict on an unfitted model");
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        out(i) = trees_->predict_row(x.row(i), static_cast<std::size_t>(std::max(n_trees, 0)));
    }
    return out;
}

const Eigen::VectorXd& FittedRegressor::coefficients() const {
    if (!ridge_) throw InputError("coefficients are only defined for ridge models");
    return ridge_->coef;
}

double FittedRegressor::intercept() const {
    if (!ridge_) throw InputError("intercept is only defined for ridge models");
    return ridge_->intercept;
}

FittedRegressor fit(const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    const FeatureLayout& layout, std::uint64_t /*seed*/) {
    // Both families are deterministic functions of the data: boosting uses
    // every row and every feature at each stage, so the seed has nothing to
    // drive. It stays in the signature for families that subsample.
    spec.validate();
    check_training_input(x, y, layout);
    FittedRegressor model;
    model.spec_ = spec;
    model.layout_ = layout;
    if (spec.family == LearnerFamily::ridge_linear) {
        model.ridge_ = std::make_unique<detail::RidgeState>(fit_ridge(spec.ridge_lambda, x, y));
    } else {
        model.trees_ = std::make_unique<detail::TreeEnsembleState>(
            fit_boosting(spec, x, y, [](int, const detail::TreeEnsembleState&) {}));
    }
    model.training_mse_ = mean_squared_error(y, model.predict(x, layout));
    if (!std::isfinite(model.training_mse_)) throw NumericalError("training MSE is not finite");
    return model;
}

double mean_squared_error(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
    if (truth.size() != pred.size() || truth.size() == 0) throw InputError("MSE needs equal, non-empty vectors");
    return (truth - pred).squaredNorm() / static_cast<double>(truth.size());
}

// -------------------------------------------------------------- selection

Selection select_and_fit(std::span<const RegressorSpec> candidates, const Eigen::MatrixXd& train_x,
                         const Eigen::VectorXd& train_y, const Eigen::MatrixXd& val_x, const Eigen::VectorXd& val_y,
                         const FeatureLayout& layout, std::uint64_t seed) {
    if (candidates.empty()) throw InputError("model selection needs at least one candidate");
    if (val_x.rows() == 0) throw InputError("model selection needs a non-empty validation set");
    if (static_cast<std::size_t>(val_x.cols()) != layout.arity()) throw InputError("validation arity mismatch");

    std::vector<double> mse(candidates.size(), std::numeric_limits<double>::infinity());
    std::vector<FittedRegressor> models(candidates.size());

    // Tree candidates sharing (depth, lr, min_leaf) are served by one run up
    // to the largest tree count; staged predictions score the smaller ones.
    using Key = std::tuple<int, double, int>;
    std::map<Key, std::vector<std::size_t>> tree_groups;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const auto& spec = candidates[c];
        spec.validate();
        if (spec.family == LearnerFamily::ridge_linear) {
            models[c] = fit(spec, train_x, train_y, layout, seed);
            mse[c] = mean_squared_error(val_y, models[c].predict(val_x, layout));
        } else {
            tree_groups[{spec.max_depth, spec.learning_rate, spec.min_samples_leaf}].push_back(c);
        }
    }

    for (const auto& [key, members] : tree_groups) {
        check_training_input(train_x, train_y, layout);
        RegressorSpec big = candidates[members.front()];
        for (std::size_t c : members) big.n_trees = std::max(big.n_trees, candidates[c].n_trees);

        // Running validation predictions, advanced one tree per stage.
        Eigen::VectorXd val_pred = Eigen::VectorXd::Constant(val_x.rows(), train_y.mean());
        auto state = fit_boosting(big, train_x, train_y, [&](int stage, const detail::TreeEnsembleState& s) {
            const auto& tree = s.trees.back();
            for (Eigen::Index i = 0; i < val_x.rows(); ++i) {
                int cur = 0;
                while (tree[static_cast<std::size_t>(cur)].feature >= 0) {
                    const auto& n = tree[static_cast<std::size_t>(cur)];
                    cur = val_x(i, n.feature) <= n.threshold ? n.left : n.right;
                }
                val_pred(i) += tree[static_cast<std::size_t>(cur)].value;
            }
            for (std::size_t c : members) {
                if (candidates[c].n_trees == stage) mse[c] = mean_squared_error(val_y, val_pred);
            }
        });
        for (std::size_t c : members) {
            FittedRegressor m;
            m.spec_ = candidates[c];
            m.layout_ = layout;
            auto trimmed = std::make_unique<detail::TreeEnsembleState>();
            trimmed->base = state.base;
            trimmed->trees.assign(state.trees.begin(), state.trees.begin() + candidates[c].n_trees);
            m.trees_ = std::move(trimmed);
            models[c] = std::move(m);
        }
    }

    std::size_t best = 0;
    for (std::size_t c = 1; c < candidates.size(); ++c) {
        if (mse[c] < mse[best]) best = c;
    }
    Selection sel;
    sel.index = best;
    sel.spec = candidates[best];
    sel.validation_mse = mse[best];
    sel.model = std::move(models[best]);
    if (sel.model.spec().family == LearnerFamily::tree_ensemble) {
        sel.model.training_mse_ = mean_squared_error(train_y, sel.model.predict(train_x, layout));
    }
    return sel;
}

RegressorSpec select_model(std::span<const RegressorSpec> candidates, const FeatureMatrix& train,
                           const FeatureMatrix& val, std::uint64_t seed) {
    if (!(train.layout == val.layout)) throw InputError("train/validation layouts differ");
    return select_and_fit(candidates, train.x, train.y, val.x, val.y, train.layout, seed).spec;
}

// ---------------------------------------------------------- serialization

namespace {

constexpr std::string_view kMagic = "curbflow-model";
constexpr int kFormatVersion = 1;

std::string num(double v) { return csv::format_double(v); }

double read_num(std::istream& in) {
    std::string tok;
    if (!(in >> tok)) throw InputError("model file truncated");
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) throw InputError("model file: bad number '" + tok + "'");
    return v;
}

void expect(std::istream& in, std::string_view word) {
    std::string tok;
    if (!(in >> tok) || tok != word) throw InputError("model file: expected '" + std::string(word) + "'");
}

} // namespace

void FittedRegressor::save(std::ostream& out) const {
    out << kMagic << ' ' << kFormatVersion << '\n';
    out << "family " << to_string(spec_.family) << '\n';
    out << "spec " << spec_.n_trees << ' ' << spec_.max_depth << ' ' << num(spec_.learning_rate) << ' '
        << spec_.min_samples_leaf << ' ' << num(spec_.ridge_lambda) << '\n';
    out << "layout " << layout_.lags << ' ' << (layout_.target == FeatureTarget::pudo ? "pudo" : "speed") << ' '
        << layout_.control_names.size();
    for (const auto& c : layout_.control_names) out << ' ' << c;
    out << '\n';
    out << "training_mse " << num(training_mse_) << '\n';
    if (ridge_) {
        out << "ridge " << ridge_->coef.size() << ' ' << num(ridge_->intercept);
        for (Eigen::Index j = 0; j < ridge_->coef.size(); ++j) out << ' ' << num(ridge_->coef(j));
        out << '\n';
    } else if (trees_) {
        out << "trees " << trees_->trees.size() << ' ' << num(trees_->base) << '\n';
        for (const auto& tree : trees_->trees) {
            out << "tree " << tree.size() << '\n';
            for (const auto& n : tree) {
                out << n.feature << ' ' << num(n.threshold) << ' ' << n.left << ' ' << n.right << ' ' << num(n.value)
                    << '\n';
            }
        }
    }
    out << "end\n";
}

FittedRegressor FittedRegressor::load(std::istream& in) {
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kMagic) throw InputError("not a curbflow model file");
    if (version != kFormatVersion) throw InputError("unsupported model format version " + std::to_string(version));
    FittedRegressor m;
    std::string tok;
    expect(in, "family");
    in >> tok;
    m.spec_.family = parse_learner_family(tok);
    expect(in, "spec");
    in >> m.spec_.n_trees >> m.spec_.max_depth;
    m.spec_.learning_rate = read_num(in);
    in >> m.spec_.min_samples_leaf;
    m.spec_.ridge_lambda = read_num(in);
    expect(in, "layout");
    std::size_t ncontrols = 0;
    in >> m.layout_.lags >> tok >> ncontrols;
    m.layout_.target = tok == "pudo" ? FeatureTarget::pudo : FeatureTarget::speed;
    m.layout_.control_names.resize(ncontrols);
    for (auto& c : m.layout_.control_names) in >> c;
    expect(in, "training_mse");
    m.training_mse_ = read_num(in);
    in >> tok;
    if (tok == "ridge") {
        Eigen::Index p = 0;
        in >> p;
        m.ridge_ = std::make_unique<detail::RidgeState>();
        m.ridge_->intercept = read_num(in);
        m.ridge_->coef.resize(p);
        for (Eigen::Index j = 0; j < p; ++j) m.ridge_->coef(j) = read_num(in);
    } else if (tok == "trees") {
        std::size_t count = 0;
        in >> count;
        m.trees_ = std::make_unique<detail::TreeEnsembleState>();
        m.trees_->base = read_num(in);
        for (std::size_t k = 0; k < count; ++k) {
            expect(in, "tree");
            std::size_t nodes = 0;
            in >> nodes;
            std::vector<detail::TreeNode> tree(nodes);
            for (auto& n : tree) {
                in >> n.feature;
                n.threshold = read_num(in);
                in >> n.left >> n.right;
                n.value = read_num(in);
            }
            m.trees_->trees.push_back(std::move(tree));
        }
    } else {
        throw InputError("model file: unknown body '" + tok + "'");
    }
    expect(in, "end");
    if (!in) throw InputError("model file truncated");
    return m;
}

} // namespace curbflow
