#include "curbflow/errors.hpp"
#include "curbflow/learners.hpp"

#include "oracles/normal_equations.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace curbflow;

namespace {

// Layout that only fixes the arity.
FeatureLayout plain(std::size_t arity) {
    FeatureLayout l;
    l.lags = 0;
    for (std::size_t j = 0; j < arity; ++j) l.control_names.push_back("x" + std::to_string(j));
    return l;
}

} // namespace

TEST_CASE("unpenalised ridge recovers an exact line") {
    Eigen::MatrixXd x(6, 1);
    x << -2, -1, 0, 1, 2, 3;
    const Eigen::VectorXd y = 2.0 * x.col(0);
    const auto m = fit(RegressorSpec::ridge(0.0), x, y, plain(1), 1);
    CHECK(m.coefficients()(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(m.intercept()) < 1e-9);
    Eigen::MatrixXd q(1, 1);
    q << 3.0;
    CHECK(m.predict(q, plain(1))(0) == doctest::Approx(6.0));
}

TEST_CASE("unpenalised ridge equals OLS on full-rank data") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z(0.0, 1.0);
    const int n = 200;
    const int p = 6;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    std::vector<std::vector<double>> rows;
    std::vector<double> yy;
    for (int i = 0; i < n; ++i) {
        std::vector<double> row{1.0};
        y(i) = 3.0 + z(rng);
        for (int j = 0; j < p; ++j) {
            x(i, j) = z(rng) * (1 + j) + 10.0 * j;
            y(i) += (j - 2.5) * x(i, j);
            row.push_back(x(i, j));
        }
        rows.push_back(row);
        yy.push_back(y(i));
    }
    const auto m = fit(RegressorSpec::ridge(0.0), x, y, plain(p), 9);
    const auto ref = oracle::least_squares(rows, yy);
    CHECK(m.intercept() == doctest::Approx(ref.coef[0]).epsilon(1e-8));
    for (int j = 0; j < p; ++j) CHECK(m.coefficients()(j) == doctest::Approx(ref.coef[j + 1]).epsilon(1e-8));
}

TEST_CASE("singular design with zero penalty is an explicit error") {
    Eigen::MatrixXd x(10, 2);
    for (int i = 0; i < 10; ++i) {
        x(i, 0) = i;
        x(i, 1) = 2.0 * i;
    }
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(10, 4.0);
    CHECK_THROWS_AS(fit(RegressorSpec::ridge(0.0), x, y, plain(2), 1), SingularDesign);
    CHECK_NOTHROW(fit(RegressorSpec::ridge(1.0), x, y, plain(2), 1));
}

TEST_CASE("constant target predicts that constant") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(30, 3);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(30, 7.5);
    for (const auto& spec : {RegressorSpec::ridge(1.0), RegressorSpec::trees(20, 2, 0.1)}) {
        const auto m = fit(spec, x, y, plain(3), 1);
        const Eigen::VectorXd p = m.predict(Eigen::MatrixXd::Random(5, 3), plain(3));
        for (int i = 0; i < 5; ++i) CHECK(p(i) == doctest::Approx(7.5).epsilon(1e-12));
    }
}

TEST_CASE("fit preconditions and layout checks") {
    Eigen::MatrixXd x(1, 1);
    x << 1.0;
    CHECK_THROWS_AS(fit(RegressorSpec::ridge(0.0), x, Eigen::VectorXd::Ones(1), plain(1), 1), InputError);

    Eigen::MatrixXd x2 = Eigen::MatrixXd::Random(20, 2);
    const auto m = fit(RegressorSpec::ridge(0.1), x2, x2.col(0), plain(2), 1);
    CHECK_THROWS_AS(m.predict(Eigen::MatrixXd::Random(3, 3), plain(3)), InputError);
    CHECK_THROWS_AS(m.predict(Eigen::MatrixXd::Random(3, 2), FeatureLayout{1, FeatureTarget::speed, {}}), InputError);
    CHECK_THROWS_AS(RegressorSpec::trees(0, 3, 0.1).validate(), InputError);
    CHECK_THROWS_AS(RegressorSpec::ridge(-1.0).validate(), InputError);
}

TEST_CASE("boosted trees fit a step function") {
    const int n = 400;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = -1.0 + 2.0 * i / (n - 1);
        y(i) = x(i, 0) > 0.0 ? 1.0 : 0.0;
    }
    const auto m = fit(RegressorSpec::trees(50, 1, 0.1), x, y, plain(1), 4);
    CHECK(mean_squared_error(y, m.predict(x, plain(1))) < 0.01);
    CHECK(m.training_mse() < 0.01);
}

TEST_CASE("staged prediction and determinism") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd x(300, 4);
    Eigen::VectorXd y(300);
    for (int i = 0; i < 300; ++i) {
        for (int j = 0; j < 4; ++j) x(i, j) = z(rng);
        y(i) = std::sin(x(i, 0)) + x(i, 1) * x(i, 2) + 0.1 * z(rng);
    }
    const auto spec = RegressorSpec::trees(80, 3, 0.1);
    const auto a = fit(spec, x, y, plain(4), 17);
    const auto b = fit(spec, x, y, plain(4), 17);
    const Eigen::VectorXd pa = a.predict(x, plain(4));
    CHECK((pa.array() == b.predict(x, plain(4)).array()).all());
    CHECK((a.predict_staged(x, plain(4), 80).array() == pa.array()).all());

    // Training error falls as stages are added.
    const double e20 = mean_squared_error(y, a.predict_staged(x, plain(4), 20));
    const double e80 = mean_squared_error(y, pa);
    CHECK(e80 < e20);

    // The shorter ensemble reproduces the staged prediction exactly.
    const auto c = fit(RegressorSpec::trees(20, 3, 0.1), x, y, plain(4), 17);
    CHECK((c.predict(x, plain(4)).array() == a.predict_staged(x, plain(4), 20).array()).all());
}

TEST_CASE("saved models reload bit-identically") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(120, 3);
    const Eigen::VectorXd y = x.col(0).array().square() + x.col(1).array();
    for (const auto& spec : {RegressorSpec::ridge(0.5), RegressorSpec::trees(30, 4, 0.05)}) {
        const auto m = fit(spec, x, y, plain(3), 2);
        std::stringstream buf;
        m.save(buf);
        const auto back = FittedRegressor::load(buf);
        CHECK(back.spec() == spec);
        CHECK(back.layout() == plain(3));
        CHECK((back.predict(x, plain(3)).array() == m.predict(x, plain(3)).array()).all());
    }
    std::stringstream junk("not-a-model 1");
    CHECK_THROWS_AS(FittedRegressor::load(junk), InputError);
}

TEST_CASE("model selection by validation error") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> z(0.0, 1.0);
    auto make = [&](int n) {
        FeatureMatrix fm;
        fm.layout = plain(2);
        fm.x.resize(n, 2);
        fm.y.resize(n);
        for (int i = 0; i < n; ++i) {
            fm.x(i, 0) = z(rng);
            fm.x(i, 1) = z(rng);
            fm.y(i) = 1.5 * fm.x(i, 0) - 0.5 * fm.x(i, 1) + 0.01 * z(rng);
            fm.intervals.push_back(static_cast<std::size_t>(i));
        }
        return fm;
    };
    const auto train = make(200);
    const auto val = make(100);

    const std::vector<RegressorSpec> cands{RegressorSpec::ridge(1e6), RegressorSpec::ridge(0.0)};
    const auto m0 = fit(cands[0], train, 1);
    const auto m1 = fit(cands[1], train, 1);
    const double mse0 = mean_squared_error(val.y, m0.predict(val));
    const double mse1 = mean_squared_error(val.y, m1.predict(val));
    REQUIRE(mse1 < mse0);
    CHECK(select_model(cands, train, val, 1) == cands[1]);

    const auto sel = select_and_fit(cands, train.x, train.y, val.x, val.y, train.layout, 1);
    CHECK(sel.index == 1u);
    CHECK(sel.validation_mse == doctest::Approx(mse1).epsilon(1e-12));

    const std::vector<RegressorSpec> one{RegressorSpec::trees(50, 2, 0.1)};
    CHECK(select_model(one, train, val, 1) == one[0]);

    // Identical candidates give bit-equal MSE; the first wins.
    const std::vector<RegressorSpec> twins{RegressorSpec::ridge(0.3), RegressorSpec::ridge(0.3)};
    CHECK(select_and_fit(twins, train.x, train.y, val.x, val.y, train.layout, 1).index == 0u);

    FeatureMatrix empty;
    empty.layout = plain(2);
    empty.x.resize(0, 2);
    CHECK_THROWS_AS(select_model(cands, train, empty, 1), InputError);
    CHECK_THROWS_AS(select_model({}, train, val, 1), InputError);
}
