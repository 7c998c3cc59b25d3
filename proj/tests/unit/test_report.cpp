#include "curbflow/errors.hpp"
#include "curbflow/report.hpp"

#include "unit/helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace curbflow;

namespace {

SpeedPanel constant_speed(double mph, std::vector<double> freeflow) {
    const auto grid = testing::grid_at("2024-03-04T16:00:00", 12);
    SpeedPanel p{Panel({1, 2}, grid), std::move(freeflow)};
    for (std::size_t t = 0; t < grid.count; ++t) {
        p.values.set(0, t, mph);
        p.values.set(1, t, mph);
    }
    return p;
}

} // namespace

TEST_CASE("speed index divides mean speed by free-flow") {
    const auto idx = speed_index(constant_speed(15.0, {30.0, 15.0}));
    CHECK(idx.at(1) == 0.5);
    CHECK(idx.at(2) == 1.0);
}

TEST_CASE("speed index omits unobserved regions and rejects zero free-flow") {
    auto p = constant_speed(15.0, {30.0, 15.0});
    for (std::size_t t = 0; t < 12; ++t) p.values.mark_missing(1, t);
    const auto idx = speed_index(p);
    CHECK(idx.size() == 1u);
    CHECK(idx.count(2) == 0u);

    CHECK_THROWS_AS(speed_index(constant_speed(15.0, {0.0, 15.0})), InputError);
}

TEST_CASE("speed index respects the hour window") {
    auto p = constant_speed(10.0, {20.0, 20.0});
    // The grid covers 16:00-16:55, so a 17-18 window sees nothing.
    for (std::size_t t = 0; t < 6; ++t) p.values.set(0, t, 2.0);
    IngestWindow w;
    w.hour_begin = 17;
    w.hour_end = 18;
    CHECK(speed_index(p, w).empty());
    CHECK(speed_index(p).at(1) == doctest::Approx((6 * 2.0 + 6 * 10.0) / 12.0 / 20.0));
}

TEST_CASE("pearson correlation") {
    const std::map<RegionId, double> a{{1, 1.0}, {2, 2.0}, {3, 3.0}};
    CHECK(pearson_correlation(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    const std::map<RegionId, double> neg{{1, -1.0}, {2, -2.0}, {3, -3.0}};
    CHECK(pearson_correlation(a, neg) == doctest::Approx(-1.0).epsilon(1e-12));

    const std::map<RegionId, double> b{{1, 2.0}, {2, 4.0}, {3, 6.1}};
    // Direct formula on centered values.
    const double mx = 2.0;
    const double my = (2.0 + 4.0 + 6.1) / 3.0;
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 1; i <= 3; ++i) {
        const double dx = a.at(i) - mx;
        const double dy = b.at(i) - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    const double r = sxy / std::sqrt(sxx * syy);
    CHECK(pearson_correlation(a, b) == doctest::Approx(r).epsilon(1e-12));
    CHECK(pearson_correlation(b, a) == doctest::Approx(r).epsilon(1e-12));

    std::map<RegionId, double> affine;
    for (const auto& [k, v] : b) affine[k] = 3.0 * v - 7.0;
    CHECK(pearson_correlation(a, affine) == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("pearson correlation uses shared keys only") {
    const std::map<RegionId, double> a{{1, 1.0}, {2, 2.0}, {3, 3.0}, {9, 100.0}};
    const std::map<RegionId, double> b{{1, 2.0}, {2, 4.0}, {3, 6.0}, {7, -5.0}};
    CHECK(pearson_correlation(a, b) == doctest::Approx(1.0).epsilon(1e-12));
    const std::map<RegionId, double> c{{1, 2.0}, {2, 4.0}, {8, 0.0}};
    CHECK_THROWS_AS(pearson_correlation(a, c), InputError);
}

TEST_CASE("long table layout") {
    std::ostringstream os;
    write_long(os, {{3, "speed_index", 0.5}, {3, "theta_hat", -0.025}});
    CHECK(os.str() == "region,metric,value\n3,speed_index,0.5\n3,theta_hat,-0.025\n");
}
