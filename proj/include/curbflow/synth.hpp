#pragma once

#include "curbflow/data_model.hpp"
#include "curbflow/dsml.hpp"
#include "curbflow/panel_io.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace curbflow {

enum class SemFamily { linear, nonlinear };

std::string_view to_string(SemFamily f);
SemFamily parse_sem_family(std::string_view text);

// Exogenous control W_v^t: a stationary Gaussian AR(1) with unit variance,
// drawn independently per region.
struct ControlProcess {
    bool enabled = false;
    std::string name = "w0";
    double persistence = 0.5;
};

// Structural model simulated per region v and interval t:
//
//   d = b0 + sum_k Ad_k g(y^{t-k} - a0) + sum_k Bd_k g(yN^{t-k} - a0)
//          + sum_k Cd_k g(d^{t-k} - b0) + wd W^t + xi          (rounded, >= 0)
//   y = a0 + sum_k A_k g(y^{t-k} - a0) + sum_k B_k g(yN^{t-k} - a0)
//          + wy W^t + theta_t d + e                               (>= 0.1)
//
// with theta_t = theta_v + theta_slope * W^t, yN the neighbor mean speed, and
// g the identity (linear) or a clipped ramp (nonlinear). Lags enter as
// deviations from the intercepts so coefficients do not move the level.
struct SemConfig {
    std::vector<RegionId> regions;
    std::vector<AdjacencyPair> adjacency;
    std::size_t horizon = 1000; // emitted intervals
    std::size_t lags = 10;
    std::size_t warmup = 0;     // discarded intervals; 0 -> 5 * lags

    double theta_default = -0.05;
    std::map<RegionId, double> theta;
    double theta_slope = 0.0;   // needs the control process

    SemFamily phi = SemFamily::linear;
    SemFamily psi = SemFamily::linear;
    double ramp_width = 2.0;    // clip half-width of g in nonlinear mode

    double sigma_e = 2.0;
    double sigma_xi = 2.0;
    double y_intercept = 18.0;
    double d_intercept = 20.0;
    double freeflow = 30.0;

    // Per-lag coefficients, index k-1 for lag k. Empty -> zeros.
    std::vector<double> a_y, b_y, a_d, b_d, c_d;
    double w_y = 0.0;
    double w_d = 0.0;

    ControlProcess control;
    std::uint64_t seed = 1;
    Timestamp start{};
    std::int64_t interval_len = 300;
    DayClass day_class = DayClass::weekday;

    double theta_of(RegionId v) const;
    void validate() const;

    // Moderately persistent, confounded defaults used by tests and `synth`.
    static SemConfig standard(std::vector<RegionId> regions, std::vector<AdjacencyPair> adjacency,
                              std::size_t horizon, std::size_t lags, std::uint64_t seed);
};

// Realised structural pieces, aligned with the emitted panels.
struct SyntheticTruth {
    std::map<RegionId, double> theta;
    double theta_slope = 0.0;
    Panel phi; // y equation without theta*d and e
    Panel psi; // d equation without xi
    Panel e;
    Panel xi;  // d - psi after rounding
    Panel theta_t;
    std::size_t floored = 0; // y values raised to the 0.1 floor
};

struct SyntheticData {
    PanelSet panels;
    RegionGraph graph;
    SyntheticTruth truth;
};

SyntheticData generate_sem(const SemConfig& config);

struct OracleRow {
    RegionId region = 0;
    double theta = 0.0;
    double theta_hat = 0.0;
    double band = 0.0;
    bool pass = false;
};

struct OracleReport {
    std::vector<OracleRow> rows;
    double pass_rate = 0.0;
};

// Passes a region when |theta_hat - theta| <= band_multiplier / sqrt(n).
OracleReport oracle_check(const std::map<RegionId, EffectEstimate>& estimates,
                          const std::map<RegionId, double>& truth, double band_multiplier);

} // namespace curbflow
