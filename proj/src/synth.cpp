#include "curbflow/synth.hpp"

#include "curbflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace curbflow {

std::string_view to_string(SemFamily f) { return f == SemFamily::linear ? "linear" : "nonlinear"; }

SemFamily parse_sem_family(std::string_view text) {
    if (text == "linear") return SemFamily::linear;
    if (text == "nonlinear") return SemFamily::nonlinear;
    throw InputError("unknown SEM family '" + std::string(text) + "' (expected linear|nonlinear)");
}

double SemConfig::theta_of(RegionId v) const {
    const auto it = theta.find(v);
    return it == theta.end() ? theta_default : it->second;
}

void SemConfig::validate() const {
    if (regions.empty()) throw InputError("synthetic config needs at least one region");
    if (lags < 1) throw InputError("synthetic config needs I >= 1");
    if (horizon <= lags) throw InputError("synthetic horizon must exceed the lag depth");
    if (!(sigma_e >= 0.0) || !(sigma_xi >= 0.0)) throw InputError("noise scales must be non-negative");
    if (!(ramp_width > 0.0)) throw InputError("ramp width must be positive");
    if (!(freeflow > 0.0)) throw InputError("free-flow speed must be positive");
    if (interval_len <= 0) throw InputError("interval length must be positive");
    for (const auto* v : {&a_y, &b_y, &a_d, &b_d, &c_d}) {
        if (v->size() > lags) throw InputError("more lag coefficients than lags");
    }
    if (theta_slope != 0.0 && !control.enabled) throw InputError("condition-dependent theta needs the control process");
    if (!(control.persistence > -1.0 && control.persistence < 1.0)) {
        throw InputError("control persistence must lie in (-1, 1)");
    }
    for (const auto& [v, _] : theta) {
        if (std::find(regions.begin(), regions.end(), v) == regions.end()) {
            throw InputError("theta given for undeclared region " + std::to_string(v));
        }
    }
}

SemConfig SemConfig::standard(std::vector<RegionId> regions, std::vector<AdjacencyPair> adjacency,
                              std::size_t horizon, std::size_t lags, std::uint64_t seed) {
    SemConfig c;
    c.regions = std::move(regions);
    c.adjacency = std::move(adjacency);
    c.horizon = horizon;
    c.lags = lags;
    c.seed = seed;
    auto lagvec = [&](std::initializer_list<double> head) {
        std::vector<double> v(head);
        v.resize(std::min(v.size(), lags));
        return v;
    };
    c.a_y = lagvec({0.3, 0.1});
    c.b_y = lagvec({0.2});
    c.a_d = lagvec({0.5, 0.2});
    c.b_d = lagvec({0.3});
    c.c_d = lagvec({0.3, 0.1});
    return c;
}

namespace {

double coef(const std::vector<double>& v, std::size_t k) { return k - 1 < v.size() ? v[k - 1] : 0.0; }

} // namespace

SyntheticData generate_sem(const SemConfig& config) {
    config.validate();
    std::vector<RegionId> ids = config.regions;
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw InputError("duplicate synthetic region id");

    SyntheticData out;
    out.graph = build_region_graph(config.adjacency, ids);
    const std::size_t nr = ids.size();
    const std::size_t lags = config.lags;
    const std::size_t warmup = config.warmup > 0 ? config.warmup : 5 * lags;
    const std::size_t total = warmup + config.horizon;

    auto g_y = [&](double x) {
        return config.phi == SemFamily::linear ? x : std::clamp(x, -config.ramp_width, config.ramp_width);
    };
    auto g_d = [&](double x) {
        return config.psi == SemFamily::linear ? x : std::clamp(x, -config.ramp_width, config.ramp_width);
    };

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<std::vector<double>> y(nr, std::vector<double>(total));
    std::vector<std::vector<double>> d(nr, std::vector<double>(total));
    std::vector<std::vector<double>> w(nr, std::vector<double>(total, 0.0));
    std::vector<std::vector<double>> phi(nr, std::vector<double>(total)), psi = phi, e = phi, xi = phi, th = phi;
    std::size_t floored = 0;

    const double a0 = config.y_intercept;
    const double b0 = config.d_intercept;
    const double rho = config.control.persistence;
    const double innov = std::sqrt(1.0 - rho * rho);

    for (std::size_t t = 0; t < total; ++t) {
        for (std::size_t r = 0; r < nr; ++r) {
            if (config.control.enabled) w[r][t] = t == 0 ? normal(rng) : rho * w[r][t - 1] + innov * normal(rng);
        }
        if (t < lags) {
            for (std::size_t r = 0; r < nr; ++r) {
                d[r][t] = std::max(0.0, std::round(b0 + config.sigma_xi * normal(rng)));
                y[r][t] = std::max(0.1, a0 + config.sigma_e * normal(rng));
            }
            continue;
        }
        // Neighbor means use the previous intervals only, so regions can be
        // updated in any order within t.
        for (std::size_t r = 0; r < nr; ++r) {
            const auto& nb = out.graph.neighbors_of_index(r);
            auto neighbor_mean = [&](std::size_t s) {
                if (nb.empty()) return a0;
                double sum = 0.0;
                for (std::size_t j : nb) sum += y[j][s];
                return sum / static_cast<double>(nb.size());
            };
            double p = b0 + config.w_d * w[r][t];
            double f = a0 + config.w_y * w[r][t];
            for (std::size_t k = 1; k <= lags; ++k) {
                const double dy = y[r][t - k] - a0;
                const double dn = neighbor_mean(t - k) - a0;
                const double dd = d[r][t - k] - b0;
                p += coef(config.a_d, k) * g_d(dy) + coef(config.b_d, k) * g_d(dn) + coef(config.c_d, k) * g_d(dd);
                f += coef(config.a_y, k) * g_y(dy) + coef(config.b_y, k) * g_y(dn);
            }
            const double xi_draw = config.sigma_xi * normal(rng);
            const double dv = std::max(0.0, std::round(p + xi_draw));
            const double ev = config.sigma_e * normal(rng);
            const double theta = config.theta_of(ids[r]) + config.theta_slope * w[r][t];
            double yv = f + theta * dv + ev;
            if (!std::isfinite(yv) || std::abs(yv) > 1e6) {
                throw InputError("synthetic dynamics exploded at interval " + std::to_string(t) +
                                 "; rescale the lag coefficients so their sums stay below one");
            }
            if (yv < 0.1) {
                yv = 0.1;
                if (t >= warmup) ++floored;
            }
            y[r][t] = yv;
            d[r][t] = dv;
            phi[r][t] = f;
            psi[r][t] = p;
            e[r][t] = ev;
            xi[r][t] = dv - p;
            th[r][t] = theta;
        }
    }

    TimeGrid grid;
    grid.start = config.start;
    grid.interval_len = config.interval_len;
    grid.count = config.horizon;
    grid.day_class = config.day_class;

    auto& panels = out.panels;
    panels.speed.values = Panel(ids, grid);
    panels.speed.freeflow.assign(nr, config.freeflow);
    panels.pudo.values = Panel(ids, grid);
    panels.pudo.mode = PudoMode::combined_pu_do;
    auto& truth = out.truth;
    truth.phi = Panel(ids, grid);
    truth.psi = Panel(ids, grid);
    truth.e = Panel(ids, grid);
    truth.xi = Panel(ids, grid);
    truth.theta_t = Panel(ids, grid);
    truth.theta_slope = config.theta_slope;
    truth.floored = floored;
    if (config.control.enabled) {
        ControlPanel c;
        c.names = {config.control.name};
        c.values = Panel(ids, grid);
        panels.controls = std::move(c);
    }
    for (std::size_t r = 0; r < nr; ++r) {
        truth.theta[ids[r]] = config.theta_of(ids[r]);
        for (std::size_t t = 0; t < config.horizon; ++t) {
            const std::size_t s = warmup + t;
            panels.speed.values.set(r, t, y[r][s]);
            panels.pudo.values.set(r, t, d[r][s]);
            if (panels.controls) panels.controls->values.set(r, t, w[r][s]);
            // The first `lags` source intervals are warmup draws with no
            // structural pieces; only reachable when warmup < lags.
            if (s >= lags) {
                truth.phi.set(r, t, phi[r][s]);
                truth.psi.set(r, t, psi[r][s]);
                truth.e.set(r, t, e[r][s]);
                truth.xi.set(r, t, xi[r][s]);
                truth.theta_t.set(r, t, th[r][s]);
            }
        }
    }
    return out;
}

OracleReport oracle_check(const std::map<RegionId, EffectEstimate>& estimates,
                          const std::map<RegionId, double>& truth, double band_multiplier) {
    std::set<RegionId> a;
    std::set<RegionId> b;
    for (const auto& [v, _] : estimates) a.insert(v);
    for (const auto& [v, _] : truth) b.insert(v);
    if (a != b) throw InputError("oracle check: estimated and true region sets differ");
    if (a.empty()) throw InputError("oracle check: no regions");

    OracleReport rep;
    std::size_t passed = 0;
    for (const auto& [v, est] : estimates) {
        if (est.n == 0) throw InputError("oracle check: estimate for region " + std::to_string(v) + " has n = 0");
        OracleRow row;
        row.region = v;
        row.theta = truth.at(v);
        row.theta_hat = est.theta_hat;
        row.band = band_multiplier / std::sqrt(static_cast<double>(est.n));
        row.pass = std::abs(est.theta_hat - row.theta) <= row.band;
        passed += row.pass ? 1 : 0;
        rep.rows.push_back(row);
    }
    rep.pass_rate = static_cast<double>(passed) / static_cast<double>(rep.rows.size());
    return rep;
}

} // namespace curbflow
