#include "curbflow/tables.hpp"

#include "curbflow/csv.hpp"
#include "curbflow/errors.hpp"

#include <ostream>

namespace curbflow {

using csv::format_double;

void write_effects(std::ostream& out, const std::map<RegionId, EffectEstimate>& effects) {
    out << "region,day_class,theta_hat,std_err,t_stat,p_value,n\n";
    for (const auto& [v, e] : effects) {
        out << v << ',' << to_string(e.day_class) << ',' << format_double(e.theta_hat) << ','
            << format_double(e.std_err) << ',' << format_double(e.t_stat) << ',' << format_double(e.p_value) << ','
            << e.n << '\n';
    }
}

std::map<RegionId, EffectEstimate> read_effects(const std::string& path) {
    std::map<RegionId, EffectEstimate> out;
    csv::read_file(path, {"region", "day_class", "theta_hat", "std_err", "t_stat", "p_value", "n"},
                   [&](const csv::Row& row) {
                       EffectEstimate e;
                       e.region = static_cast<RegionId>(csv::parse_int(row, 0, path));
                       try {
                           e.day_class = parse_day_class(row.fields[1]);
                       } catch (const InputError& err) {
                           throw InputError(path + ":" + std::to_string(row.line) + ": " + err.what());
                       }
                       e.theta_hat = csv::parse_double(row, 2, path);
                       e.std_err = csv::parse_double(row, 3, path);
                       e.t_stat = csv::parse_double(row, 4, path);
                       e.p_value = csv::parse_double(row, 5, path);
                       const long long n = csv::parse_int(row, 6, path);
                       if (n < 0) throw InputError(path + ":" + std::to_string(row.line) + ": negative n");
                       e.n = static_cast<std::size_t>(n);
                       if (!out.emplace(e.region, e).second) {
                           throw InputError(path + ":" + std::to_string(row.line) + ": duplicate region " +
                                            std::to_string(e.region));
                       }
                   });
    return out;
}

void write_residuals(std::ostream& out, const DsmlResult& result) {
    out << "region,t,fold,eps_hat,xi_hat\n";
    for (const auto& [v, r] : result.regions) {
        for (const auto& p : r.residuals) {
            out << v << ',' << p.t << ',' << p.fold << ',' << format_double(p.eps_hat) << ','
                << format_double(p.xi_hat) << '\n';
        }
    }
}

void write_cate_coefficients(std::ostream& out, const DsmlResult& result) {
    out << "region,term,beta,std_err\n";
    for (const auto& [v, r] : result.regions) {
        if (!r.cate) continue;
        for (Eigen::Index j = 0; j < r.cate->beta.size(); ++j) {
            const auto& names = r.cate->condition_names;
            const std::string term =
                static_cast<std::size_t>(j) < names.size() ? names[static_cast<std::size_t>(j)] : "x" + std::to_string(j);
            out << v << ',' << term << ',' << format_double(r.cate->beta(j)) << ','
                << format_double(r.cate->beta_std_err(j)) << '\n';
        }
    }
}

void write_cate_series(std::ostream& out, const DsmlResult& result) {
    out << "region,t,theta_t\n";
    for (const auto& [v, r] : result.regions) {
        if (!r.cate) continue;
        for (const auto& [t, theta] : r.cate->theta_series) out << v << ',' << t << ',' << format_double(theta) << '\n';
    }
}

void write_skipped(std::ostream& out, const DsmlResult& result) {
    out << "region,reason\n";
    for (const auto& [v, why] : result.skipped) {
        std::string clean = why;
        for (char& c : clean) {
            if (c == ',' || c == '\n') c = ';';
        }
        out << v << ',' << clean << '\n';
    }
}

std::vector<OdDemand> read_demand(const std::string& path) {
    std::vector<OdDemand> out;
    csv::read_file(path, {"origin", "dest", "flow"}, [&](const csv::Row& row) {
        OdDemand q;
        q.origin = static_cast<RegionId>(csv::parse_int(row, 0, path));
        q.dest = static_cast<RegionId>(csv::parse_int(row, 1, path));
        q.flow = csv::parse_double(row, 2, path);
        if (!(q.flow >= 0.0)) throw InputError(path + ":" + std::to_string(row.line) + ": negative flow");
        out.push_back(q);
    });
    return out;
}

std::map<RegionId, double> read_region_speeds(const std::string& path) {
    std::map<RegionId, double> out;
    csv::read_file(path, {"region", "mph"}, [&](const csv::Row& row) {
        const auto v = static_cast<RegionId>(csv::parse_int(row, 0, path));
        if (!out.emplace(v, csv::parse_double(row, 1, path)).second) {
            throw InputError(path + ":" + std::to_string(row.line) + ": duplicate region " + std::to_string(v));
        }
    });
    return out;
}

void write_solution(std::ostream& out, const ReroutingInstance& inst, const FlowState& flows) {
    out << "origin,dest,drop_region,flow_kind,flow\n";
    const auto& ids = inst.graph.regions();
    for (const auto& od : inst.ods) {
        for (std::size_t j = 0; j < od.drop.size(); ++j) {
            const double x = flows(static_cast<Eigen::Index>(od.first_var + j));
            if (j > 0 && x == 0.0) continue;
            out << ids[od.origin] << ',' << ids[od.dest] << ',' << ids[od.drop[j]] << ','
                << (j == 0 ? "remain" : "detour") << ',' << format_double(x) << '\n';
        }
    }
}

void write_iterations(std::ostream& out, const std::vector<IterationRecord>& log) {
    out << "iteration,objective,lp_objective,step_norm,scale,clipped\n";
    for (const auto& r : log) {
        out << r.iteration << ',' << format_double(r.objective) << ',' << format_double(r.lp_objective) << ','
            << format_double(r.step_norm) << ',' << format_double(r.scale) << ',' << r.clipped << '\n';
    }
}

} // namespace curbflow
