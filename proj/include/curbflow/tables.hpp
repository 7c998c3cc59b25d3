#pragma once

#include "curbflow/dsml.hpp"
#include "curbflow/reroute.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace curbflow {

// `region,day_class,theta_hat,std_err,t_stat,p_value,n`
void write_effects(std::ostream& out, const std::map<RegionId, EffectEstimate>& effects);
std::map<RegionId, EffectEstimate> read_effects(const std::string& path);

// `region,t,fold,eps_hat,xi_hat`
void write_residuals(std::ostream& out, const DsmlResult& result);

// `region,term,beta,std_err` and `region,t,theta_t`
void write_cate_coefficients(std::ostream& out, const DsmlResult& result);
void write_cate_series(std::ostream& out, const DsmlResult& result);

// `region,reason`
void write_skipped(std::ostream& out, const DsmlResult& result);

// `origin,dest,flow`
std::vector<OdDemand> read_demand(const std::string& path);
// `region,mph`
std::map<RegionId, double> read_region_speeds(const std::string& path);

// `origin,dest,drop_region,flow_kind,flow`; zero detour flows are omitted.
void write_solution(std::ostream& out, const ReroutingInstance& inst, const FlowState& flows);

// `iteration,objective,lp_objective,step_norm,scale,clipped`
void write_iterations(std::ostream& out, const std::vector<IterationRecord>& log);

} // namespace curbflow
