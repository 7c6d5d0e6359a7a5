#pragma once

#include "rejectsched/energy_min.hpp"
#include "rejectsched/flow_energy.hpp"
#include "rejectsched/flowtime.hpp"
#include "rejectsched/instance_io.hpp"
#include "rejectsched/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace rejectsched::verify {

struct Violation {
    std::string constraint;
    MachineIndex machine = 0;
    JobId job = -1;        // -1 for per-machine constraints
    Time time = 0.0;       // time-indexed constraints
    std::string where;     // configuration, for the energy constraints
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;    // rhs - lhs
};

struct VerifyReport {
    std::vector<Violation> violations;
    std::size_t checked_count = 0;
    double tolerance = 1e-9;
    double min_slack = kInfinity;

    bool certified() const { return violations.empty(); }

    /// Records one check of lhs <= rhs; returns false on a violation.
    bool check(const std::string& constraint, MachineIndex i, JobId j, Time t, double lhs, double rhs,
               const std::string& where = {}) {
        ++checked_count;
        const double slack = rhs - lhs;
        min_slack = std::min(min_slack, slack);
        if (lhs <= rhs + std::max(tolerance * std::abs(rhs), 1e-12)) return true;
        violations.push_back({constraint, i, j, t, where, lhs, rhs, slack});
        return false;
    }
};

inline Json to_json(const VerifyReport& r) {
    Json v = Json::array();
    for (const auto& x : r.violations) {
        Json e{{"constraint", x.constraint}, {"machine", x.machine}, {"lhs", x.lhs}, {"rhs", x.rhs}, {"slack", x.slack}};
        if (x.job >= 0) e["job"] = x.job;
        if (x.where.empty()) e["time"] = x.time;
        else e["configuration"] = x.where;
        v.push_back(std::move(e));
    }
    return Json{{"certified", r.certified()},
                {"checked", r.checked_count},
                {"tolerance", r.tolerance},
                {"min_slack", r.checked_count ? Json(r.min_slack) : Json(nullptr)},
                {"violations", std::move(v)}};
}

// ---------------------------------------------------------------------------
// Flow time
// ---------------------------------------------------------------------------

/// lambda_j/p_ij - beta_i(t) <= (t - r_j)/p_ij + 1 for every machine, job and
/// t >= r_j. Between event times beta is constant and the right side grows, so
/// checking at r_j and at each later event time (beta taken just after it)
/// covers every t.
inline VerifyReport verify_flow_duals(const flow::FlowResult& res, double eps) {
    (void)flow::inverse_epsilon(eps);
    VerifyReport rep;
    const auto times = flow::event_times(res.trace);
    for (MachineIndex i = 0; i < res.instance.machines; ++i)
        for (const auto& j : res.instance.jobs) {
            const double p = j.p(i);
            const double lj = res.lambda.at(j.id);
            auto one = [&](Time t) {
                rep.check("flow.dual", i, j.id, t, lj / p - res.beta[i](t), (t - j.release) / p + 1.0);
            };
            one(j.release);
            for (auto it = std::upper_bound(times.begin(), times.end(), j.release); it != times.end(); ++it) one(*it);
        }
    return rep;
}

// ---------------------------------------------------------------------------
// Flow plus energy
// ---------------------------------------------------------------------------

/// lambda_j/p_ij <= delta_ij (t - r_j + p_ij) + alpha u_i(t)^(alpha-1)
///                  + alpha/(gamma(alpha-1)) w_j^((alpha-1)/alpha)
/// at r_j, at every breakpoint of V_i after r_j, and at `grid_points` samples
/// inside each interval between them (the last sample is the left limit at
/// the interval's end). Failures seen only at interior samples get their own
/// constraint id.
inline VerifyReport verify_flow_energy_duals(const energy::EnergyFlowResult& res, double eps, double alpha,
                                             double gamma, int grid_points = 8) {
    if (!(eps > 0.0) || !(alpha > 1.0) || !(gamma > 0.0) || grid_points < 0)
        throw InvalidInput("verify_flow_energy_duals: invalid parameters");
    VerifyReport rep;
    const double coef = std::pow(eps / (gamma * (1.0 + eps) * (alpha - 1.0)), 1.0 / (alpha - 1.0));
    for (MachineIndex i = 0; i < res.instance.machines; ++i) {
        const auto& V = res.V.at(i);
        const auto& breaks = V.breakpoints();
        auto u_pow = [&](double v) { return alpha * std::pow(coef * std::pow(std::max(0.0, v), 1.0 / alpha), alpha - 1.0); };
        for (const auto& j : res.instance.jobs) {
            const double p = j.p(i);
            const double lhs = res.lambda.at(j.id) / p;
            const double base = alpha / (gamma * (alpha - 1.0)) * std::pow(j.weight, (alpha - 1.0) / alpha);
            auto rhs = [&](Time t, double v) { return j.density(i) * (t - j.release + p) + u_pow(v) + base; };

            std::vector<Time> pts{j.release};
            for (auto it = std::upper_bound(breaks.begin(), breaks.end(), j.release); it != breaks.end(); ++it)
                pts.push_back(*it);
            for (Time t : pts) rep.check("flow_energy.dual.event", i, j.id, t, lhs, rhs(t, V(t)));
            for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
                const Time t0 = pts[k], t1 = pts[k + 1];
                for (int g = 1; g <= grid_points; ++g) {
                    const Time t = g == grid_points ? t1 : t0 + (t1 - t0) * g / grid_points;
                    const double v = g == grid_points ? V.left_limit(t1) : V(t);
                    rep.check("flow_energy.dual.interior", i, j.id, t, lhs, rhs(t, v));
                }
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Energy with deadlines
// ---------------------------------------------------------------------------

namespace detail {

inline double config_energy(const std::vector<const emin::Strategy*>& config, const emin::PowerFunction& P,
                            double step) {
    long end = 0;
    for (const auto* s : config) end = std::max(end, s->first_slot + s->slots);
    std::vector<double> load(static_cast<std::size_t>(end), 0.0);
    for (const auto* s : config)
        for (long k = s->first_slot; k < s->first_slot + s->slots; ++k) load[static_cast<std::size_t>(k)] += s->speed;
    double e = 0.0;
    for (double u : load)
        if (u > 0.0) e += P(u) * step;
    return e;
}

}  // namespace detail

/// delta_j <= beta_ijk for every recorded strategy, and for each machine i
/// gamma_i + sum_{(i,j,k) in A} beta_ijk <= f_i(A) over configurations A (each
/// job absent or on one of its strategies on i). All configurations when
/// there are at most `max_configs` of them, otherwise `max_configs` uniform
/// samples drawn from `seed`.
inline VerifyReport verify_energy_config_duals(const emin::GreedyResult& r, std::size_t max_configs,
                                               std::uint64_t seed = 1) {
    VerifyReport rep;
    const auto& d = r.duals;
    const double step = r.grids.time_step;
    for (const auto& j : r.instance.jobs)
        for (const auto& sd : d.beta.at(j.id))
            rep.check("energy.delta_le_beta", sd.strategy.machine, j.id, sd.strategy.start(step), d.delta.at(j.id),
                      sd.beta);

    for (MachineIndex i = 0; i < r.instance.machines; ++i) {
        std::vector<std::vector<const emin::StrategyDual*>> options;
        double count = 1.0;
        for (const auto& j : r.instance.jobs) {
            std::vector<const emin::StrategyDual*> o;
            for (const auto& sd : d.beta.at(j.id))
                if (sd.strategy.machine == i) o.push_back(&sd);
            if (o.empty()) continue;
            count *= static_cast<double>(o.size() + 1);
            options.push_back(std::move(o));
        }
        const double gamma_i = d.gamma_m.at(i);
        std::vector<std::size_t> pick(options.size(), 0);  // 0: absent, k: options[.][k-1]

        auto check_pick = [&] {
            std::vector<const emin::Strategy*> config;
            double sum = gamma_i;
            std::string where;
            for (std::size_t k = 0; k < options.size(); ++k) {
                if (pick[k] == 0) continue;
                const auto* sd = options[k][pick[k] - 1];
                config.push_back(&sd->strategy);
                sum += sd->beta;
                where += (where.empty() ? "" : ",") + std::to_string(sd->strategy.job) + "@" +
                         std::to_string(sd->strategy.start(step)) + "/" + std::to_string(sd->strategy.speed);
            }
            rep.check("energy.config", i, -1, 0.0, sum, detail::config_energy(config, r.powers.at(i), step),
                      where.empty() ? "{}" : "{" + where + "}");
        };

        if (count <= static_cast<double>(max_configs)) {
            while (true) {
                check_pick();
                std::size_t k = 0;
                for (; k < pick.size(); ++k) {
                    if (++pick[k] <= options[k].size()) break;
                    pick[k] = 0;
                }
                if (k == pick.size()) break;
            }
        } else {
            Rng rng(seed + i);
            for (std::size_t s = 0; s < max_configs; ++s) {
                for (std::size_t k = 0; k < options.size(); ++k)
                    pick[k] = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(options[k].size())));
                check_pick();
            }
        }
    }
    return rep;
}

}  // namespace rejectsched::verify
