#pragma once

#include "rejectsched/piecewise.hpp"
#include "rejectsched/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

namespace rejectsched::energy {

/// Speed-scaling constant for the flow+energy engine.
inline double gamma_of(double eps, double alpha) {
    if (!(eps > 0.0)) throw InvalidInput("epsilon must be positive");
    if (!(alpha > 1.0)) throw InvalidInput("alpha must exceed 1");
    const double a1 = alpha - 1.0;
    const double base = a1 + std::log(a1);
    if (!(base > 0.0))
        throw InvalidInput("alpha too close to 1: need alpha - 1 + ln(alpha - 1) > 0 (alpha > ~1.5671)");
    return std::pow(eps / (1.0 + eps), 1.0 / a1) / a1 * std::pow(base, a1 / alpha);
}

/// Competitive-ratio certificate num/den for given eps and alpha. The
/// denominator can be non-positive, in which case no finite bound follows.
struct RatioBound {
    double numerator = 0.0;
    double denominator = 0.0;

    bool finite() const { return denominator > 0.0; }
    double value() const { return finite() ? numerator / denominator : kInfinity; }
};

inline RatioBound ratio_bound(double eps, double alpha) {
    const double g = gamma_of(eps, alpha);
    RatioBound b;
    b.numerator = 2.0 + alpha / (g * (alpha - 1.0)) + std::pow(g, alpha);
    b.denominator = eps / (1.0 + eps) -
                    std::pow(eps / (g * (1.0 + eps)), alpha / (alpha - 1.0)) * std::pow(alpha - 1.0, -1.0 / (alpha - 1.0));
    return b;
}

/// Density order on machine i: higher w/p first, then release, then id.
inline bool density_precedes(const Job& a, const Job& b, MachineIndex i) {
    const double da = a.density(i), db = b.density(i);
    if (da != db) return da > db;
    return std::tie(a.release, a.id) < std::tie(b.release, b.id);
}

struct RunningJob {
    const Job* job = nullptr;
    Time start = 0.0;
    double speed = 0.0;
    Time end = 0.0;
    double volume = 0.0;   // p_ij
    double counter = 0.0;  // weight dispatched here since start
};

struct MachineStateEnergy {
    std::vector<const Job*> pending;  // density order, running job excluded
    std::optional<RunningJob> running;

    /// Remaining volume of the running job at t.
    double remaining_volume(Time t) const {
        if (!running) return 0.0;
        return std::max(0.0, running->volume - running->speed * (t - running->start));
    }
    double remaining_time(Time t) const { return running ? std::max(0.0, running->end - t) : 0.0; }
};

/// Speed chosen when a job starts: gamma * (total pending weight)^(1/alpha),
/// the pending weight including the job being started.
inline double speed_at_start(const std::vector<const Job*>& pending, double gamma, double alpha) {
    if (pending.empty()) throw InvalidInput("speed_at_start needs a non-empty pending set");
    double w = 0.0;
    for (const Job* j : pending) w += j->weight;
    return gamma * std::pow(w, 1.0 / alpha);
}

inline double speed_at_start(const MachineStateEnergy& state, double gamma, double alpha) {
    return speed_at_start(state.pending, gamma, alpha);
}

/// Dispatch estimate of j on machine i; the suffix weights W are taken with j
/// inserted into the density order, so W_j includes w_j.
inline double lambda_i_weighted(const Job& j, MachineIndex i, const MachineStateEnergy& state, double eps,
                                double gamma, double alpha) {
    if (!(eps > 0.0)) throw InvalidInput("epsilon must be positive");
    if (!(gamma > 0.0)) throw InvalidInput("gamma must be positive");
    std::vector<const Job*> order = state.pending;
    order.insert(std::upper_bound(order.begin(), order.end(), &j,
                                  [i](const Job* a, const Job* b) { return density_precedes(*a, *b, i); }),
                 &j);
    std::vector<double> suffix(order.size() + 1, 0.0);
    for (std::size_t k = order.size(); k-- > 0;) suffix[k] = suffix[k + 1] + order[k]->weight;

    const double pj = j.p(i);
    double ahead = pj / eps;
    double behind = 0.0;
    double wj_suffix = 0.0;
    bool seen = false;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (!seen) {
            ahead += order[k]->p(i) / (gamma * std::pow(suffix[k], 1.0 / alpha));
            if (order[k] == &j) {
                seen = true;
                wj_suffix = suffix[k];
            }
        } else {
            behind += order[k]->weight;
        }
    }
    return j.weight * ahead + behind * pj / (gamma * std::pow(wj_suffix, 1.0 / alpha));
}

struct DispatchDecision {
    MachineIndex machine = 0;
    double lambda_min = 0.0;
    double lambda_j = 0.0;
};

inline DispatchDecision dispatch_energy(const Job& j, const std::vector<MachineStateEnergy>& states, double eps,
                                        double gamma, double alpha) {
    DispatchDecision d;
    d.lambda_min = kInfinity;
    for (MachineIndex i = 0; i < states.size(); ++i) {
        const double l = lambda_i_weighted(j, i, states[i], eps, gamma, alpha);
        if (l < d.lambda_min) {
            d.lambda_min = l;
            d.machine = i;
        }
    }
    d.lambda_j = eps / (1.0 + eps) * d.lambda_min;
    return d;
}

struct EnergyFlowResult {
    Instance instance;
    double epsilon = 0.5;
    double alpha = 2.0;
    double gamma = 0.0;
    ScheduleTrace trace;
    std::map<JobId, double> lambda;
    std::vector<PiecewiseLinear> V;  // total fractional weight per machine
    double weighted_flow = 0.0;
    double energy = 0.0;
    double objective = 0.0;
    double rejected_weight_fraction = 0.0;

    const Job& job(JobId id) const {
        for (const auto& j : instance.jobs)
            if (j.id == id) return j;
        throw Error("unknown job " + std::to_string(id));
    }

    /// (eps / (gamma (1+eps) (alpha-1)))^(1/(alpha-1)).
    double u_coefficient() const {
        return std::pow(epsilon / (gamma * (1.0 + epsilon) * (alpha - 1.0)), 1.0 / (alpha - 1.0));
    }
    double V_at(MachineIndex i, Time t) const { return std::max(0.0, V.at(i)(t)); }
    double u(MachineIndex i, Time t) const { return u_coefficient() * std::pow(V_at(i, t), 1.0 / alpha); }
    double u_left(MachineIndex i, Time t) const {
        return u_coefficient() * std::pow(std::max(0.0, V.at(i).left_limit(t)), 1.0 / alpha);
    }

    double lambda_sum() const {
        double s = 0.0;
        for (const auto& [id, l] : lambda) s += l;
        return s;
    }
    /// Sum_i of the integral of u_i^alpha, which is linear in V.
    double u_alpha_integral() const {
        double s = 0.0;
        for (const auto& v : V) s += v.integral();
        return std::pow(u_coefficient(), alpha) * s;
    }
    double dual_objective() const { return lambda_sum() + (1.0 - alpha) * u_alpha_integral(); }
};

/// Fractional-weight function of one machine from a finished trace: pending
/// jobs weigh w, the running job decreases linearly, a rejected job keeps its
/// frozen fraction until its definitive finish.
inline PiecewiseLinear build_fractional_weight(const Instance& inst, const ScheduleTrace& tr, MachineIndex i) {
    std::vector<PiecewiseLinear::Piece> pieces;
    for (const auto& j : inst.jobs) {
        const auto& rec = tr.records.at(j.id);
        if (rec.machine != i) continue;
        const double p = j.p(i);
        pieces.push_back({j.release, rec.start, j.weight, 0.0});
        pieces.push_back({rec.start, rec.end, j.weight, -j.weight * rec.speed / p});
        if (is_rejection(rec.outcome))
            pieces.push_back({rec.end, tr.definitive_finish.at(j.id), j.weight * rec.remaining / p, 0.0});
    }
    return PiecewiseLinear(pieces);
}

/// Online run with density scheduling, speed scaling and the weight-counter
/// rejection policy. Completions at time t precede arrivals at t; an idle
/// machine starts its densest pending job right after each dispatch.
inline EnergyFlowResult simulate_flow_energy(const Instance& inst, double eps) {
    if (inst.model != Model::FlowEnergy) throw InvalidInput("simulate_flow_energy requires the flow-energy model");
    if (!inst.alpha || !(*inst.alpha > 1.0)) throw InvalidInput("alpha must exceed 1");
    if (!(eps > 0.0)) throw InvalidInput("epsilon must be positive");
    const double alpha = *inst.alpha;
    const double gamma = gamma_of(eps, alpha);

    EnergyFlowResult res;
    res.instance = inst;
    res.epsilon = eps;
    res.alpha = alpha;
    res.gamma = gamma;
    ScheduleTrace& tr = res.trace;
    std::vector<MachineStateEnergy> states(inst.machines);
    std::map<JobId, double> delay;

    auto start_next = [&](MachineIndex i, Time t) {
        auto& st = states[i];
        if (st.running || st.pending.empty()) return;
        const double s = speed_at_start(st, gamma, alpha);
        const Job* j = st.pending.front();
        st.pending.erase(st.pending.begin());
        st.running = RunningJob{j, t, s, t + j->p(i) / s, j->p(i), 0.0};
        tr.events.push_back({t, EventKind::Start, j->id, i});
    };

    auto close = [&](const RunningJob& k, MachineIndex i, Time end, Outcome o, double remaining) {
        tr.records[k.job->id] = ExecutionRecord{k.job->id, i, k.start, k.speed, end, o, remaining};
        tr.events.push_back({end, o == Outcome::Completed ? EventKind::Complete : EventKind::Reject, k.job->id, i});
        if (is_rejection(o)) tr.rejected_ids.insert(k.job->id);
    };

    auto arrive = [&](const Job& j) {
        const Time t = j.release;
        const DispatchDecision d = dispatch_energy(j, states, eps, gamma, alpha);
        const MachineIndex i = d.machine;
        auto& st = states[i];
        res.lambda[j.id] = d.lambda_j;
        delay[j.id] = 0.0;
        tr.events.push_back({t, EventKind::Dispatch, j.id, i});

        const std::vector<const Job*> present = st.pending;
        st.pending.insert(std::upper_bound(st.pending.begin(), st.pending.end(), &j,
                                           [i](const Job* a, const Job* b) { return density_precedes(*a, *b, i); }),
                          &j);

        if (st.running) {
            st.running->counter += j.weight;
            const RunningJob k = *st.running;
            if (k.counter > k.job->weight / eps) {
                const double rem_time = k.end - t;
                close(k, i, t, Outcome::RejectedWeightCounter, st.remaining_volume(t));
                delay[k.job->id] += rem_time;
                for (const Job* l : present) delay[l->id] += rem_time;
                st.running.reset();
            }
        }
        start_next(i, t);
    };

    std::size_t next = 0;
    while (true) {
        Time tc = kInfinity;
        MachineIndex ic = 0;
        for (MachineIndex i = 0; i < states.size(); ++i)
            if (states[i].running && states[i].running->end < tc) {
                tc = states[i].running->end;
                ic = i;
            }
        const Time ta = next < inst.jobs.size() ? inst.jobs[next].release : kInfinity;
        if (tc == kInfinity && ta == kInfinity) break;
        if (tc <= ta) {
            const RunningJob k = *states[ic].running;
            states[ic].running.reset();
            close(k, ic, k.end, Outcome::Completed, 0.0);
            start_next(ic, tc);
        } else {
            arrive(inst.jobs[next++]);
        }
    }

    double total_w = 0.0, rejected_w = 0.0;
    for (const auto& j : inst.jobs) {
        const auto& rec = tr.records.at(j.id);
        const Time finish = rec.end + delay[j.id];
        tr.definitive_finish[j.id] = finish;
        tr.events.push_back({finish, EventKind::DefinitiveFinish, j.id, rec.machine});
        res.weighted_flow += j.weight * (rec.end - j.release);
        res.energy += (rec.end - rec.start) * std::pow(rec.speed, alpha);
        total_w += j.weight;
        if (is_rejection(rec.outcome)) rejected_w += j.weight;
    }
    std::stable_sort(tr.events.begin(), tr.events.end(), [](const Event& a, const Event& b) { return a.time < b.time; });
    res.objective = res.weighted_flow + res.energy;
    tr.objective = res.objective;
    res.rejected_weight_fraction = total_w > 0.0 ? rejected_w / total_w : 0.0;
    for (MachineIndex i = 0; i < inst.machines; ++i) res.V.push_back(build_fractional_weight(inst, tr, i));
    return res;
}

/// Sorted distinct event times of a trace.
inline std::vector<Time> event_times(const ScheduleTrace& tr) {
    std::vector<Time> ts;
    for (const auto& e : tr.events) ts.push_back(e.time);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

/// Runs inst with and without j_extra on a single machine and reports whether
/// the fractional weight with the extra job dominates at every event time of
/// either run. Callers guarantee no release in inst after j_extra's.
inline bool monotonicity_probe(const Instance& inst, const Job& j_extra, double eps) {
    Instance base = inst;
    base.machines = 1;
    for (auto& j : base.jobs) j.proc.resize(1);
    Instance with = base;
    Job extra = j_extra;
    extra.proc.resize(1);
    with.jobs.push_back(extra);
    canonicalize(with);

    const auto a = simulate_flow_energy(with, eps);
    const auto b = simulate_flow_energy(base, eps);
    std::vector<Time> ts = event_times(a.trace);
    const auto tb = event_times(b.trace);
    ts.insert(ts.end(), tb.begin(), tb.end());
    for (Time t : ts) {
        const double vw = a.V_at(0, t), vo = b.V_at(0, t);
        if (vw < vo - 1e-9 * std::max(1.0, vo)) return false;
    }
    return true;
}

}  // namespace rejectsched::energy
